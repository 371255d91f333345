#include "msf/poly.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace msf::poly {

double eval(const std::vector<double>& c, double x) {
    double acc = 0.0;
    for (size_t i = c.size(); i-- > 0;) acc = acc * x + c[i];
    return acc;
}

std::vector<double> derivative(const std::vector<double>& c) {
    if (c.size() <= 1) return {0.0};
    std::vector<double> d(c.size() - 1);
    for (size_t i = 1; i < c.size(); ++i) d[i - 1] = c[i] * static_cast<double>(i);
    return d;
}

std::vector<double> taylor_shift(const std::vector<double>& c, double shift) {
    // Synthetic division: repeatedly divide by (x - (-shift)).
    std::vector<double> out = c;
    const size_t n = c.size();
    for (size_t i = 0; i + 1 < n; ++i)
        for (size_t j = n - 1; j > i; --j) out[j - 1] += shift * out[j];
    return out;
}

std::vector<double> stretch(const std::vector<double>& c, double s) {
    std::vector<double> out = c;
    double p = 1.0;
    for (size_t i = 1; i < out.size(); ++i) {
        p *= s;
        out[i] *= p;
    }
    return out;
}

std::vector<double> root_real_parts(const std::vector<double>& c) {
    std::vector<double> cc = c;
    while (cc.size() > 1 && cc.back() == 0.0) cc.pop_back();
    const int deg = static_cast<int>(cc.size()) - 1;
    if (deg < 1) return {};
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(deg, deg);
    for (int i = 1; i < deg; ++i) companion(i, i - 1) = 1.0;
    for (int i = 0; i < deg; ++i) companion(i, deg - 1) = -cc[i] / cc[deg];
    Eigen::VectorXcd ev = companion.eigenvalues();
    std::vector<double> out(deg);
    for (int i = 0; i < deg; ++i) out[i] = ev[i].real();
    return out;
}

double binomial(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    double acc = 1.0;
    for (int i = 1; i <= k; ++i)
        acc = acc * static_cast<double>(n - k + i) / static_cast<double>(i);
    return std::round(acc);
}

}  // namespace msf::poly
