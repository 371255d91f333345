#include "msf/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "msf/errors.hpp"

namespace msf::quadrature {
namespace {

// QUADPACK 15-point Kronrod rule with embedded 7-point Gauss rule.
// xgk: positive abscissae (odd indices are the Gauss points).
constexpr int kHalf = 8;
constexpr double xgk[kHalf] = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
};
constexpr double wgk[kHalf] = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
};
constexpr double wg[4] = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
};

// One G7/K15 evaluation of all components on [a, b]. k15 and err are
// caller-provided arrays of length dim; err is the QUADPACK-style
// (200|g7-k15|)^{3/2} local estimate.
void gk15(const VectorFn& f, int dim, double a, double b, double* k15,
          double* err, double* buf) {
    const double mid = 0.5 * (a + b);
    const double hw = 0.5 * (b - a);
    double* fc = buf;            // dim values at the right node
    double* fs = buf + dim;      // dim values at the mirrored node
    double* g7 = buf + 2 * dim;  // embedded Gauss sums
    f(mid, fc);
    for (int j = 0; j < dim; ++j) {
        k15[j] = wgk[kHalf - 1] * fc[j];
        g7[j] = wg[3] * fc[j];
    }
    for (int i = 0; i < kHalf - 1; ++i) {
        const double dx = hw * xgk[i];
        f(mid + dx, fc);
        f(mid - dx, fs);
        for (int j = 0; j < dim; ++j) {
            const double pair = fc[j] + fs[j];
            k15[j] += wgk[i] * pair;
            if (i % 2 == 1) g7[j] += wg[i / 2] * pair;
        }
    }
    for (int j = 0; j < dim; ++j) {
        k15[j] *= hw;
        g7[j] *= hw;
        double e = 200.0 * std::fabs(k15[j] - g7[j]);
        err[j] = e * std::sqrt(e);
        if (!std::isfinite(k15[j]))
            throw QuadratureError("non-finite integrand value encountered");
    }
}

}  // namespace

QuadratureResult integrate(const VectorFn& f, int dim, double a, double b,
                           const QuadratureConfig& cfg,
                           const std::vector<double>& seeds) {
    QuadratureResult res;
    res.values.assign(dim, 0.0);
    if (!(a < b)) return res;

    // Initial partition: [a,b] split at any seed points inside it.
    std::vector<double> cuts{a};
    for (double s : seeds)
        if (s > a && s < b) cuts.push_back(s);
    cuts.push_back(b);
    std::sort(cuts.begin(), cuts.end());

    struct Segment {
        double lo, hi;
    };
    std::vector<Segment> stack;
    for (size_t i = 0; i + 1 < cuts.size(); ++i)
        if (cuts[i + 1] > cuts[i]) stack.push_back({cuts[i], cuts[i + 1]});

    std::vector<double> k15(dim), err(dim), buf(3 * dim);

    // First sweep estimates the magnitude of each component so the relative
    // tolerance can be applied against the global scale, not per-interval.
    std::vector<double> scale(dim, 0.0);
    for (const Segment& s : stack) {
        gk15(f, dim, s.lo, s.hi, k15.data(), err.data(), buf.data());
        for (int j = 0; j < dim; ++j) scale[j] += std::fabs(k15[j]);
    }

    const double total_width = b - a;
    std::vector<double> err_total(dim, 0.0);
    int used = 0;
    while (!stack.empty()) {
        const Segment s = stack.back();
        stack.pop_back();
        if (++used > cfg.max_intervals)
            throw QuadratureError("adaptive quadrature interval budget exhausted");
        gk15(f, dim, s.lo, s.hi, k15.data(), err.data(), buf.data());
        const double frac = (s.hi - s.lo) / total_width;
        bool ok = true;
        for (int j = 0; j < dim; ++j) {
            const double budget =
                frac * std::max(cfg.abs_tol, cfg.rel_tol * scale[j]);
            if (err[j] > budget) {
                ok = false;
                break;
            }
        }
        const double mid = 0.5 * (s.lo + s.hi);
        if (!ok && mid > s.lo && mid < s.hi) {
            stack.push_back({mid, s.hi});
            stack.push_back({s.lo, mid});
            continue;
        }
        // Accepted (or interval hit floating-point resolution).
        for (int j = 0; j < dim; ++j) {
            res.values[j] += k15[j];
            err_total[j] += err[j];
        }
        ++res.intervals;
    }
    res.error = *std::max_element(err_total.begin(), err_total.end());
    return res;
}

QuadratureResult integrate_real_line(const VectorFn& f, int dim,
                                     const QuadratureConfig& cfg,
                                     const std::vector<double>& seeds) {
    // t -> x map and its Jacobian for x = t/(1-t^2).
    auto wrapped = [&f, dim](double t, double* out) {
        const double one_m = 1.0 - t * t;
        // Deep refinement against a slowly-decaying tail can round a node to
        // exactly t = +-1 (x = inf). The transformed integrand is integrable
        // there, so drop the measure-zero endpoint instead of evaluating it.
        if (one_m <= 0.0) {
            for (int j = 0; j < dim; ++j) out[j] = 0.0;
            return;
        }
        const double x = t / one_m;
        const double jac = (1.0 + t * t) / (one_m * one_m);
        f(x, out);
        for (int j = 0; j < dim; ++j) out[j] *= jac;
    };
    // Map seed x-locations into t-space and add default tail splits so the
    // first sweep sees both the core and the compressed tails.
    std::vector<double> t_seeds{-0.99, -0.9, -0.5, 0.0, 0.5, 0.9, 0.99};
    for (double x : seeds) {
        double t = (x == 0.0)
                       ? 0.0
                       : (std::sqrt(1.0 + 4.0 * x * x) - 1.0) / (2.0 * x);
        t_seeds.push_back(t);
    }
    return integrate(wrapped, dim, -1.0, 1.0, cfg, t_seeds);
}

double integrate(const std::function<double(double)>& f, double a, double b,
                 const QuadratureConfig& cfg, const std::vector<double>& seeds) {
    auto vf = [&f](double x, double* out) { out[0] = f(x); };
    return integrate(VectorFn(vf), 1, a, b, cfg, seeds).values[0];
}

double integrate_real_line(const std::function<double(double)>& f,
                           const QuadratureConfig& cfg,
                           const std::vector<double>& seeds) {
    auto vf = [&f](double x, double* out) { out[0] = f(x); };
    return integrate_real_line(VectorFn(vf), 1, cfg, seeds).values[0];
}

}  // namespace msf::quadrature
