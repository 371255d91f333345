#pragma once

#include <vector>

namespace msf::poly {

// Coefficients are ascending: c[0] + c[1] x + ... + c[n] x^n.

double eval(const std::vector<double>& c, double x);

std::vector<double> derivative(const std::vector<double>& c);

// p(x) -> p(x + shift) (Taylor shift by Horner's scheme, exact in exact
// arithmetic).
std::vector<double> taylor_shift(const std::vector<double>& c, double shift);

// p(x) -> p(s*x): c[k] *= s^k.
std::vector<double> stretch(const std::vector<double>& c, double s);

// Real parts of all complex roots, found as eigenvalues of the companion
// matrix. Trailing zero coefficients are trimmed; constant polynomials yield
// {}. Callers with wildly scaled coefficients should rescale the variable
// first (tiny leading coefficients manufacture spurious far-out roots).
std::vector<double> root_real_parts(const std::vector<double>& c);

// Exact binomial coefficient as double (intended range n <= 32).
double binomial(int n, int k);

}  // namespace msf::poly
