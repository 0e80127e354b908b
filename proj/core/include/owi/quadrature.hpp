#pragma once

#include <vector>

namespace owi {

// Gauss-Hermite rule for weight exp(-x^2) on (-inf, inf):
//   integral f(x) exp(-x^2) dx  ~=  sum_i weights[i] * f(nodes[i])
// Nodes are sorted ascending and exactly symmetric about 0; the weights sum
// to sqrt(pi). For large n the extreme-node weights underflow double range
// and are stored as exact 0 — harmless for integration of bounded functions.
struct GaussHermiteRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

// Returns the n-point rule, computed on first use and cached for the process
// lifetime (thread-safe). n >= 1.
//
// Implementation note: nodes seed from the eigenvalues of the Jacobi matrix
// of the orthonormal Hermite recurrence and are polished by Newton steps on
// an exponent-stripped evaluation of that recurrence. The non-normalized
// Hermite recurrence overflows double range near n = 512, so the orthonormal
// form is load-bearing, not a style choice.
const GaussHermiteRule& gauss_hermite(int n);

} // namespace owi
