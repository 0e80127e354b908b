#include "owi/quadrature.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <map>
#include <memory>
#include <mutex>

#include "owi/constants.hpp"
#include "owi/errors.hpp"

namespace owi {

namespace {

// Orthonormal Hermite polynomials under weight exp(-x^2):
//   p_0 = pi^(-1/4),  p_1 = sqrt(2) x p_0,
//   p_k = x sqrt(2/k) p_{k-1} - sqrt((k-1)/k) p_{k-2}.
// Their values grow like exp(x^2/2) near the extreme nodes, far beyond double
// range for n ~ 1000, so the evaluation strips powers of 1e150 into a counter
// and reports log-magnitudes that stay finite.
struct HermiteEval {
    double pn;     // p_n(x)   scaled by 1e-150^rescales
    double pnm1;   // p_{n-1}(x), same scaling
    int rescales;  // number of 1e150 factors stripped
};

HermiteEval evaluate_hermite(int n, double x) {
    const double p0 = std::pow(constants::pi, -0.25);
    if (n == 0)
        return {p0, 0.0, 0};
    double pkm1 = p0;
    double pk = std::sqrt(2.0) * x * p0;
    int rescales = 0;
    for (int k = 2; k <= n; ++k) {
        const double pkp1 =
            x * std::sqrt(2.0 / k) * pk - std::sqrt((k - 1.0) / k) * pkm1;
        pkm1 = pk;
        pk = pkp1;
        if (std::abs(pk) > 1e150) {
            pk *= 1e-150;
            pkm1 *= 1e-150;
            ++rescales;
        }
    }
    return {pk, pkm1, rescales};
}

GaussHermiteRule compute_rule(int n) {
    if (n < 1)
        throw validation_error("gauss_hermite: node count must be >= 1");

    GaussHermiteRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);

    if (n == 1) {
        rule.nodes[0] = 0.0;
        rule.weights[0] = std::sqrt(constants::pi);
        return rule;
    }

    // Golub-Welsch seed: the nodes are the eigenvalues of the symmetric
    // tridiagonal Jacobi matrix with zero diagonal and off-diagonal
    // beta_k = sqrt(k/2). Eigenvalues-only keeps this O(n^2).
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd sub(n - 1);
    for (int k = 1; k < n; ++k)
        sub[k - 1] = std::sqrt(k / 2.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
    Eigen::VectorXd x = es.eigenvalues(); // sorted ascending

    for (int i = 0; i < n; ++i) {
        double xi = x[i];
        // Newton polish: p_n'(x) = sqrt(2n) p_{n-1}(x), and the common
        // rescaling factor cancels in the ratio.
        for (int it = 0; it < 4; ++it) {
            const HermiteEval h = evaluate_hermite(n, xi);
            const double dx = h.pn / (std::sqrt(2.0 * n) * h.pnm1);
            xi -= dx;
            if (std::abs(dx) <= 1e-15 * std::max(1.0, std::abs(xi)))
                break;
        }
        rule.nodes[i] = xi;
    }

    // The rule is exactly symmetric; averaging the polished mirror pairs
    // removes last-bit asymmetry so downstream symmetry checks are exact.
    for (int i = 0; i < n / 2; ++i) {
        const int j = n - 1 - i;
        const double s = 0.5 * (rule.nodes[j] - rule.nodes[i]);
        rule.nodes[i] = -s;
        rule.nodes[j] = s;
    }
    if (n % 2 == 1)
        rule.nodes[n / 2] = 0.0;

    // Christoffel weights: w_i = 1 / (n * p_{n-1}(x_i)^2), evaluated in log
    // space so extreme nodes underflow to a clean 0 instead of breaking.
    for (int i = 0; i < n; ++i) {
        const HermiteEval h = evaluate_hermite(n, rule.nodes[i]);
        const double log_pnm1 =
            std::log(std::abs(h.pnm1)) + h.rescales * 150.0 * std::log(10.0);
        rule.weights[i] = std::exp(-std::log(double(n)) - 2.0 * log_pnm1);
    }
    // Mirror-pair weights are equal by symmetry; enforce it exactly.
    for (int i = 0; i < n / 2; ++i) {
        const int j = n - 1 - i;
        const double w = 0.5 * (rule.weights[i] + rule.weights[j]);
        rule.weights[i] = w;
        rule.weights[j] = w;
    }
    return rule;
}

} // namespace

const GaussHermiteRule& gauss_hermite(int n) {
    static std::mutex mutex;
    static std::map<int, std::unique_ptr<const GaussHermiteRule>> cache;
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(n);
    if (it == cache.end()) {
        it = cache.emplace(n, std::make_unique<const GaussHermiteRule>(
                                  compute_rule(n)))
                 .first;
    }
    return *it->second;
}

} // namespace owi
