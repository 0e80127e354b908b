#include "owi/spectrum.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <optional>
#include <sstream>
#include <thread>
#include <utility>

#include "owi/constants.hpp"
#include "owi/errors.hpp"
#include "owi/liouville.hpp"
#include "owi/quadrature.hpp"

namespace owi {

namespace {

// Solves the steady state seen by an atom moving at velocity v, with the
// probe detuning overridden by delta_pr. Copropagating beams: both fields
// are shifted with the same sign, each with its own wavevector.
SystemParams shifted_params(const SystemParams& params, double delta_pr, double v) {
    SystemParams s = params;
    const double k_pr = constants::two_pi / params.lambda_pr;
    const double k_pu = constants::two_pi / params.lambda_pu;
    s.delta_pr = delta_pr - k_pr * v;
    s.delta_pu = params.delta_pu - k_pu * v;
    return s;
}

double gain_prefactor(const SystemParams& params, const SpectrumParams& sp) {
    return 3.0 * params.lambda_pr * params.lambda_pr * sp.number_density *
           sp.path_length * params.gamma3 / (4.0 * constants::pi);
}

void require_probe(const SystemParams& params) {
    if (!(params.omega_pr > 0.0)) {
        throw validation_error(
            "susceptibility requires omega_pr > 0 (chi is normalized per unit "
            "probe drive)");
    }
}

} // namespace

double susceptibility_at(const SystemParams& params, const SpectrumParams& sp,
                         double delta_pr, double v) {
    require_probe(params);
    validate(sp);

    const SystemParams s = shifted_params(params, delta_pr, v);
    const Liouvillian l = build_liouvillian(s, EquationMode::TraceConserving);
    const DensityMatrix rho = steady_state(l);
    return gain_prefactor(params, sp) * std::imag(rho(0, 2)) / params.omega_pr;
}

double closed_form_susceptibility(const SystemParams& params,
                                  const SpectrumParams& sp, double delta_pr,
                                  double v, bool strict_literal) {
    require_probe(params);
    validate(sp);

    const SystemParams s = shifted_params(params, delta_pr, v);
    const Liouvillian l = build_liouvillian(s, EquationMode::TraceConserving);
    const DensityMatrix rho = steady_state(l);

    double im_rho13;
    if (strict_literal) {
        // Printed shorthand: the drive combination is treated as real, so
        // only Re(rho43) survives and the line shape is a bare Lorentzian.
        const double d = 0.5 * (s.r34 + s.r43) + s.w12 + s.gamma3;
        const double combination =
            s.omega_pr * std::real(rho(2, 2) - rho(0, 0)) +
            s.omega_pu * std::real(rho(3, 2));
        im_rho13 = 2.0 * d * combination /
                   (d * d + 4.0 * s.delta_pr * s.delta_pr);
    } else {
        im_rho13 = std::imag(probe_coherence_closed_form(rho, s));
    }
    return gain_prefactor(params, sp) * im_rho13 / params.omega_pr;
}

AverageResult doppler_average(const SystemParams& params,
                              const SpectrumParams& sp, double delta_pr,
                              int node_cap, bool literal_integral) {
    require_probe(params);
    validate(sp);
    if (node_cap < sp.quadrature_nodes) {
        node_cap = sp.quadrature_nodes;
    }

    const double u = params.u;
    const double rescale = literal_integral ? u * std::sqrt(constants::pi) : 1.0;

    AverageResult result;
    if (u == 0.0) {
        // Degenerate thermal width: every atom sits at v = 0 and the
        // normalized average collapses onto the single-velocity value.
        result.value = rescale * susceptibility_at(params, sp, delta_pr, 0.0);
        result.converged = true;
        result.nodes_used = sp.quadrature_nodes;
        result.last_rel_change = 0.0;
        return result;
    }

    // G_n = (1/sqrt(pi)) sum_i w_i chi(delta_pr, u x_i) after the change of
    // variable v = u x. Successive doublings share no nodes (Gauss-Hermite
    // grids are not nested), so each level is an independent estimate.
    auto evaluate = [&](int n) {
        const GaussHermiteRule& rule = gauss_hermite(n);
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
            if (rule.weights[i] == 0.0) {
                continue; // extreme nodes whose weights underflow to zero
            }
            acc += rule.weights[i] *
                   susceptibility_at(params, sp, delta_pr, u * rule.nodes[i]);
        }
        return acc / std::sqrt(constants::pi);
    };

    int n = std::max(sp.quadrature_nodes, 8);
    double current = evaluate(n);
    result.nodes_used = n;
    result.value = rescale * current;
    result.last_rel_change = 0.0;
    result.converged = false;

    while (2 * n <= node_cap) {
        const int next = 2 * n;
        const double refined = evaluate(next);
        const double change = std::abs(refined - current);
        const double scale = std::max(std::abs(refined), std::abs(current));
        n = next;
        current = refined;
        result.nodes_used = n;
        result.value = rescale * current;
        result.last_rel_change = change / std::max(scale, 1e-300);
        if (change <= std::max(1e-6 * scale, 1e-12)) {
            result.converged = true;
            break;
        }
    }
    return result;
}

SpectrumResult spectrum(const SystemParams& params, const SpectrumParams& sp,
                        int jobs) {
    require_probe(params);
    validate(params);
    validate(sp);
    if (jobs < 1) {
        throw validation_error("spectrum: jobs must be at least 1");
    }

    const std::size_t n = sp.detuning_grid.size();
    SpectrumResult result;
    result.detunings = sp.detuning_grid;
    result.gain.assign(n, 0.0);
    result.transmission.assign(n, 1.0);
    result.params = params;
    result.spectrum_params = sp;

    std::vector<std::optional<std::string>> point_warnings(n);
    std::vector<std::optional<std::string>> point_errors(n);

    // Grid points are pure functions of the inputs; a shared atomic cursor
    // hands out indices and every worker writes only its own slots, so the
    // result is identical for any job count or scheduling order.
    std::atomic<std::size_t> cursor{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = cursor.fetch_add(1);
            if (i >= n) {
                return;
            }
            try {
                const AverageResult avg =
                    doppler_average(params, sp, sp.detuning_grid[i]);
                result.gain[i] = avg.value;
                result.transmission[i] = std::exp(avg.value);
                if (!avg.converged) {
                    std::ostringstream w;
                    w << "grid point " << i << " (detuning "
                      << sp.detuning_grid[i] << " rad/s): Doppler average not "
                      << "converged at " << avg.nodes_used
                      << " nodes (last relative change " << avg.last_rel_change
                      << ")";
                    point_warnings[i] = w.str();
                }
            } catch (const std::exception& e) {
                point_errors[i] = e.what();
            }
        }
    };

    const int pool = static_cast<int>(std::min<std::size_t>(jobs, std::max<std::size_t>(n, 1)));
    if (pool <= 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        threads.reserve(pool);
        for (int t = 0; t < pool; ++t) {
            threads.emplace_back(worker);
        }
        for (auto& t : threads) {
            t.join();
        }
    }

    std::size_t failure_count = 0;
    std::ostringstream failures;
    for (std::size_t i = 0; i < n; ++i) {
        if (point_errors[i]) {
            if (failure_count++ > 0) {
                failures << "; ";
            }
            failures << "grid point " << i << ": " << *point_errors[i];
        }
    }
    if (failure_count > 0) {
        std::ostringstream msg;
        msg << "spectrum: " << failure_count << " of " << n
            << " grid points failed: " << failures.str();
        throw solver_error(msg.str());
    }

    for (std::size_t i = 0; i < n; ++i) {
        if (point_warnings[i]) {
            result.warnings.push_back(*point_warnings[i]);
        }
    }
    return result;
}

} // namespace owi
