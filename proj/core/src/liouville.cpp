#include "owi/liouville.hpp"

#include <boost/numeric/odeint/stepper/controlled_runge_kutta.hpp>
#include <boost/numeric/odeint/stepper/generation.hpp>
#include <boost/numeric/odeint/stepper/runge_kutta_cash_karp54.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <sstream>
#include <vector>

#include "owi/errors.hpp"

namespace owi {

namespace {

using Complex = std::complex<double>;
using Matrix16 = Eigen::Matrix<Complex, 16, 16>;
using Vector16 = Eigen::Matrix<Complex, 16, 1>;

constexpr Complex kI{0.0, 1.0};

// Column stacking: component (i, j) of the 4x4 density matrix sits at
// index i + 4 j of the state vector (0-based), which is exactly the
// memory layout of a column-major Eigen matrix.
constexpr int idx(int i, int j) { return i + 4 * j; }

double infinity_norm(const Matrix16& m) {
    return m.cwiseAbs().rowwise().sum().maxCoeff();
}

double max_abs_derivative(const DensityMatrix& rho, const Liouvillian& liouvillian) {
    return rhs(rho, liouvillian).cwiseAbs().maxCoeff();
}

} // namespace

Liouvillian build_liouvillian(const SystemParams& params, EquationMode mode) {
    validate(params);

    const double om_pr = params.omega_pr;
    const double om_pu = params.omega_pu;
    const double d_pr = params.delta_pr;
    const double d_pu = params.delta_pu;
    const double d_hf = params.delta_hfs;
    const double g3 = params.gamma3;
    const double g4 = params.gamma4_value();
    const double w = params.w12;
    const double r34 = params.r34;
    const double r43 = params.r43;
    const double gl = params.gamma_laser;

    // Directional population transfer between the excited states; every
    // coherence involving |3> or |4> dephases with the mean rate.
    const double rbar = 0.5 * (r34 + r43);

    // Total coherence decay rates: half the population loss rate of each
    // end of the coherence, plus the laser-linewidth term on the optical
    // coherences (the ones the fields create from the driven ground state).
    const Complex c13 = 0.5 * (rbar + w + g3) + gl; // rho_13 / rho_31
    const Complex c14 = 0.5 * (rbar + w + g4) + gl; // rho_14 / rho_41
    const Complex c23 = 0.5 * (rbar + w + g3);      // rho_23 / rho_32
    const Complex c24 = 0.5 * (rbar + w + g4);      // rho_24 / rho_42
    const Complex c34 = 0.5 * (r34 + r43 + g3 + g4); // rho_34 / rho_43

    Liouvillian result;
    result.mode = mode;
    result.params = params;
    Matrix16& m = result.matrix;
    m.setZero();

    // add(i,j, k,l, c): contribute c * rho_kl to d(rho_ij)/dt.
    auto add = [&m](int i, int j, int k, int l, const Complex& c) {
        m(idx(i, j), idx(k, l)) += c;
    };

    // Populations. Spontaneous decay from each excited state branches
    // equally into the two ground states; the ground-exchange term relaxes
    // rho_11 towards rho_22 at w12 (and vice versa in conserving mode).
    add(0, 0, 1, 1, w);
    add(0, 0, 0, 0, -w);
    add(0, 0, 2, 2, 0.5 * g3);
    add(0, 0, 3, 3, 0.5 * g4);
    add(0, 0, 0, 2, -kI * om_pr);
    add(0, 0, 2, 0, kI * om_pr);
    add(0, 0, 0, 3, -kI * om_pu);
    add(0, 0, 3, 0, kI * om_pu);

    add(1, 1, 2, 2, 0.5 * g3);
    add(1, 1, 3, 3, 0.5 * g4);
    if (mode == EquationMode::TraceConserving) {
        add(1, 1, 0, 0, w);
        add(1, 1, 1, 1, -w);
    }

    add(2, 2, 2, 2, -Complex(r34 + g3));
    add(2, 2, 3, 3, r43);
    add(2, 2, 0, 2, kI * om_pr);
    add(2, 2, 2, 0, -kI * om_pr);

    add(3, 3, 2, 2, r34);
    add(3, 3, 3, 3, -Complex(r43 + g4));
    add(3, 3, 0, 3, kI * om_pu);
    add(3, 3, 3, 0, -kI * om_pu);

    // Ground-state coherence (no field couples |2>, so these are fed only
    // through the optical coherences of |2>).
    add(0, 1, 0, 1, -(w + kI * d_hf));
    add(0, 1, 2, 1, kI * om_pr);
    add(0, 1, 3, 1, kI * om_pu);

    add(1, 0, 1, 0, -(w - kI * d_hf));
    add(1, 0, 1, 2, -kI * om_pr);
    add(1, 0, 1, 3, -kI * om_pu);

    // Optical coherences of the driven ground state. The pump cross-term
    // (om_pu * rho_43 feeding rho_13) is the amplification channel.
    add(0, 2, 0, 2, -(c13 + kI * d_pr));
    add(0, 2, 0, 0, -kI * om_pr);
    add(0, 2, 2, 2, kI * om_pr);
    add(0, 2, 3, 2, kI * om_pu);

    add(2, 0, 2, 0, -(c13 - kI * d_pr));
    add(2, 0, 0, 0, kI * om_pr);
    add(2, 0, 2, 2, -kI * om_pr);
    add(2, 0, 2, 3, -kI * om_pu);

    add(0, 3, 0, 3, -(c14 + kI * d_pu));
    add(0, 3, 2, 3, kI * om_pr);
    add(0, 3, 3, 3, kI * om_pu);
    add(0, 3, 0, 0, -kI * om_pu);

    add(3, 0, 3, 0, -(c14 - kI * d_pu));
    add(3, 0, 3, 2, -kI * om_pr);
    add(3, 0, 3, 3, -kI * om_pu);
    add(3, 0, 0, 0, kI * om_pu);

    // Optical coherences of the spectator ground state.
    add(1, 2, 1, 2, -(c23 - kI * d_hf + kI * d_pr));
    add(1, 2, 1, 0, -kI * om_pr);

    add(2, 1, 2, 1, -(c23 + kI * d_hf - kI * d_pr));
    add(2, 1, 0, 1, kI * om_pr);

    add(1, 3, 1, 3, -(c24 - kI * d_hf + kI * d_pu));
    add(1, 3, 1, 0, -kI * om_pu);

    add(3, 1, 3, 1, -(c24 + kI * d_hf - kI * d_pu));
    add(3, 1, 0, 1, kI * om_pu);

    // Excited-state coherence, rotating at the two-photon difference.
    add(2, 3, 2, 3, -(c34 - kI * d_pr + kI * d_pu));
    add(2, 3, 0, 3, kI * om_pr);
    add(2, 3, 2, 0, -kI * om_pu);

    add(3, 2, 3, 2, -(c34 + kI * d_pr - kI * d_pu));
    add(3, 2, 0, 2, kI * om_pu);
    add(3, 2, 3, 0, -kI * om_pr);

    return result;
}

DensityMatrix rhs(const DensityMatrix& rho, const Liouvillian& liouvillian) {
    Eigen::Map<const Vector16> x(rho.data());
    DensityMatrix out;
    Eigen::Map<Vector16> y(out.data());
    y.noalias() = liouvillian.matrix * x;
    return out;
}

DensityMatrix rhs_direct(const DensityMatrix& rho, const SystemParams& params,
                         EquationMode mode) {
    validate(params);

    const double om_pr = params.omega_pr;
    const double om_pu = params.omega_pu;
    const double d_pr = params.delta_pr;
    const double d_pu = params.delta_pu;
    const double d_hf = params.delta_hfs;
    const double g3 = params.gamma3;
    const double g4 = params.gamma4_value();
    const double w = params.w12;
    const double r34 = params.r34;
    const double r43 = params.r43;
    const double gl = params.gamma_laser;
    const double rbar = 0.5 * (r34 + r43);

    const Complex r11 = rho(0, 0), r22 = rho(1, 1), r33 = rho(2, 2), r44 = rho(3, 3);
    const Complex r12 = rho(0, 1), r21 = rho(1, 0);
    const Complex r13 = rho(0, 2), r31 = rho(2, 0);
    const Complex r14 = rho(0, 3), r41 = rho(3, 0);
    const Complex r23 = rho(1, 2), r32 = rho(2, 1);
    const Complex r24 = rho(1, 3), r42 = rho(3, 1);
    const Complex r34c = rho(2, 3), r43c = rho(3, 2);

    DensityMatrix d;

    d(0, 0) = w * (r22 - r11) + 0.5 * g3 * r33 + 0.5 * g4 * r44
              - kI * om_pr * (r13 - r31) - kI * om_pu * (r14 - r41);
    d(1, 1) = 0.5 * (g3 * r33 + g4 * r44);
    if (mode == EquationMode::TraceConserving) {
        d(1, 1) += w * (r11 - r22);
    }
    d(2, 2) = -(r34 + g3) * r33 + r43 * r44 + kI * om_pr * (r13 - r31);
    d(3, 3) = r34 * r33 - (r43 + g4) * r44 + kI * om_pu * (r14 - r41);

    d(0, 1) = -(w + kI * d_hf) * r12 + kI * (om_pr * r32 + om_pu * r42);
    d(1, 0) = -(w - kI * d_hf) * r21 - kI * (om_pr * r23 + om_pu * r24);

    d(0, 2) = -(0.5 * (rbar + w + g3) + gl + kI * d_pr) * r13
              - kI * om_pr * (r11 - r33) + kI * om_pu * r43c;
    d(2, 0) = -(0.5 * (rbar + w + g3) + gl - kI * d_pr) * r31
              + kI * om_pr * (r11 - r33) - kI * om_pu * r34c;

    d(0, 3) = -(0.5 * (rbar + w + g4) + gl + kI * d_pu) * r14
              + kI * (om_pr * r34c + om_pu * (r44 - r11));
    d(3, 0) = -(0.5 * (rbar + w + g4) + gl - kI * d_pu) * r41
              - kI * (om_pr * r43c + om_pu * (r44 - r11));

    d(1, 2) = -(0.5 * (rbar + w + g3) - kI * d_hf + kI * d_pr) * r23 - kI * om_pr * r21;
    d(2, 1) = -(0.5 * (rbar + w + g3) + kI * d_hf - kI * d_pr) * r32 + kI * om_pr * r12;

    d(1, 3) = -(0.5 * (rbar + w + g4) - kI * d_hf + kI * d_pu) * r24 - kI * om_pu * r21;
    d(3, 1) = -(0.5 * (rbar + w + g4) + kI * d_hf - kI * d_pu) * r42 + kI * om_pu * r12;

    d(2, 3) = -(0.5 * (r34 + r43 + g3 + g4) - kI * d_pr + kI * d_pu) * r34c
              + kI * (om_pr * r14 - om_pu * r31);
    d(3, 2) = -(0.5 * (r34 + r43 + g3 + g4) + kI * d_pr - kI * d_pu) * r43c
              + kI * (om_pu * r13 - om_pr * r41);

    return d;
}

Trajectory evolve(const DensityMatrix& rho0, const Liouvillian& liouvillian,
                  double t_end, const EvolveControls& controls) {
    if (!std::isfinite(t_end) || t_end < 0.0) {
        throw validation_error("evolve: t_end must be finite and non-negative");
    }
    if (!(controls.rel_tol > 0.0) || !std::isfinite(controls.rel_tol)) {
        throw validation_error("evolve: rel_tol must be positive and finite");
    }
    if (!(controls.abs_tol > 0.0) || !std::isfinite(controls.abs_tol)) {
        throw validation_error("evolve: abs_tol must be positive and finite");
    }
    if (controls.max_step < 0.0 || !std::isfinite(controls.max_step)) {
        throw validation_error("evolve: max_step must be non-negative and finite");
    }
    if (controls.store_every < 1) {
        throw validation_error("evolve: store_every must be at least 1");
    }
    if (controls.residual_stop < 0.0 || !std::isfinite(controls.residual_stop)) {
        throw validation_error("evolve: residual_stop must be non-negative and finite");
    }
    if (!rho0.allFinite()) {
        throw validation_error("evolve: initial state has non-finite entries");
    }

    const SystemParams& p = liouvillian.params;

    // Step cap: an explicit stepper must resolve the fastest timescale in
    // the generator; 1/50th of its period is a comfortable margin, and the
    // error control then only refines from there.
    double cap = controls.max_step;
    if (cap == 0.0) {
        const double fastest = std::max({p.omega_pr, p.omega_pu, p.gamma3,
                                         p.gamma4_value(), p.w12, p.r34, p.r43,
                                         p.gamma_laser, std::abs(p.delta_pr),
                                         std::abs(p.delta_pu), std::abs(p.delta_hfs)});
        cap = fastest > 0.0 ? 1.0 / (50.0 * fastest)
                            : (t_end > 0.0 ? t_end / 100.0 : 1.0);
    }

    const double flag_threshold = 1e-6 * std::max(p.gamma3, 1.0);
    const double stop_threshold =
        controls.residual_stop > 0.0 ? controls.residual_stop : flag_threshold;

    Trajectory traj;
    traj.times.push_back(0.0);
    traj.states.push_back(rho0);

    DensityMatrix current = rho0;
    traj.final_residual = max_abs_derivative(current, liouvillian);
    traj.converged = traj.final_residual < flag_threshold;

    if (t_end == 0.0 || (controls.stop_when_converged && traj.final_residual < stop_threshold)) {
        return traj;
    }

    using state_type = std::vector<Complex>;
    namespace odeint = boost::numeric::odeint;
    auto stepper = odeint::make_controlled(controls.abs_tol, controls.rel_tol,
                                           odeint::runge_kutta_cash_karp54<state_type>());

    const Matrix16& m = liouvillian.matrix;
    auto system = [&m](const state_type& x, state_type& dxdt, double) {
        dxdt.resize(x.size());
        Eigen::Map<const Vector16> xv(x.data());
        Eigen::Map<Vector16> dv(dxdt.data());
        dv.noalias() = m * xv;
    };

    state_type state(current.data(), current.data() + 16);
    double t = 0.0;
    double dt = std::min(cap, t_end);
    long long accepted = 0;
    int consecutive_failures = 0;

    while (t < t_end) {
        dt = std::min({dt, cap, t_end - t});
        if (!(dt > 0.0) || t + dt == t) {
            std::ostringstream msg;
            msg << "evolve: step size underflow at t = " << t
                << " s (step " << dt << " s); the system is too stiff for the "
                << "requested tolerances";
            throw solver_error(msg.str());
        }
        const auto result = stepper.try_step(system, state, t, dt);
        if (result == odeint::fail) {
            if (++consecutive_failures > 200) {
                std::ostringstream msg;
                msg << "evolve: step control failed to make progress at t = "
                    << t << " s";
                throw solver_error(msg.str());
            }
            continue;
        }
        consecutive_failures = 0;
        ++accepted;

        Eigen::Map<const DensityMatrix> state_matrix(state.data());
        current = state_matrix;

        const bool at_end = t >= t_end;
        const double residual = max_abs_derivative(current, liouvillian);
        const bool stop_now =
            controls.stop_when_converged && residual < stop_threshold;

        if (accepted % controls.store_every == 0 || at_end || stop_now) {
            traj.times.push_back(t);
            traj.states.push_back(current);
        }
        if (stop_now) {
            break;
        }
    }

    if (traj.times.back() != t) {
        traj.times.push_back(t);
        traj.states.push_back(current);
    }
    traj.final_residual = max_abs_derivative(current, liouvillian);
    traj.converged = traj.final_residual < flag_threshold;
    return traj;
}

DensityMatrix steady_state(const Liouvillian& liouvillian) {
    if (liouvillian.mode != EquationMode::TraceConserving) {
        throw solver_error(
            "steady_state: the literal equation set does not conserve the trace "
            "and has no stationary unit-trace state in general; build the "
            "generator in conserving mode");
    }

    const double scale = infinity_norm(liouvillian.matrix);
    if (!(scale > 0.0) || !std::isfinite(scale)) {
        throw solver_error("steady_state: generator is zero or non-finite");
    }

    // L is singular by construction (the trace is conserved, so the four
    // population rows are linearly dependent). Replace the rho_11 row with
    // the unit-trace constraint, scaled to the generator's magnitude so the
    // constrained matrix stays well balanced.
    Matrix16 a = liouvillian.matrix;
    a.row(idx(0, 0)).setZero();
    for (int i = 0; i < 4; ++i) {
        a(idx(0, 0), idx(i, i)) = scale;
    }
    Vector16 b = Vector16::Zero();
    b(idx(0, 0)) = scale;

    Eigen::PartialPivLU<Matrix16> lu(a);
    const double rcond = lu.rcond();
    if (!(rcond > 1e-14)) {
        std::ostringstream msg;
        msg << "steady_state: constrained system is numerically degenerate "
            << "(reciprocal condition estimate " << rcond << ")";
        throw solver_error(msg.str());
    }

    const Vector16 x = lu.solve(b);
    const double residual = (a * x - b).cwiseAbs().maxCoeff();
    if (!(residual <= 1e-10 * scale)) {
        std::ostringstream msg;
        msg << "steady_state: solve residual " << residual
            << " exceeds 1e-10 * ||L||_inf = " << 1e-10 * scale;
        throw solver_error(msg.str());
    }

    DensityMatrix rho;
    Eigen::Map<Vector16>(rho.data()) = x;
    return rho;
}

std::complex<double> probe_coherence_closed_form(const DensityMatrix& steady,
                                                 const SystemParams& params) {
    validate(params);
    const double rbar = 0.5 * (params.r34 + params.r43);
    const Complex numerator =
        2.0 * kI * params.omega_pr * (steady(2, 2) - steady(0, 0)) +
        2.0 * kI * params.omega_pu * steady(3, 2);
    const Complex denominator =
        rbar + params.w12 + params.gamma3 + 2.0 * kI * params.delta_pr;
    return numerator / denominator;
}

} // namespace owi
