#include "owi/params.hpp"

#include <cmath>
#include <sstream>

#include "owi/errors.hpp"

namespace owi {

namespace {

void require_finite_nonnegative(double v, const char* name) {
    if (!std::isfinite(v))
        throw validation_error(std::string(name) + " must be finite");
    if (v < 0.0)
        throw validation_error(std::string(name) + " must be >= 0");
}

void require_finite(double v, const char* name) {
    if (!std::isfinite(v))
        throw validation_error(std::string(name) + " must be finite");
}

void require_positive(double v, const char* name) {
    if (!(std::isfinite(v) && v > 0.0))
        throw validation_error(std::string(name) + " must be finite and > 0");
}

} // namespace

const SystemParams& validate(const SystemParams& p) {
    require_finite_nonnegative(p.omega_pr, "omega_pr");
    require_finite_nonnegative(p.omega_pu, "omega_pu");
    require_finite(p.delta_pr, "delta_pr");
    require_finite(p.delta_pu, "delta_pu");
    require_finite(p.delta_hfs, "delta_hfs");
    require_finite_nonnegative(p.gamma3, "gamma3");
    if (p.gamma4)
        require_finite_nonnegative(*p.gamma4, "gamma4");
    require_finite_nonnegative(p.w12, "w12");
    require_finite_nonnegative(p.r34, "r34");
    require_finite_nonnegative(p.r43, "r43");
    require_positive(p.lambda_pr, "lambda_pr");
    require_positive(p.lambda_pu, "lambda_pu");
    require_finite_nonnegative(p.u, "u");
    require_finite_nonnegative(p.gamma_laser, "gamma_laser");
    return p;
}

double hermiticity_deviation(const DensityMatrix& rho) {
    double dev = 0.0;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            dev = std::max(dev, std::abs(rho(i, j) - std::conj(rho(j, i))));
    return dev;
}

void check_density_matrix(const DensityMatrix& rho, double herm_tol,
                          double trace_tol) {
    const double herm = hermiticity_deviation(rho);
    if (!(herm <= herm_tol)) {
        std::ostringstream os;
        os << "density matrix is not Hermitian: deviation " << herm
           << " exceeds " << herm_tol;
        throw validation_error(os.str());
    }
    const std::complex<double> tr = rho.trace();
    if (!(std::abs(tr - 1.0) <= trace_tol)) {
        std::ostringstream os;
        os << "density matrix trace is " << tr.real() << " + " << tr.imag()
           << "i, not 1 within " << trace_tol;
        throw validation_error(os.str());
    }
    for (int i = 0; i < 4; ++i) {
        const std::complex<double> d = rho(i, i);
        if (!(d.real() >= -trace_tol && d.real() <= 1.0 + trace_tol)) {
            std::ostringstream os;
            os << "population rho_" << i + 1 << i + 1 << " = " << d.real()
               << " outside [0, 1] within " << trace_tol;
            throw validation_error(os.str());
        }
    }
}

const SpectrumParams& validate(const SpectrumParams& sp) {
    if (!(std::isfinite(sp.number_density) && sp.number_density >= 0.0))
        throw validation_error("number_density must be finite and >= 0");
    if (!(std::isfinite(sp.path_length) && sp.path_length >= 0.0))
        throw validation_error("path_length must be finite and >= 0");
    if (sp.detuning_grid.empty())
        throw validation_error("detuning_grid must not be empty");
    for (std::size_t i = 0; i < sp.detuning_grid.size(); ++i) {
        if (!std::isfinite(sp.detuning_grid[i]))
            throw validation_error("detuning_grid contains a non-finite value");
        if (i > 0 && !(sp.detuning_grid[i] > sp.detuning_grid[i - 1]))
            throw validation_error("detuning_grid must be strictly increasing");
    }
    if (sp.quadrature_nodes < 8)
        throw validation_error("quadrature_nodes must be >= 8");
    return sp;
}

} // namespace owi
