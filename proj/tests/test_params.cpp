// Parameter-struct validation and density-matrix sanity checks.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <owi/errors.hpp>
#include <owi/params.hpp>

#include <limits>
#include <string>

using namespace owi;
using std::complex;

namespace {

SystemParams valid_params() {
    SystemParams p;
    p.gamma3 = constants::d1_decay_rate;
    p.omega_pr = 0.05 * p.gamma3;
    p.omega_pu = 60.0 * p.gamma3;
    p.w12 = 0.5 * p.gamma3;
    p.r34 = 2.0 * p.gamma3;
    p.r43 = 2.78 * p.gamma3;
    return p;
}

std::string thrown_message(const SystemParams& p) {
    try {
        validate(p);
    } catch (const validation_error& e) {
        return e.what();
    }
    return {};
}

} // namespace

TEST_CASE("a fully specified parameter set validates and chains") {
    const SystemParams p = valid_params();
    const SystemParams& r = validate(p);
    CHECK(&r == &p); // returns its argument for chaining
}

TEST_CASE("default wavelengths are the two Rb D lines") {
    SystemParams p;
    CHECK(p.lambda_pr == 795e-9);
    CHECK(p.lambda_pu == 780e-9);
}

TEST_CASE("gamma4 defaults to gamma3 until set") {
    SystemParams p = valid_params();
    CHECK(p.gamma4_value() == p.gamma3);
    p.gamma4 = 1.1 * p.gamma3;
    CHECK(p.gamma4_value() == 1.1 * p.gamma3);
}

TEST_CASE("validation errors name the offending field") {
    SystemParams p = valid_params();

    SUBCASE("negative rabi frequency") {
        p.omega_pr = -1.0;
        CHECK(thrown_message(p).find("omega_pr") != std::string::npos);
    }
    SUBCASE("non-finite detuning") {
        p.delta_pr = std::numeric_limits<double>::quiet_NaN();
        CHECK(thrown_message(p).find("delta_pr") != std::string::npos);
    }
    SUBCASE("infinite pump detuning") {
        p.delta_pu = std::numeric_limits<double>::infinity();
        CHECK(thrown_message(p).find("delta_pu") != std::string::npos);
    }
    SUBCASE("negative decay rate") {
        p.gamma3 = -p.gamma3;
        CHECK(thrown_message(p).find("gamma3") != std::string::npos);
    }
    SUBCASE("negative optional gamma4 is still checked") {
        p.gamma4 = -1.0;
        CHECK(thrown_message(p).find("gamma4") != std::string::npos);
    }
    SUBCASE("negative ground-state exchange rate") {
        p.w12 = -1.0;
        CHECK(thrown_message(p).find("w12") != std::string::npos);
    }
    SUBCASE("negative transfer rates") {
        p.r34 = -1.0;
        CHECK(thrown_message(p).find("r34") != std::string::npos);
        p = valid_params();
        p.r43 = -1.0;
        CHECK(thrown_message(p).find("r43") != std::string::npos);
    }
    SUBCASE("zero wavelength is rejected") {
        p.lambda_pr = 0.0;
        CHECK(thrown_message(p).find("lambda_pr") != std::string::npos);
    }
    SUBCASE("negative thermal speed") {
        p.u = -100.0;
        CHECK(thrown_message(p).find("u ") != std::string::npos);
    }
    SUBCASE("negative laser dephasing") {
        p.gamma_laser = -1.0;
        CHECK(thrown_message(p).find("gamma_laser") != std::string::npos);
    }
}

TEST_CASE("zero rates and fields are allowed") {
    SystemParams p; // all rates zero, wavelengths defaulted
    CHECK_NOTHROW(validate(p));
}

TEST_CASE("hermiticity deviation measures the worst element pair") {
    DensityMatrix rho = DensityMatrix::Zero();
    rho(0, 0) = 0.5;
    rho(1, 1) = 0.5;
    CHECK(hermiticity_deviation(rho) == 0.0);

    rho(0, 2) = complex<double>(1e-3, 2e-3);
    rho(2, 0) = std::conj(rho(0, 2));
    CHECK(hermiticity_deviation(rho) == 0.0);

    // Break the pair: rho_31 no longer the conjugate of rho_13.
    rho(2, 0) = complex<double>(1e-3, 2e-3);
    CHECK(hermiticity_deviation(rho) == doctest::Approx(4e-3).epsilon(1e-12));

    // A complex diagonal entry breaks Hermiticity against itself.
    rho = DensityMatrix::Zero();
    rho(1, 1) = complex<double>(1.0, 5e-4);
    CHECK(hermiticity_deviation(rho) == doctest::Approx(1e-3).epsilon(1e-12));
}

TEST_CASE("density-matrix check accepts physical states") {
    DensityMatrix rho = DensityMatrix::Zero();
    rho(0, 0) = 0.25;
    rho(1, 1) = 0.25;
    rho(2, 2) = 0.25;
    rho(3, 3) = 0.25;
    rho(0, 2) = complex<double>(0.1, -0.05);
    rho(2, 0) = std::conj(rho(0, 2));
    CHECK_NOTHROW(check_density_matrix(rho));
}

TEST_CASE("density-matrix check rejects each violation class") {
    DensityMatrix rho = DensityMatrix::Zero();
    rho(0, 0) = 0.5;
    rho(1, 1) = 0.5;

    SUBCASE("non-Hermitian coherence") {
        rho(0, 1) = complex<double>(0.1, 0.0);
        CHECK_THROWS_AS(check_density_matrix(rho), validation_error);
    }
    SUBCASE("trace away from one") {
        rho(1, 1) = 0.6;
        CHECK_THROWS_AS(check_density_matrix(rho), validation_error);
    }
    SUBCASE("negative population") {
        rho(0, 0) = 0.5 + 0.2;
        rho(1, 1) = 0.5 - 0.2;
        rho(2, 2) = 0.2;
        rho(3, 3) = -0.2;
        CHECK_THROWS_AS(check_density_matrix(rho), validation_error);
    }
    SUBCASE("tolerances are honored") {
        rho(0, 1) = complex<double>(1e-13, 0.0);
        rho(1, 0) = std::conj(rho(0, 1));
        rho(1, 1) = 0.5 + 5e-10; // inside default trace_tol 1e-9
        CHECK_NOTHROW(check_density_matrix(rho));
        CHECK_THROWS_AS(check_density_matrix(rho, 1e-12, 1e-12),
                        validation_error);
    }
}

TEST_CASE("spectrum parameter validation") {
    SpectrumParams sp;
    sp.number_density = 1e20;
    sp.path_length = 30e-6;
    sp.detuning_grid = {-1.0, 0.0, 1.0};
    sp.quadrature_nodes = 64;
    CHECK_NOTHROW(validate(sp));

    SUBCASE("zero density and length degenerate but validate") {
        sp.number_density = 0.0;
        sp.path_length = 0.0;
        CHECK_NOTHROW(validate(sp));
    }
    SUBCASE("negative density") {
        sp.number_density = -1.0;
        CHECK_THROWS_AS(validate(sp), validation_error);
    }
    SUBCASE("negative path length") {
        sp.path_length = -1e-6;
        CHECK_THROWS_AS(validate(sp), validation_error);
    }
    SUBCASE("empty grid") {
        sp.detuning_grid.clear();
        CHECK_THROWS_AS(validate(sp), validation_error);
    }
    SUBCASE("non-increasing grid") {
        sp.detuning_grid = {0.0, 0.0};
        CHECK_THROWS_AS(validate(sp), validation_error);
    }
    SUBCASE("non-finite grid point") {
        sp.detuning_grid = {0.0, std::numeric_limits<double>::infinity()};
        CHECK_THROWS_AS(validate(sp), validation_error);
    }
    SUBCASE("too few quadrature nodes") {
        sp.quadrature_nodes = 4;
        CHECK_THROWS_AS(validate(sp), validation_error);
    }
}

TEST_CASE("validation_error is a config_error is an error") {
    // The hierarchy lets callers catch at the granularity they need.
    bool caught_as_config_error = false;
    try {
        SystemParams p;
        p.omega_pr = -1.0;
        validate(p);
    } catch (const config_error&) {
        caught_as_config_error = true;
    }
    CHECK(caught_as_config_error);

    bool caught_as_error = false;
    try {
        SystemParams p;
        p.omega_pr = -1.0;
        validate(p);
    } catch (const error&) {
        caught_as_error = true;
    }
    CHECK(caught_as_error);
}
