#include <doctest.h>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "rapm/error.hpp"
#include "rapm/solver.hpp"

using namespace rapm;

namespace {

double max_abs(const std::vector<double>& a) {
    double m = 0.0;
    for (double x : a) {
        m = std::max(m, std::abs(x));
    }
    return m;
}

std::vector<double> sample(const Discretization& disc, double (*f)(double)) {
    const auto x = disc.mesh().nodes();
    std::vector<double> u(disc.size());
    for (std::size_t j = 0; j < u.size(); ++j) {
        u[j] = f(x[j + 1]);
    }
    return u;
}

BoundaryValues ends(const Discretization& disc, double (*f)(double)) {
    return {f(disc.mesh().left()), f(disc.mesh().right())};
}

const RapmParams kLinear(0.1, 0.2, 75, 1, 0.0, 2.0);

}  // namespace

TEST_CASE("recover_v of the zero state") {
    for (auto mode : {MassMode::Lumped, MassMode::Consistent}) {
        const Discretization disc(uniform_mesh(1.0, 0.1, ElementOrder::P1), Nonlinearity::GroupFE,
                                  mode);
        const std::vector<double> u(disc.size(), 0.0);
        const auto v = disc.recover_v(u, lifting_vectors(disc.system(), BoundaryValues{}));
        CHECK(max_abs(v) == 0.0);
    }
}

TEST_CASE("recover_v converges at second order") {
    const auto exp_neg = [](double x) { return std::exp(-x); };
    const auto square = [](double x) { return x * x; };
    for (auto order : {ElementOrder::P1, ElementOrder::P2}) {
        for (auto mode : {MassMode::Lumped, MassMode::Consistent}) {
            CAPTURE(static_cast<int>(order));
            CAPTURE(static_cast<int>(mode));
            std::vector<double> err_exp, err_sq;
            for (double dx : {0.1, 0.05, 0.025}) {
                const Discretization disc(uniform_mesh(1.0, dx, order), Nonlinearity::GroupFE,
                                          mode);
                // u = e^{-x}: u_xx + u_x = 0
                const auto v0 = disc.recover_v(
                    sample(disc, exp_neg), lifting_vectors(disc.system(), ends(disc, exp_neg)));
                err_exp.push_back(max_abs(v0));
                // u = x^2: u_xx + u_x = 2 + 2x, measured away from the boundary
                const auto v1 = disc.recover_v(
                    sample(disc, square), lifting_vectors(disc.system(), ends(disc, square)));
                const auto x = disc.mesh().nodes();
                double e = 0.0;
                for (std::size_t j = 0; j < v1.size(); ++j) {
                    if (std::abs(x[j + 1]) <= 0.5) {
                        e = std::max(e, std::abs(v1[j] - (2.0 + 2.0 * x[j + 1])));
                    }
                }
                err_sq.push_back(e);
            }
            for (std::size_t k = 1; k < err_exp.size(); ++k) {
                CHECK(std::log2(err_exp[k - 1] / err_exp[k]) >= 1.8);
            }
            if (err_sq.front() > 1e-12) {
                for (std::size_t k = 1; k < err_sq.size(); ++k) {
                    CHECK(std::log2(err_sq[k - 1] / err_sq[k]) >= 1.8);
                }
            } else {
                CHECK(max_abs(err_sq) < 1e-11);
            }
        }
    }
}

TEST_CASE("single interior node rhs by hand") {
    const Mesh1D mesh({-1.0, 0.0, 1.0}, ElementOrder::P1);
    const double u0 = 0.3, b = 0.8, d = 5.0, c_r = 0.1;
    for (auto variant : {Nonlinearity::GroupFE, Nonlinearity::Quadrature}) {
        const Discretization disc(mesh, variant, MassMode::Lumped);
        const std::vector<double> u{u0};
        const LiftingVectors lift = lifting_vectors(disc.system(), BoundaryValues{0.0, b});
        const auto v = disc.recover_v(u, lift);
        REQUIRE(v.size() == 1);
        CHECK(v[0] == doctest::Approx(-2 * u0 + 1.5 * b).epsilon(1e-15));
        const auto f = disc.rhs(u, v, lift, d, c_r);
        const double expected = -2 * u0 + b + (1 + d) * 0.5 * b + c_r * std::pow(0.6, 4.0 / 3.0);
        CHECK(f[0] == doctest::Approx(expected).epsilon(1e-14));
    }
}

TEST_CASE("rhs with the nonlinearity off is the linear operator") {
    const Discretization disc(uniform_mesh(3.0, 0.1, ElementOrder::P2), Nonlinearity::GroupFE,
                              MassMode::Lumped);
    const RapmParams p = RapmParams::reference();
    const auto x = disc.mesh().nodes();
    std::vector<double> u(disc.size());
    for (std::size_t j = 0; j < u.size(); ++j) {
        u[j] = switching_profile(x[j + 1], p);
    }
    const BoundaryValues bc{0.0, BoundaryState{3.0, 5.0}.right(0.0025)};
    const LiftingVectors lift = lifting_vectors(disc.system(), bc);
    const auto v = disc.recover_v(u, lift);
    const auto f = disc.rhs(u, v, lift, 5.0, 0.0);
    const auto ku = disc.system().stiffness.multiply(u);
    const auto pu = disc.system().convection.multiply(u);
    for (std::size_t j = 0; j < u.size(); ++j) {
        const double expected =
            -ku[j] + 6.0 * pu[j] - lift.stiffness[j] + 6.0 * lift.convection[j];
        CHECK(f[j] == doctest::Approx(expected).epsilon(1e-13).scale(1.0));
    }
    const std::vector<double> zero(disc.size(), 0.0);
    const LiftingVectors none = lifting_vectors(disc.system(), BoundaryValues{});
    CHECK(max_abs(disc.rhs(zero, disc.recover_v(zero, none), none, 5.0, 0.3)) == 0.0);
}

TEST_CASE("backward Euler linear step against a dense oracle") {
    const double radius = 3.0;
    const std::size_t elements = 51;
    std::vector<double> endpoints;
    for (std::size_t i = 0; i <= elements; ++i) {
        endpoints.push_back(radius * (2.0 * i - elements) / elements);
    }
    const Mesh1D mesh(endpoints, ElementOrder::P1);
    const RapmParams p = RapmParams::reference();
    const double d = 5.0, dt = 0.0005, tau0 = 0.0025;
    const BoundaryState bs{radius, d};
    const BoundaryValues bc0{0.0, bs.right(tau0)}, bc1{0.0, bs.right(tau0 + dt)};

    for (auto mode : {MassMode::Lumped, MassMode::Consistent}) {
        const Discretization disc(mesh, Nonlinearity::GroupFE, mode);
        REQUIRE(disc.size() == 50);
        std::vector<double> u(50);
        for (std::size_t j = 0; j < 50; ++j) {
            u[j] = switching_profile(endpoints[j + 1], p);
        }
        const auto got = disc.step(u, bc0, bc1, dt, 1.0, d, 0.0);

        const auto ref = oracle::dense_system(endpoints, 1);
        const Eigen::MatrixXd m = ref.mass.block(1, 1, 50, 50);
        const Eigen::MatrixXd k = ref.stiff.block(1, 1, 50, 50);
        const Eigen::MatrixXd c = ref.conv.block(1, 1, 50, 50);
        const Eigen::VectorXd bm0 = ref.mass.block(1, 51, 50, 1) * bc0.right;
        const Eigen::VectorXd bm1 = ref.mass.block(1, 51, 50, 1) * bc1.right;
        const Eigen::VectorXd bk1 = ref.stiff.block(1, 51, 50, 1) * bc1.right;
        const Eigen::VectorXd bp1 = ref.conv.block(1, 51, 50, 1) * bc1.right;
        const Eigen::MatrixXd a = m - dt * (-k + (1 + d) * c);
        const Eigen::VectorXd un = Eigen::Map<const Eigen::VectorXd>(u.data(), 50);
        const Eigen::VectorXd rhs = m * un - bm1 + bm0 + dt * (-bk1 + (1 + d) * bp1);
        const Eigen::VectorXd expected = a.fullPivLu().solve(rhs);
        for (std::size_t j = 0; j < 50; ++j) {
            CHECK(std::abs(got[j] - expected(static_cast<Eigen::Index>(j))) < 1e-10);
        }
    }
}

TEST_CASE("step size consistency") {
    const Discretization disc(uniform_mesh(3.0, 0.05, ElementOrder::P1), Nonlinearity::GroupFE,
                              MassMode::Lumped);
    const RapmParams p = RapmParams::reference();
    const DerivedConstants dc = derive_constants(p);
    const BoundaryState bs{3.0, dc.d_coeff};
    const auto x = disc.mesh().nodes();
    std::vector<double> u(disc.size());
    for (std::size_t j = 0; j < u.size(); ++j) {
        u[j] = switching_profile(x[j + 1], p);
    }
    std::vector<double> change;
    for (double dt : {4e-4, 2e-4, 1e-4, 5e-5}) {
        const auto next = disc.step(u, {0.0, bs.right(dc.tau_star)},
                                    {0.0, bs.right(dc.tau_star + dt)}, dt, 0.5, dc.d_coeff,
                                    dc.c_r);
        double diff = 0.0;
        for (std::size_t j = 0; j < u.size(); ++j) {
            diff = std::max(diff, std::abs(next[j] - u[j]));
        }
        change.push_back(diff);
    }
    for (std::size_t k = 1; k < change.size(); ++k) {
        CHECK(change[k - 1] / change[k] == doctest::Approx(2.0).epsilon(0.1));
    }
}

TEST_CASE("stationary state is a fixed point of the step") {
    // With D = 0 and a discrete solution of (-K + P) u = b_K - b_P, v vanishes
    // identically, so F(u) = 0 for any C_R.
    const Discretization disc(uniform_mesh(1.0, 0.1, ElementOrder::P1), Nonlinearity::GroupFE,
                              MassMode::Lumped);
    const BoundaryValues bc{0.2, 0.9};
    const GlobalSystem& sys = disc.system();
    const LiftingVectors lift = lifting_vectors(sys, bc);
    const BandedMatrix op = BandedMatrix::combine(-1.0, sys.stiffness, 1.0, sys.convection);
    std::vector<double> rhs(disc.size());
    for (std::size_t j = 0; j < rhs.size(); ++j) {
        rhs[j] = lift.stiffness[j] - lift.convection[j];
    }
    const auto u = BandedLU(op).solve(rhs);
    CHECK(max_abs(disc.recover_v(u, lift)) < 1e-12);
    for (double c_r : {0.0, 0.1}) {
        for (double theta : {0.0, 0.5, 1.0}) {
            const auto next = disc.step(u, bc, bc, 0.001, theta, 0.0, c_r);
            for (std::size_t j = 0; j < u.size(); ++j) {
                CHECK(std::abs(next[j] - u[j]) < 1e-12);
            }
        }
    }
}

TEST_CASE("linearization reduces to the linear step matrix at v = 0") {
    for (auto order : {ElementOrder::P1, ElementOrder::P2}) {
        for (auto variant : {Nonlinearity::GroupFE, Nonlinearity::Quadrature}) {
            for (auto bv : {BoundaryV::Copy, BoundaryV::LinearExtrapolate}) {
                const Discretization disc(uniform_mesh(3.0, 0.1, order), variant,
                                          MassMode::Lumped, bv);
                const std::vector<double> zero(disc.size(), 0.0);
                const BandedMatrix a = disc.step_matrix(zero, 0.0005, 0.5, 5.0, 0.095);
                const BandedMatrix lin = disc.linear_step_matrix(0.0005, 0.5, 5.0);
                for (std::size_t i = 0; i < disc.size(); ++i) {
                    for (std::size_t j = (i > 6 ? i - 6 : 0); j < std::min(disc.size(), i + 7);
                         ++j) {
                        CHECK(a.at(i, j) == lin.at(i, j));
                    }
                }
            }
        }
    }
}

TEST_CASE("linearized operator is exact at v_new = v_old") {
    for (auto variant : {Nonlinearity::GroupFE, Nonlinearity::Quadrature}) {
        for (auto bv : {BoundaryV::Copy, BoundaryV::LinearExtrapolate}) {
            const Discretization disc(uniform_mesh(1.0, 0.1, ElementOrder::P2), variant,
                                      MassMode::Lumped, bv);
            std::vector<double> v(disc.size());
            for (std::size_t j = 0; j < v.size(); ++j) {
                v[j] = std::sin(0.7 * static_cast<double>(j)) * 3.0;
            }
            const auto nl = disc.nonlinear_term(v, 0.2);
            const auto wv = disc.linearized_nonlinear(v, 0.2).multiply(v);
            for (std::size_t j = 0; j < v.size(); ++j) {
                CHECK(wv[j] == doctest::Approx(nl[j]).epsilon(1e-13).scale(1.0));
            }
        }
    }
}

TEST_CASE("time grid") {
    const TimeGrid g = make_time_grid(0.0025, 0.02, 0.0005);
    CHECK(g.steps == 35);
    CHECK(g.dtau == doctest::Approx(0.0005).epsilon(1e-12));
    const TimeGrid r = make_time_grid(0.0, 1.0, 0.3);
    CHECK(r.steps == 3);
    CHECK(r.dtau == doctest::Approx(1.0 / 3.0));
    CHECK(make_time_grid(0.0, 0.1, 1.0).steps == 1);
}

TEST_CASE("solver configuration validation") {
    SolverConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.theta = 1.5;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = {};
    cfg.dtau = 0.0;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = {};
    cfg.rannacher_substeps = 17;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = {};
    cfg.mass_mode = MassMode::Consistent;
    try {
        (void)solve_nonlinear_phase(RapmParams::reference(),
                                    uniform_mesh(3.0, 0.001, ElementOrder::P1), cfg);
        FAIL("expected InvalidParameter");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InvalidParameter);
    }
}

TEST_CASE("nonlinear phase at the reference settings") {
    const RapmParams p = RapmParams::reference();
    const Mesh1D mesh = uniform_mesh(3.0, 0.01, ElementOrder::P1);
    const SolutionSurface s = solve_nonlinear_phase(p, mesh, SolverConfig{});
    CHECK(s.diagnostics.steps == 35);
    CHECK(s.tau.size() == 36);
    CHECK(s.tau.front() == doctest::Approx(0.0025).epsilon(1e-14));
    CHECK(s.tau.back() == derive_constants(p).tau_max);
    CHECK(s.diagnostics.dtau_over_dx2 == doctest::Approx(5.0).epsilon(1e-9));
    CHECK(s.diagnostics.max_abs_v > 0.0);
    CHECK(s.method == Method::FiniteElement);

    const auto x = mesh.nodes();
    for (std::size_t i = 0; i < mesh.node_count(); ++i) {
        if (i > 0 && i + 1 < mesh.node_count()) {
            CHECK(s.u.front()[i] == switching_profile(x[i], p));
        }
        for (const auto& level : s.u) {
            CHECK(std::isfinite(level[i]));
        }
        CHECK(s.u.back()[i] >= 0.0);
        if (i > 0) {
            CHECK(s.u.back()[i] - s.u.back()[i - 1] >= -1e-8);
        }
    }

    // regression value of the default run
    CHECK(s.value_at(75.0) == doctest::Approx(10.2119716).epsilon(1e-7));
    CHECK(s.value_at(75.0) > bs_call_price(75.0, 0.0, p));
    // phase (b) and the last level
    CHECK(s.value_at(75.0, 0.9) == bs_call_price(75.0, 0.9, p));
    CHECK(s.value_at(75.0, 0.0) == s.value_at(75.0));
    const double mid = s.value_at(75.0, 0.5);
    CHECK(mid > bs_call_price(75.0, 0.5, p) - 1e-3);
    CHECK(mid < s.value_at(75.0));
}

TEST_CASE("linear limit against the closed form") {
    SolverConfig cfg;
    std::vector<double> errors;
    for (int level = 0; level < 3; ++level) {
        const double f = std::pow(2.0, level);
        cfg.dtau = 0.002 / f;
        const Mesh1D mesh = uniform_mesh(3.0, 0.04 / f, ElementOrder::P1);
        const SolutionSurface s = solve_nonlinear_phase(kLinear, mesh, cfg);
        double err = 0.0;
        for (double spot = 37.5; spot <= 150.0; spot += 0.5) {
            err = std::max(err, std::abs(s.value_at(spot) - bs_call_price(spot, 0.0, kLinear)));
        }
        errors.push_back(err);
    }
    CHECK(errors.back() < 0.02);
    for (std::size_t k = 1; k < errors.size(); ++k) {
        CHECK(std::log2(errors[k - 1] / errors[k]) >= 1.5);
    }
}

TEST_CASE("Rannacher start-up damps the kink") {
    const RapmParams p = RapmParams::reference();
    const Mesh1D mesh = uniform_mesh(3.0, 0.01, ElementOrder::P1);
    SolverConfig plain;
    plain.dtau = 0.004;
    plain.rannacher_substeps = 0;
    SolverConfig smooth = plain;
    smooth.rannacher_substeps = 4;
    const auto a = solve_nonlinear_phase(p, mesh, plain);
    const auto b = solve_nonlinear_phase(p, mesh, smooth);
    CHECK(std::isfinite(a.diagnostics.max_abs_v));
    CHECK(std::isfinite(b.diagnostics.max_abs_v));
    CHECK(b.diagnostics.max_abs_v_center <= a.diagnostics.max_abs_v_center);

    // raw payoff with no start-up smoothing rings in the linear limit
    const auto c = solve_nonlinear_phase(kLinear, mesh, plain);
    const auto e = solve_nonlinear_phase(kLinear, mesh, smooth);
    const auto after_start = [&](const SolutionSurface& s) {
        double m = 0.0;
        for (std::size_t level = 1; level < s.v.size(); ++level) {
            for (std::size_t i = 0; i < mesh.node_count(); ++i) {
                if (std::abs(mesh.nodes()[i]) <= 0.1) {
                    m = std::max(m, std::abs(s.v[level][i]));
                }
            }
        }
        return m;
    };
    CHECK(after_start(e) < after_start(c));
}

TEST_CASE("variants agree and consistent mass stays close to lumped") {
    const RapmParams p = RapmParams::reference();
    std::vector<double> spots;
    for (double s = 37.5; s <= 150.0; s += 2.5) {
        spots.push_back(s);
    }
    for (auto order : {ElementOrder::P1, ElementOrder::P2}) {
        const Mesh1D mesh = uniform_mesh(3.0, 0.02, order);
        SolverConfig g, q;
        q.nonlinearity = Nonlinearity::Quadrature;
        const auto vg = price_option(p, mesh, g, spots);
        const auto vq = price_option(p, mesh, q, spots);
        for (std::size_t i = 0; i < spots.size(); ++i) {
            CHECK(std::abs(vg[i].value - vq[i].value) < 0.05);
        }
    }
    const Mesh1D mesh = uniform_mesh(3.0, 0.04, ElementOrder::P1);
    SolverConfig lumped, consistent;
    consistent.mass_mode = MassMode::Consistent;
    const auto vl = price_option(p, mesh, lumped, spots);
    const auto vc = price_option(p, mesh, consistent, spots);
    for (std::size_t i = 0; i < spots.size(); ++i) {
        CHECK(std::abs(vl[i].value - vc[i].value) < 0.01);
    }
    SolverConfig ext;
    ext.boundary_v = BoundaryV::LinearExtrapolate;
    ext.power = PowerMode::Clamped;
    const auto ve = price_option(p, mesh, ext, spots);
    for (std::size_t i = 0; i < spots.size(); ++i) {
        CHECK(std::abs(vl[i].value - ve[i].value) < 1e-3);
    }
}

TEST_CASE("price_option") {
    const RapmParams p = RapmParams::reference();
    const Mesh1D mesh = uniform_mesh(3.0, 0.05, ElementOrder::P2);
    const std::vector<double> spots{75.0 * std::exp(-3.0), 75.0, 75.0 * std::exp(0.1)};
    const auto prices = price_option(p, mesh, SolverConfig{}, spots);
    REQUIRE(prices.size() == 3);
    CHECK(prices[0].value == 0.0);
    const SolutionSurface s = solve_nonlinear_phase(p, mesh, SolverConfig{});
    // node at x = 0.1 (index 62 with 0.05 endpoint spacing in P2 ordering)
    const std::size_t node = 2 * 62;
    REQUIRE(std::abs(mesh.nodes()[node] - 0.1) < 1e-12);
    CHECK(prices[2].value ==
          doctest::Approx(75.0 * std::exp(mesh.nodes()[node]) * s.u.back()[node]).epsilon(1e-14));
    CHECK(prices[1].value > bs_call_price(75.0, 0.0, p));

    const std::vector<double> outside{1.0};
    try {
        (void)price_option(p, mesh, SolverConfig{}, outside);
        FAIL("expected SpotOutOfDomain");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::SpotOutOfDomain);
    }
}

TEST_CASE("explicit blow-up reports the last finite state") {
    SolverConfig cfg;
    cfg.theta = 0.0;
    cfg.dtau = 0.0001;
    cfg.rannacher_substeps = 0;
    try {
        (void)solve_nonlinear_phase(RapmParams::reference(),
                                    uniform_mesh(3.0, 0.001, ElementOrder::P1), cfg);
        FAIL("expected NonFiniteState");
    } catch (const NonFiniteStateError& e) {
        CHECK(e.code() == ErrorCode::NonFiniteState);
        CHECK(e.dtau_over_dx2() == doctest::Approx(100.0).epsilon(1e-6));
        CHECK(e.last_tau() >= 0.0025);
        CHECK(e.last_tau() < 0.02);
        CHECK(e.last_u().size() == 6001);
        CHECK(std::all_of(e.last_u().begin(), e.last_u().end(),
                          [](double a) { return std::isfinite(a); }));
        CHECK(std::string(e.what()).find("dtau/dx^2") != std::string::npos);
    }
}
