#include <doctest.h>

#include <cmath>
#include <cstring>
#include <string>
#include <thread>
#include <vector>

#include "rapm/rapm.h"

namespace {

rapm_params* reference() {
    rapm_params* p = nullptr;
    REQUIRE(rapm_params_create(0.1, 0.2, 75, 1, 0.01, 2, &p) == RAPM_OK);
    return p;
}

}  // namespace

TEST_CASE("version and status strings") {
    CHECK(rapm_abi_version() == RAPM_ABI_VERSION);
    CHECK(std::strlen(rapm_status_string(RAPM_OK)) > 0);
    CHECK(std::string(rapm_status_string(RAPM_ERR_EXISTENCE_A)) !=
          rapm_status_string(RAPM_ERR_EXISTENCE_B));
}

TEST_CASE("parameter validation through the C interface") {
    rapm_params* p = nullptr;
    CHECK(rapm_params_create(0.1, 0.2, 75, 1, 0.09, 2, &p) == RAPM_ERR_EXISTENCE_A);
    CHECK(p == nullptr);
    CHECK(std::string(rapm_last_error()).find("condition A") != std::string::npos);
    CHECK(rapm_params_create(0.1, 0.5, 75, 1, 0.2, 2, &p) == RAPM_ERR_EXISTENCE_B);
    CHECK(rapm_params_create(0.1, -0.2, 75, 1, 0.01, 2, &p) == RAPM_ERR_INVALID_PARAMETER);
    CHECK(rapm_params_create(0.1, 0.2, 75, 1, 0.01, 2, nullptr) == RAPM_ERR_INVALID_ARGUMENT);

    p = reference();
    rapm_derived d{};
    REQUIRE(rapm_params_derived(p, &d) == RAPM_OK);
    CHECK(d.tau_star == doctest::Approx(0.0025));
    CHECK(d.c_r == doctest::Approx(0.0950760865132).epsilon(1e-12));
    double v = 0.0;
    REQUIRE(rapm_bs_call_price(p, 75, 0, &v) == RAPM_OK);
    CHECK(v == doctest::Approx(9.952257438495664).epsilon(1e-13));
    CHECK(rapm_bs_call_price(p, -1, 0, &v) == RAPM_ERR_NONPOSITIVE_SPOT);
    CHECK(rapm_params_derived(nullptr, &d) == RAPM_ERR_INVALID_ARGUMENT);
    rapm_params_destroy(p);
    rapm_params_destroy(nullptr);
}

TEST_CASE("solve and query a surface") {
    rapm_params* p = reference();
    rapm_solver_options opt;
    rapm_solver_options_default(&opt);
    CHECK(opt.radius == 3.0);
    CHECK(opt.dx == 0.01);
    CHECK(opt.order == RAPM_P1);
    opt.dx = 0.02;

    rapm_surface* s = nullptr;
    REQUIRE(rapm_solve(p, &opt, &s) == RAPM_OK);
    REQUIRE(s != nullptr);
    const std::size_t n = rapm_surface_node_count(s);
    CHECK(n == 301);
    CHECK(rapm_surface_level_count(s) == 36);

    std::vector<double> x(n), u(n), v(n);
    REQUIRE(rapm_surface_nodes(s, x.data(), n) == RAPM_OK);
    CHECK(x.front() == -3.0);
    CHECK(x.back() == 3.0);
    CHECK(rapm_surface_nodes(s, x.data(), n - 1) == RAPM_ERR_INVALID_ARGUMENT);
    REQUIRE(rapm_surface_u(s, 35, u.data(), n) == RAPM_OK);
    REQUIRE(rapm_surface_v(s, 35, v.data(), n) == RAPM_OK);
    CHECK(rapm_surface_u(s, 36, u.data(), n) == RAPM_ERR_OUT_OF_RANGE);
    double tau = 0.0;
    REQUIRE(rapm_surface_tau(s, 35, &tau) == RAPM_OK);
    CHECK(tau == doctest::Approx(0.02));

    rapm_diagnostics diag{};
    REQUIRE(rapm_surface_diagnostics(s, &diag) == RAPM_OK);
    CHECK(diag.steps == 35);
    CHECK(diag.node_count == n);
    CHECK(diag.dtau_over_dx2 == doctest::Approx(1.25));

    double price = 0.0, bs = 0.0;
    REQUIRE(rapm_surface_price(s, 75.0, &price) == RAPM_OK);
    REQUIRE(rapm_bs_call_price(p, 75.0, 0.0, &bs) == RAPM_OK);
    CHECK(price > bs);
    CHECK(price == doctest::Approx(75.0 * u[150]).epsilon(1e-14));
    CHECK(rapm_surface_price(s, 1e5, &price) == RAPM_ERR_SPOT_OUT_OF_DOMAIN);
    double later = 0.0;
    REQUIRE(rapm_surface_price_at(s, 75.0, 0.95, &later) == RAPM_OK);
    REQUIRE(rapm_bs_call_price(p, 75.0, 0.95, &bs) == RAPM_OK);
    CHECK(later == bs);
    rapm_surface_destroy(s);

    rapm_surface* f = nullptr;
    opt.dtau = 0.0004;
    REQUIRE(rapm_solve_fdm(p, &opt, &f) == RAPM_OK);
    double fdm = 0.0;
    REQUIRE(rapm_surface_price(f, 75.0, &fdm) == RAPM_OK);
    CHECK(std::abs(fdm - 10.21) < 0.05);
    rapm_surface_destroy(f);
    rapm_surface_destroy(nullptr);
    rapm_params_destroy(p);
}

TEST_CASE("invalid options are rejected") {
    rapm_params* p = reference();
    rapm_solver_options opt;
    rapm_solver_options_default(&opt);
    rapm_surface* s = nullptr;

    opt.order = static_cast<rapm_element_order>(7);
    CHECK(rapm_solve(p, &opt, &s) == RAPM_ERR_INVALID_ARGUMENT);
    rapm_solver_options_default(&opt);
    opt.theta = 2.0;
    CHECK(rapm_solve(p, &opt, &s) == RAPM_ERR_INVALID_PARAMETER);
    rapm_solver_options_default(&opt);
    opt.dx = 10.0;
    CHECK(rapm_solve(p, &opt, &s) == RAPM_ERR_INVALID_SPACING);
    CHECK(s == nullptr);
    CHECK(rapm_solve(p, nullptr, &s) == RAPM_ERR_INVALID_ARGUMENT);
    rapm_params_destroy(p);
}

TEST_CASE("non-finite abort returns the last finite state") {
    rapm_params* p = reference();
    rapm_solver_options opt;
    rapm_solver_options_default(&opt);
    opt.theta = 0.0;
    opt.dx = 0.001;
    opt.dtau = 0.0001;
    opt.rannacher_substeps = 0;
    rapm_surface* s = nullptr;
    CHECK(rapm_solve(p, &opt, &s) == RAPM_ERR_NONFINITE_STATE);
    CHECK(std::string(rapm_last_error()).find("dtau/dx^2") != std::string::npos);
    REQUIRE(s != nullptr);
    CHECK(rapm_surface_level_count(s) == 1);
    std::vector<double> u(rapm_surface_node_count(s));
    REQUIRE(rapm_surface_u(s, 0, u.data(), u.size()) == RAPM_OK);
    for (double a : u) {
        CHECK(std::isfinite(a));
    }
    rapm_diagnostics diag{};
    REQUIRE(rapm_surface_diagnostics(s, &diag) == RAPM_OK);
    CHECK(diag.dtau_over_dx2 == doctest::Approx(100.0));
    rapm_surface_destroy(s);
    rapm_params_destroy(p);
}

TEST_CASE("concurrent solves share handles and agree") {
    rapm_params* p = reference();
    rapm_solver_options opt;
    rapm_solver_options_default(&opt);
    opt.dx = 0.02;
    rapm_surface* ref = nullptr;
    REQUIRE(rapm_solve(p, &opt, &ref) == RAPM_OK);
    double expected = 0.0;
    REQUIRE(rapm_surface_price(ref, 80.0, &expected) == RAPM_OK);

    std::vector<double> got(8, 0.0);
    std::vector<int> status(8, -1);
    std::vector<std::string> errors(8);
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < got.size(); ++t) {
        pool.emplace_back([&, t] {
            rapm_surface* s = nullptr;
            rapm_status st = rapm_solve(p, &opt, &s);
            if (st == RAPM_OK) {
                st = rapm_surface_price(s, 80.0, &got[t]);
                // a shared handle read from several threads
                double tmp = 0.0;
                (void)rapm_surface_price(ref, 80.0 + static_cast<double>(t), &tmp);
                rapm_surface_destroy(s);
            }
            // thread-local error message
            rapm_params* bad = nullptr;
            (void)rapm_params_create(0.1, 0.2, 75, 1, t % 2 == 0 ? 0.09 : 0.01, 2, &bad);
            errors[t] = rapm_last_error();
            rapm_params_destroy(bad);
            status[t] = st;
        });
    }
    for (auto& th : pool) {
        th.join();
    }
    for (std::size_t t = 0; t < got.size(); ++t) {
        CHECK(status[t] == RAPM_OK);
        CHECK(got[t] == expected);
        if (t % 2 == 0) {
            CHECK(errors[t].find("condition A") != std::string::npos);
        }
    }
    rapm_surface_destroy(ref);
    rapm_params_destroy(p);
}
