#include "rapm/rapm.h"

#include <algorithm>
#include <cmath>
#include <exception>
#include <memory>
#include <new>
#include <optional>
#include <string>

#include "rapm/error.hpp"
#include "rapm/mesh.hpp"
#include "rapm/model.hpp"
#include "rapm/reference_fdm.hpp"
#include "rapm/solver.hpp"

struct rapm_params {
    rapm::RapmParams value;
};

struct rapm_surface {
    rapm::SolutionSurface value;
};

namespace {

thread_local std::string last_error;

rapm_status to_status(rapm::ErrorCode code) {
    using rapm::ErrorCode;
    switch (code) {
        case ErrorCode::InvalidParameter: return RAPM_ERR_INVALID_PARAMETER;
        case ErrorCode::ExistenceViolationA: return RAPM_ERR_EXISTENCE_A;
        case ErrorCode::ExistenceViolationB: return RAPM_ERR_EXISTENCE_B;
        case ErrorCode::NonpositiveSpot: return RAPM_ERR_NONPOSITIVE_SPOT;
        case ErrorCode::DegenerateSwitch: return RAPM_ERR_DEGENERATE_SWITCH;
        case ErrorCode::InvalidSpacing: return RAPM_ERR_INVALID_SPACING;
        case ErrorCode::OutOfRange: return RAPM_ERR_OUT_OF_RANGE;
        case ErrorCode::InvalidSize: return RAPM_ERR_INVALID_SIZE;
        case ErrorCode::SingularMass: return RAPM_ERR_SINGULAR_MASS;
        case ErrorCode::LinearSolveFailure: return RAPM_ERR_LINEAR_SOLVE;
        case ErrorCode::NonFiniteState: return RAPM_ERR_NONFINITE_STATE;
        case ErrorCode::SpotOutOfDomain: return RAPM_ERR_SPOT_OUT_OF_DOMAIN;
    }
    return RAPM_ERR_INTERNAL;
}

rapm_status fail(rapm_status status, std::string message) {
    last_error = std::move(message);
    return status;
}

// Runs body, translating exceptions into status codes.
template <class Body>
rapm_status guarded(Body&& body) noexcept {
    try {
        last_error.clear();
        return body();
    } catch (const rapm::Error& e) {
        return fail(to_status(e.code()), e.what());
    } catch (const std::bad_alloc&) {
        return fail(RAPM_ERR_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return fail(RAPM_ERR_INTERNAL, e.what());
    } catch (...) {
        return fail(RAPM_ERR_INTERNAL, "unknown exception");
    }
}

std::optional<rapm::SolverConfig> to_config(const rapm_solver_options& o) {
    rapm::SolverConfig cfg;
    cfg.theta = o.theta;
    cfg.dtau = o.dtau;
    cfg.rannacher_substeps = o.rannacher_substeps;
    switch (o.nonlinearity) {
        case RAPM_GROUP_FE: cfg.nonlinearity = rapm::Nonlinearity::GroupFE; break;
        case RAPM_QUADRATURE: cfg.nonlinearity = rapm::Nonlinearity::Quadrature; break;
        default: return std::nullopt;
    }
    switch (o.mass) {
        case RAPM_MASS_LUMPED: cfg.mass_mode = rapm::MassMode::Lumped; break;
        case RAPM_MASS_CONSISTENT: cfg.mass_mode = rapm::MassMode::Consistent; break;
        default: return std::nullopt;
    }
    switch (o.power) {
        case RAPM_POWER_SIGNED: cfg.power = rapm::PowerMode::Signed; break;
        case RAPM_POWER_CLAMPED: cfg.power = rapm::PowerMode::Clamped; break;
        default: return std::nullopt;
    }
    switch (o.boundary_v) {
        case RAPM_BOUNDARY_V_COPY: cfg.boundary_v = rapm::BoundaryV::Copy; break;
        case RAPM_BOUNDARY_V_EXTRAPOLATE: cfg.boundary_v = rapm::BoundaryV::LinearExtrapolate; break;
        default: return std::nullopt;
    }
    return cfg;
}

std::optional<rapm::ElementOrder> to_order(rapm_element_order order) {
    switch (order) {
        case RAPM_P1: return rapm::ElementOrder::P1;
        case RAPM_P2: return rapm::ElementOrder::P2;
    }
    return std::nullopt;
}

// Surface holding a single level, used to hand back the last finite state.
rapm_surface* partial_surface(const rapm::RapmParams& params, const rapm::Mesh1D& mesh,
                              const rapm::SolverConfig& cfg, rapm::Method method,
                              const rapm::NonFiniteStateError& e) {
    rapm::SolutionSurface s{mesh, params, cfg, method, {e.last_tau()}, {e.last_u()},
                            {std::vector<double>(e.last_u().size(), 0.0)}, {}};
    s.diagnostics.dx = mesh.max_element_size();
    s.diagnostics.node_spacing = mesh.min_node_spacing();
    const rapm::DerivedConstants d = rapm::derive_constants(params);
    const rapm::TimeGrid grid = rapm::make_time_grid(d.tau_star, d.tau_max, cfg.dtau);
    s.diagnostics.dtau = grid.dtau;
    s.diagnostics.steps = grid.steps;
    s.diagnostics.dtau_over_dx2 = e.dtau_over_dx2();
    return new rapm_surface{std::move(s)};
}

template <class Solve>
rapm_status run_solve(const rapm_params* params, const rapm_solver_options* options,
                      rapm_surface** out, Solve&& solve) {
    if (params == nullptr || options == nullptr || out == nullptr) {
        return fail(RAPM_ERR_INVALID_ARGUMENT, "null argument");
    }
    *out = nullptr;
    return guarded([&]() -> rapm_status {
        const auto cfg = to_config(*options);
        const auto order = to_order(options->order);
        if (!cfg || !order) {
            return fail(RAPM_ERR_INVALID_ARGUMENT, "unknown enumerator in solver options");
        }
        return solve(*cfg, *order);
    });
}

}  // namespace

extern "C" {

int rapm_abi_version(void) { return RAPM_ABI_VERSION; }

const char* rapm_status_string(rapm_status status) {
    switch (status) {
        case RAPM_OK: return "ok";
        case RAPM_ERR_INVALID_ARGUMENT: return "invalid argument";
        case RAPM_ERR_INVALID_PARAMETER: return "invalid parameter";
        case RAPM_ERR_EXISTENCE_A: return "existence condition A violated";
        case RAPM_ERR_EXISTENCE_B: return "existence condition B violated";
        case RAPM_ERR_NONPOSITIVE_SPOT: return "nonpositive spot";
        case RAPM_ERR_DEGENERATE_SWITCH: return "degenerate switching time";
        case RAPM_ERR_INVALID_SPACING: return "invalid spacing";
        case RAPM_ERR_OUT_OF_RANGE: return "out of range";
        case RAPM_ERR_INVALID_SIZE: return "invalid size";
        case RAPM_ERR_SINGULAR_MASS: return "singular mass matrix";
        case RAPM_ERR_LINEAR_SOLVE: return "linear solve failure";
        case RAPM_ERR_NONFINITE_STATE: return "non-finite state";
        case RAPM_ERR_SPOT_OUT_OF_DOMAIN: return "spot outside domain";
        case RAPM_ERR_INTERNAL: return "internal error";
    }
    return "unknown status";
}

const char* rapm_last_error(void) { return last_error.c_str(); }

rapm_status rapm_params_create(double rate, double sigma, double strike, double expiry,
                               double risk_premium, double txn_cost, rapm_params** out) {
    if (out == nullptr) {
        return fail(RAPM_ERR_INVALID_ARGUMENT, "null output handle");
    }
    *out = nullptr;
    return guarded([&] {
        *out = new rapm_params{
            rapm::RapmParams(rate, sigma, strike, expiry, risk_premium, txn_cost)};
        return RAPM_OK;
    });
}

void rapm_params_destroy(rapm_params* params) { delete params; }

rapm_status rapm_params_derived(const rapm_params* params, rapm_derived* out) {
    if (params == nullptr || out == nullptr) {
        return fail(RAPM_ERR_INVALID_ARGUMENT, "null argument");
    }
    return guarded([&] {
        const rapm::DerivedConstants d = rapm::derive_constants(params->value);
        *out = {d.t_star, d.tau_star, d.tau_max, d.d_coeff, d.c_r};
        return RAPM_OK;
    });
}

rapm_status rapm_bs_call_price(const rapm_params* params, double spot, double time,
                               double* out) {
    if (params == nullptr || out == nullptr) {
        return fail(RAPM_ERR_INVALID_ARGUMENT, "null argument");
    }
    return guarded([&] {
        if (!(spot > 0.0)) {
            throw rapm::Error(rapm::ErrorCode::NonpositiveSpot, "spot must be positive");
        }
        *out = rapm::bs_call_price(spot, time, params->value);
        return RAPM_OK;
    });
}

void rapm_solver_options_default(rapm_solver_options* options) {
    if (options == nullptr) {
        return;
    }
    const rapm::SolverConfig cfg;
    options->radius = 3.0;
    options->dx = 0.01;
    options->dtau = cfg.dtau;
    options->theta = cfg.theta;
    options->rannacher_substeps = cfg.rannacher_substeps;
    options->order = RAPM_P1;
    options->nonlinearity = RAPM_GROUP_FE;
    options->mass = RAPM_MASS_LUMPED;
    options->power = RAPM_POWER_SIGNED;
    options->boundary_v = RAPM_BOUNDARY_V_COPY;
}

rapm_status rapm_solve(const rapm_params* params, const rapm_solver_options* options,
                       rapm_surface** out) {
    return run_solve(params, options, out,
                     [&](const rapm::SolverConfig& cfg, rapm::ElementOrder order) {
                         const rapm::Mesh1D mesh =
                             rapm::uniform_mesh(options->radius, options->dx, order);
                         try {
                             *out = new rapm_surface{
                                 rapm::solve_nonlinear_phase(params->value, mesh, cfg)};
                         } catch (const rapm::NonFiniteStateError& e) {
                             *out = partial_surface(params->value, mesh, cfg,
                                                    rapm::Method::FiniteElement, e);
                             throw;
                         }
                         return RAPM_OK;
                     });
}

rapm_status rapm_solve_fdm(const rapm_params* params, const rapm_solver_options* options,
                           rapm_surface** out) {
    return run_solve(params, options, out,
                     [&](const rapm::SolverConfig& cfg, rapm::ElementOrder) {
                         rapm::FdmConfig fcfg;
                         fcfg.dx = options->dx;
                         fcfg.dtau = cfg.dtau;
                         fcfg.radius = options->radius;
                         fcfg.theta = cfg.theta;
                         fcfg.rannacher_substeps = cfg.rannacher_substeps;
                         fcfg.power = cfg.power;
                         try {
                             *out = new rapm_surface{rapm::fdm_solve(params->value, fcfg)};
                         } catch (const rapm::NonFiniteStateError& e) {
                             const rapm::Mesh1D grid = rapm::uniform_mesh(
                                 options->radius, options->dx, rapm::ElementOrder::P1);
                             *out = partial_surface(params->value, grid, cfg,
                                                    rapm::Method::FiniteDifference, e);
                             throw;
                         }
                         return RAPM_OK;
                     });
}

void rapm_surface_destroy(rapm_surface* surface) { delete surface; }

size_t rapm_surface_node_count(const rapm_surface* surface) {
    return surface == nullptr ? 0 : surface->value.mesh.node_count();
}

size_t rapm_surface_level_count(const rapm_surface* surface) {
    return surface == nullptr ? 0 : surface->value.tau.size();
}

rapm_status rapm_surface_nodes(const rapm_surface* surface, double* x, size_t len) {
    if (surface == nullptr || x == nullptr || len < surface->value.mesh.node_count()) {
        return fail(RAPM_ERR_INVALID_ARGUMENT, "null argument or buffer too short");
    }
    const auto nodes = surface->value.mesh.nodes();
    std::copy(nodes.begin(), nodes.end(), x);
    return RAPM_OK;
}

rapm_status rapm_surface_tau(const rapm_surface* surface, size_t level, double* out) {
    if (surface == nullptr || out == nullptr) {
        return fail(RAPM_ERR_INVALID_ARGUMENT, "null argument");
    }
    if (level >= surface->value.tau.size()) {
        return fail(RAPM_ERR_OUT_OF_RANGE, "level out of range");
    }
    *out = surface->value.tau[level];
    return RAPM_OK;
}

rapm_status rapm_surface_u(const rapm_surface* surface, size_t level, double* u, size_t len) {
    if (surface == nullptr || u == nullptr) {
        return fail(RAPM_ERR_INVALID_ARGUMENT, "null argument");
    }
    if (level >= surface->value.u.size()) {
        return fail(RAPM_ERR_OUT_OF_RANGE, "level out of range");
    }
    if (len < surface->value.u[level].size()) {
        return fail(RAPM_ERR_INVALID_ARGUMENT, "buffer too short");
    }
    const auto& row = surface->value.u[level];
    std::copy(row.begin(), row.end(), u);
    return RAPM_OK;
}

rapm_status rapm_surface_v(const rapm_surface* surface, size_t level, double* v, size_t len) {
    if (surface == nullptr || v == nullptr) {
        return fail(RAPM_ERR_INVALID_ARGUMENT, "null argument");
    }
    if (level >= surface->value.v.size()) {
        return fail(RAPM_ERR_OUT_OF_RANGE, "level out of range");
    }
    if (len < surface->value.v[level].size()) {
        return fail(RAPM_ERR_INVALID_ARGUMENT, "buffer too short");
    }
    const auto& row = surface->value.v[level];
    std::copy(row.begin(), row.end(), v);
    return RAPM_OK;
}

rapm_status rapm_surface_diagnostics(const rapm_surface* surface, rapm_diagnostics* out) {
    if (surface == nullptr || out == nullptr) {
        return fail(RAPM_ERR_INVALID_ARGUMENT, "null argument");
    }
    const auto& d = surface->value.diagnostics;
    *out = {d.dx, d.dtau, d.steps, d.dtau_over_dx2, d.max_abs_v,
            surface->value.mesh.node_count()};
    return RAPM_OK;
}

rapm_status rapm_surface_price(const rapm_surface* surface, double spot, double* out) {
    if (surface == nullptr || out == nullptr) {
        return fail(RAPM_ERR_INVALID_ARGUMENT, "null argument");
    }
    return guarded([&] {
        *out = surface->value.value_at(spot);
        return RAPM_OK;
    });
}

rapm_status rapm_surface_price_at(const rapm_surface* surface, double spot, double time,
                                  double* out) {
    if (surface == nullptr || out == nullptr) {
        return fail(RAPM_ERR_INVALID_ARGUMENT, "null argument");
    }
    return guarded([&] {
        *out = surface->value.value_at(spot, time);
        return RAPM_OK;
    });
}

}  // extern "C"
