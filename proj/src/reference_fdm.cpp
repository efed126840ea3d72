#include "rapm/reference_fdm.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rapm/error.hpp"
#include "rapm/mesh.hpp"

namespace rapm {

namespace {

// Thomas algorithm for a constant-coefficient tridiagonal system.
std::vector<double> thomas(const Stencil& a, std::vector<double> rhs) {
    const std::size_t n = rhs.size();
    const double scale = std::abs(a.lower) + std::abs(a.diag) + std::abs(a.upper);
    std::vector<double> c(n);
    double denom = a.diag;
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0) {
            denom = a.diag - a.lower * c[i - 1];
        }
        if (!(std::abs(denom) > 1e-14 * scale)) {
            throw Error(ErrorCode::LinearSolveFailure, "pivot breakdown in tridiagonal solve");
        }
        c[i] = a.upper / denom;
        rhs[i] = (rhs[i] - (i > 0 ? a.lower * rhs[i - 1] : 0.0)) / denom;
    }
    for (std::size_t i = n - 1; i-- > 0;) {
        rhs[i] -= c[i] * rhs[i + 1];
    }
    return rhs;
}

bool finite(const std::vector<double>& a) {
    return std::all_of(a.begin(), a.end(), [](double b) { return std::isfinite(b); });
}

}  // namespace

Stencil fdm_stencil(double dx) noexcept {
    const double a = 1.0 / (dx * dx);
    const double b = 0.5 / dx;
    return {a - b, -2.0 * a, a + b};
}

FdmOperator::FdmOperator(double dx, std::size_t nodes, double d_coeff, double c_r,
                         PowerMode power)
    : nodes_(nodes), c_r_(c_r), power_(power), aux_(fdm_stencil(dx)) {
    if (nodes_ < 3) {
        throw Error(ErrorCode::InvalidSpacing, "finite-difference grid needs an interior node");
    }
    const double a = 1.0 / (dx * dx);
    const double b = 0.5 * (1.0 + d_coeff) / dx;
    lin_ = {a - b, -2.0 * a, a + b};
}

std::vector<double> FdmOperator::auxiliary(const std::vector<double>& u) const {
    std::vector<double> w(nodes_);
    for (std::size_t i = 1; i + 1 < nodes_; ++i) {
        w[i] = aux_.lower * u[i - 1] + aux_.diag * u[i] + aux_.upper * u[i + 1];
    }
    w.front() = w[1];
    w.back() = w[nodes_ - 2];
    return w;
}

std::vector<double> FdmOperator::step(const std::vector<double>& u, double dt, double theta,
                                      BoundaryValues bc_new) const {
    const std::vector<double> w = auxiliary(u);
    const std::size_t n = nodes_ - 2;
    std::vector<double> rhs(n);
    for (std::size_t i = 1; i + 1 < nodes_; ++i) {
        const double lin = lin_.lower * u[i - 1] + lin_.diag * u[i] + lin_.upper * u[i + 1];
        rhs[i - 1] = u[i] + (1.0 - theta) * dt * lin + dt * c_r_ * power43(w[i], power_);
    }
    rhs.front() += theta * dt * lin_.lower * bc_new.left;
    rhs.back() += theta * dt * lin_.upper * bc_new.right;
    const Stencil implicit{-theta * dt * lin_.lower, 1.0 - theta * dt * lin_.diag,
                           -theta * dt * lin_.upper};
    const std::vector<double> inner = thomas(implicit, std::move(rhs));
    std::vector<double> next(nodes_);
    next.front() = bc_new.left;
    std::copy(inner.begin(), inner.end(), next.begin() + 1);
    next.back() = bc_new.right;
    return next;
}

SolutionSurface fdm_solve(const RapmParams& params, const FdmConfig& cfg) {
    SolverConfig as_solver;
    as_solver.theta = cfg.theta;
    as_solver.dtau = cfg.dtau;
    as_solver.rannacher_substeps = cfg.rannacher_substeps;
    as_solver.power = cfg.power;
    as_solver.validate();

    const DerivedConstants d = derive_constants(params);
    Mesh1D grid = uniform_mesh(cfg.radius, cfg.dx, ElementOrder::P1);
    const auto x = grid.nodes();
    const std::size_t count = grid.node_count();
    const double h = grid.max_element_size();
    const FdmOperator op(h, count, d.d_coeff, d.c_r, cfg.power);
    const BoundaryState bstate{grid.right(), d.d_coeff};
    const auto boundary = [&](double tau) {
        return BoundaryValues{bstate.left(tau), bstate.right(tau)};
    };

    const TimeGrid tgrid = make_time_grid(d.tau_star, d.tau_max, cfg.dtau);
    SolutionSurface surface{grid, params, as_solver, Method::FiniteDifference, {}, {}, {}, {}};
    auto& diag = surface.diagnostics;
    diag.dx = h;
    diag.node_spacing = h;
    diag.dtau = tgrid.dtau;
    diag.steps = tgrid.steps;
    diag.dtau_over_dx2 = tgrid.dtau / (h * h);

    std::vector<double> u(count);
    for (std::size_t i = 1; i + 1 < count; ++i) {
        u[i] = initial_profile(x[i], params);
    }
    u.front() = boundary(d.tau_star).left;
    u.back() = boundary(d.tau_star).right;

    const auto record = [&](double tau, const std::vector<double>& state) {
        std::vector<double> w = op.auxiliary(state);
        if (!finite(w)) {
            return false;
        }
        for (std::size_t i = 0; i < count; ++i) {
            diag.max_abs_v = std::max(diag.max_abs_v, std::abs(w[i]));
            if (std::abs(x[i]) <= 0.1) {
                diag.max_abs_v_center = std::max(diag.max_abs_v_center, std::abs(w[i]));
            }
        }
        surface.tau.push_back(tau);
        surface.u.push_back(state);
        surface.v.push_back(std::move(w));
        return true;
    };
    record(d.tau_star, u);

    const auto fail = [&](double tau_bad) {
        std::ostringstream os;
        os << "non-finite state in finite-difference solve at tau = " << tau_bad
           << " (dtau/dx^2 = " << diag.dtau_over_dx2 << ", dtau = " << tgrid.dtau
           << ", dx = " << h << ")";
        throw NonFiniteStateError(os.str(), surface.tau.back(), surface.u.back(),
                                  diag.dtau_over_dx2);
    };

    for (std::size_t step = 0; step < tgrid.steps; ++step) {
        const double tau0 = d.tau_star + static_cast<double>(step) * tgrid.dtau;
        const double tau1 = step + 1 == tgrid.steps ? d.tau_max : tau0 + tgrid.dtau;
        if (step == 0 && cfg.rannacher_substeps > 0) {
            const auto sub = static_cast<std::size_t>(cfg.rannacher_substeps);
            const double dt = (tau1 - tau0) / static_cast<double>(sub);
            for (std::size_t k = 0; k < sub; ++k) {
                const double ts = tau0 + static_cast<double>(k) * dt;
                const double te = k + 1 == sub ? tau1 : ts + dt;
                u = op.step(u, te - ts, 1.0, boundary(te));
                if (!finite(u)) {
                    fail(ts);
                }
            }
        } else {
            std::vector<double> next = op.step(u, tau1 - tau0, cfg.theta, boundary(tau1));
            if (!finite(next)) {
                fail(tau1);
            }
            u = std::move(next);
        }
        if (!record(tau1, u)) {
            fail(tau1);
        }
    }
    return surface;
}

}  // namespace rapm
