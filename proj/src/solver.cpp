#include "rapm/solver.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rapm/error.hpp"

namespace rapm {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// v at a boundary node as a combination of the first/last two interior values.
struct Extension {
    std::array<double, 2> weight{1.0, 0.0};
};

Extension make_extension(std::span<const double> x, bool left, BoundaryV mode) {
    Extension ext;
    const std::size_t count = x.size();
    if (mode == BoundaryV::Copy || count < 4) {
        return ext;
    }
    // Linear through the two nearest interior nodes.
    double s = 0.0;
    if (left) {
        s = (x[1] - x[0]) / (x[2] - x[1]);
    } else {
        s = (x[count - 1] - x[count - 2]) / (x[count - 2] - x[count - 3]);
    }
    ext.weight = {1.0 + s, -s};
    return ext;
}

bool all_finite(std::span<const double> values) {
    return std::all_of(values.begin(), values.end(), [](double a) { return std::isfinite(a); });
}

}  // namespace

void SolverConfig::validate() const {
    if (!(theta >= 0.0 && theta <= 1.0)) {
        throw Error(ErrorCode::InvalidParameter, "theta must lie in [0, 1]");
    }
    if (!(dtau > 0.0) || !std::isfinite(dtau)) {
        throw Error(ErrorCode::InvalidParameter, "dtau must be positive and finite");
    }
    if (rannacher_substeps < 0 || rannacher_substeps > 16) {
        throw Error(ErrorCode::InvalidParameter, "rannacher substeps must lie in [0, 16]");
    }
}

Discretization::Discretization(const Mesh1D& mesh, Nonlinearity variant, MassMode mass_mode,
                               BoundaryV boundary_v, PowerMode power)
    : mesh_(mesh),
      sys_(assemble(mesh, variant)),
      mass_mode_(mass_mode),
      boundary_v_(boundary_v),
      power_(power) {
    const std::size_t n = sys_.size();
    if (n == 0) {
        throw Error(ErrorCode::InvalidSpacing, "mesh has no interior nodes");
    }
    lumped_ = sys_.mass.row_sums();
    for (std::size_t j = 0; j < n; ++j) {
        lumped_[j] += sys_.mass_bc.left[j] + sys_.mass_bc.right[j];
    }
    const BandedMatrix operator_kp =
        BandedMatrix::combine(-1.0, sys_.stiffness, 1.0, sys_.convection);
    if (mass_mode_ == MassMode::Lumped) {
        std::vector<double> inverse(n);
        std::transform(lumped_.begin(), lumped_.end(), inverse.begin(),
                       [](double m) { return 1.0 / m; });
        inner_ = operator_kp.scale_rows(inverse);
    } else {
        if (n > kMaxConsistentSize) {
            std::ostringstream os;
            os << "consistent mass mode supports at most " << kMaxConsistentSize
               << " interior nodes (got " << n << ")";
            throw Error(ErrorCode::InvalidParameter, os.str());
        }
        try {
            mass_lu_.emplace(sys_.mass);
        } catch (const Error& e) {
            throw Error(ErrorCode::SingularMass, e.what());
        }
        inner_dense_.assign(n * n, 0.0);
        std::vector<double> column(n);
        for (std::size_t j = 0; j < n; ++j) {
            for (std::size_t i = 0; i < n; ++i) {
                column[i] = operator_kp.at(i, j);
            }
            mass_lu_->solve_in_place(column);
            for (std::size_t i = 0; i < n; ++i) {
                inner_dense_[i * n + j] = column[i];
            }
        }
    }
}

std::vector<double> Discretization::apply_inverse_mass(std::vector<double> rhs) const {
    if (mass_mode_ == MassMode::Lumped) {
        for (std::size_t j = 0; j < rhs.size(); ++j) {
            rhs[j] /= lumped_[j];
        }
    } else {
        mass_lu_->solve_in_place(rhs);
    }
    return rhs;
}

std::vector<double> Discretization::recover_v(std::span<const double> u,
                                              const LiftingVectors& lift) const {
    const std::size_t n = size();
    std::vector<double> r(n);
    for (std::size_t j = 0; j < n; ++j) {
        r[j] = lift.convection[j] - lift.stiffness[j];
    }
    sys_.stiffness.multiply_add(u, -1.0, r);
    sys_.convection.multiply_add(u, 1.0, r);
    return apply_inverse_mass(std::move(r));
}

std::vector<double> Discretization::extend_v(std::span<const double> v) const {
    const std::size_t n = v.size();
    const auto x = mesh_.nodes();
    const Extension left = make_extension(x, true, boundary_v_);
    const Extension right = make_extension(x, false, boundary_v_);
    std::vector<double> out(n + 2);
    std::copy(v.begin(), v.end(), out.begin() + 1);
    out.front() = left.weight[0] * v[0] + (n > 1 ? left.weight[1] * v[1] : 0.0);
    out.back() = right.weight[0] * v[n - 1] + (n > 1 ? right.weight[1] * v[n - 2] : 0.0);
    return out;
}

std::vector<double> Discretization::nonlinear_term(std::span<const double> v,
                                                   double c_r) const {
    const std::size_t n = size();
    std::vector<double> out(n, 0.0);
    if (c_r == 0.0) {
        return out;
    }
    const std::vector<double> ext = extend_v(v);
    std::vector<double> g(n + 2);
    std::transform(ext.begin(), ext.end(), g.begin(),
                   [this](double a) { return power43(a, power_); });
    sys_.nonlinear.multiply_add(std::span<const double>(g).subspan(1, n), c_r, out);
    for (std::size_t j = 0; j < n; ++j) {
        out[j] += c_r * (sys_.nonlinear_bc.left[j] * g.front() +
                         sys_.nonlinear_bc.right[j] * g.back());
    }
    return out;
}

std::vector<double> Discretization::rhs(std::span<const double> u, std::span<const double> v,
                                        const LiftingVectors& lift, double d_coeff,
                                        double c_r) const {
    std::vector<double> f = nonlinear_term(v, c_r);
    const std::size_t n = size();
    for (std::size_t j = 0; j < n; ++j) {
        f[j] += -lift.stiffness[j] + (1.0 + d_coeff) * lift.convection[j];
    }
    sys_.stiffness.multiply_add(u, -1.0, f);
    sys_.convection.multiply_add(u, 1.0 + d_coeff, f);
    return f;
}

BandedMatrix Discretization::linearized_nonlinear(std::span<const double> v_old,
                                                  double c_r) const {
    const std::size_t n = size();
    const std::size_t band = std::max<std::size_t>(sys_.nonlinear.lower(),
                                                   sys_.variant == Nonlinearity::GroupFE);
    BandedMatrix w(n, std::min(band, n - 1), std::min(band, n - 1));
    if (c_r == 0.0) {
        return w;
    }
    const std::vector<double> ext = extend_v(v_old);
    std::vector<double> cube(n + 2);
    std::transform(ext.begin(), ext.end(), cube.begin(),
                   [this](double a) { return power13(a, power_); });
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = (i > band ? i - band : 0); j <= std::min(n - 1, i + band); ++j) {
            w.ref(i, j) = c_r * sys_.nonlinear.at(i, j) * cube[j + 1];
        }
    }
    const auto x = mesh_.nodes();
    const Extension left = make_extension(x, true, boundary_v_);
    const Extension right = make_extension(x, false, boundary_v_);
    for (std::size_t i = 0; i < n; ++i) {
        const double nl = sys_.nonlinear_bc.left[i];
        const double nr = sys_.nonlinear_bc.right[i];
        if (nl != 0.0) {
            w.ref(i, 0) += c_r * nl * cube.front() * left.weight[0];
            if (n > 1 && left.weight[1] != 0.0) {
                w.ref(i, 1) += c_r * nl * cube.front() * left.weight[1];
            }
        }
        if (nr != 0.0) {
            w.ref(i, n - 1) += c_r * nr * cube.back() * right.weight[0];
            if (n > 1 && right.weight[1] != 0.0) {
                w.ref(i, n - 2) += c_r * nr * cube.back() * right.weight[1];
            }
        }
    }
    return w;
}

BandedMatrix Discretization::linear_step_matrix(double dtau, double theta,
                                                double d_coeff) const {
    const BandedMatrix linear =
        BandedMatrix::combine(-1.0, sys_.stiffness, 1.0 + d_coeff, sys_.convection);
    return BandedMatrix::combine(1.0, sys_.mass, -theta * dtau, linear);
}

BandedMatrix Discretization::step_matrix(std::span<const double> v_old, double dtau,
                                         double theta, double d_coeff, double c_r) const {
    if (mass_mode_ != MassMode::Lumped) {
        throw Error(ErrorCode::InvalidParameter, "banded step matrix needs lumped mass mode");
    }
    const BandedMatrix base = linear_step_matrix(dtau, theta, d_coeff);
    if (c_r == 0.0) {
        return base;
    }
    const BandedMatrix coupling =
        BandedMatrix::product(linearized_nonlinear(v_old, c_r), inner_);
    return BandedMatrix::combine(1.0, base, -theta * dtau, coupling);
}

std::vector<double> Discretization::step(std::span<const double> u_old, BoundaryValues bc_old,
                                         BoundaryValues bc_new, double dtau, double theta,
                                         double d_coeff, double c_r) const {
    const std::size_t n = size();
    const LiftingVectors lift_old = lifting_vectors(sys_, bc_old);
    const LiftingVectors lift_new = lifting_vectors(sys_, bc_new);
    const std::vector<double> v_old = recover_v(u_old, lift_old);

    std::vector<double> b(n, 0.0);
    sys_.mass.multiply_add(u_old, 1.0, b);
    for (std::size_t j = 0; j < n; ++j) {
        b[j] += lift_old.mass[j] - lift_new.mass[j];
    }
    if (theta < 1.0) {
        const std::vector<double> f_old = rhs(u_old, v_old, lift_old, d_coeff, c_r);
        for (std::size_t j = 0; j < n; ++j) {
            b[j] += (1.0 - theta) * dtau * f_old[j];
        }
    }
    // Implicit boundary sources, including the part of W v_new that comes
    // from the lifting: v_new = M^{-1}(-K + P) u_new + M^{-1}(-b_K + b_P).
    std::vector<double> src(n);
    for (std::size_t j = 0; j < n; ++j) {
        src[j] = lift_new.convection[j] - lift_new.stiffness[j];
    }
    const std::vector<double> lift_v = apply_inverse_mass(src);
    const BandedMatrix w = linearized_nonlinear(v_old, c_r);
    w.multiply_add(lift_v, theta * dtau, b);
    for (std::size_t j = 0; j < n; ++j) {
        b[j] += theta * dtau *
                (-lift_new.stiffness[j] + (1.0 + d_coeff) * lift_new.convection[j]);
    }

    if (mass_mode_ == MassMode::Lumped) {
        const BandedMatrix a = step_matrix(v_old, dtau, theta, d_coeff, c_r);
        return BandedLU(a).solve(b);
    }

    const std::vector<double> base = linear_step_matrix(dtau, theta, d_coeff).to_dense();
    RowMajor a = Eigen::Map<const RowMajor>(base.data(), static_cast<Eigen::Index>(n),
                                            static_cast<Eigen::Index>(n));
    if (c_r != 0.0) {
        const Eigen::Map<const RowMajor> inner(inner_dense_.data(),
                                               static_cast<Eigen::Index>(n),
                                               static_cast<Eigen::Index>(n));
        const std::vector<double> wd = w.to_dense();
        const Eigen::Map<const RowMajor> wm(wd.data(), static_cast<Eigen::Index>(n),
                                            static_cast<Eigen::Index>(n));
        a.noalias() -= (theta * dtau) * (wm * inner);
    }
    const Eigen::PartialPivLU<RowMajor> lu(a);
    const double rcond = lu.rcond();
    if (!(rcond > 1e-14)) {
        std::ostringstream os;
        os << "dense step matrix is numerically singular (rcond " << rcond << ")";
        throw Error(ErrorCode::LinearSolveFailure, os.str());
    }
    const Eigen::Map<const Eigen::VectorXd> rhs_vec(b.data(), static_cast<Eigen::Index>(n));
    const Eigen::VectorXd x = lu.solve(rhs_vec);
    return {x.data(), x.data() + n};
}

std::vector<double> Discretization::interior(std::span<const double> full) const {
    return {full.begin() + 1, full.end() - 1};
}

std::vector<double> Discretization::full(std::span<const double> u, BoundaryValues bc) const {
    std::vector<double> out(u.size() + 2);
    out.front() = bc.left;
    std::copy(u.begin(), u.end(), out.begin() + 1);
    out.back() = bc.right;
    return out;
}

TimeGrid make_time_grid(double tau_begin, double tau_end, double dtau) {
    const double span = tau_end - tau_begin;
    const auto steps = std::max<long long>(1, std::llround(span / dtau));
    return {static_cast<std::size_t>(steps), span / static_cast<double>(steps)};
}

double initial_profile(double x, const RapmParams& p) {
    const DerivedConstants d = derive_constants(p);
    if (d.tau_star > 0.0) {
        return switching_profile(x, p);
    }
    return transformed_payoff(x);
}

SolutionSurface solve_nonlinear_phase(const RapmParams& params, const Mesh1D& mesh,
                                      const SolverConfig& cfg) {
    cfg.validate();
    const DerivedConstants d = derive_constants(params);
    const Discretization disc(mesh, cfg.nonlinearity, cfg.mass_mode, cfg.boundary_v,
                              cfg.power);
    const BoundaryState bstate{mesh.right(), d.d_coeff};
    const auto boundary = [&](double tau) {
        return BoundaryValues{bstate.left(tau), bstate.right(tau)};
    };

    const TimeGrid grid = make_time_grid(d.tau_star, d.tau_max, cfg.dtau);
    SolutionSurface surface{mesh, params, cfg, Method::FiniteElement, {}, {}, {}, {}};
    auto& diag = surface.diagnostics;
    diag.dx = mesh.max_element_size();
    diag.node_spacing = mesh.min_node_spacing();
    diag.dtau = grid.dtau;
    diag.steps = grid.steps;
    diag.dtau_over_dx2 = grid.dtau / (diag.node_spacing * diag.node_spacing);

    const auto x = mesh.nodes();
    std::vector<double> u(disc.size());
    for (std::size_t j = 0; j < u.size(); ++j) {
        u[j] = initial_profile(x[j + 1], params);
    }

    const auto record = [&](double tau, const std::vector<double>& u_int) {
        const BoundaryValues bc = boundary(tau);
        const std::vector<double> v =
            disc.extend_v(disc.recover_v(u_int, lifting_vectors(disc.system(), bc)));
        for (std::size_t i = 0; i < v.size(); ++i) {
            diag.max_abs_v = std::max(diag.max_abs_v, std::abs(v[i]));
            if (std::abs(x[i]) <= 0.1) {
                diag.max_abs_v_center = std::max(diag.max_abs_v_center, std::abs(v[i]));
            }
        }
        surface.tau.push_back(tau);
        surface.u.push_back(disc.full(u_int, bc));
        surface.v.push_back(v);
        return all_finite(v);
    };
    record(d.tau_star, u);

    const auto fail = [&](double tau_bad, const std::string& why) {
        std::ostringstream os;
        os << why << " at tau = " << tau_bad << " (dtau/dx^2 = " << diag.dtau_over_dx2
           << ", dtau = " << grid.dtau << ", dx = " << diag.dx << ")";
        throw NonFiniteStateError(os.str(), surface.tau.back(), surface.u.back(),
                                  diag.dtau_over_dx2);
    };

    const auto advance = [&](double tau, double dt, double theta) {
        try {
            return disc.step(u, boundary(tau), boundary(tau + dt), dt, theta, d.d_coeff, d.c_r);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::LinearSolveFailure) {
                throw;
            }
            std::ostringstream os;
            os << e.what() << " at tau = " << tau << " (dtau/dx^2 = " << diag.dtau_over_dx2
               << ")";
            throw Error(ErrorCode::LinearSolveFailure, os.str());
        }
    };

    for (std::size_t step = 0; step < grid.steps; ++step) {
        const double tau0 = d.tau_star + static_cast<double>(step) * grid.dtau;
        const double tau1 =
            step + 1 == grid.steps ? d.tau_max : tau0 + grid.dtau;
        std::vector<double> next;
        if (step == 0 && cfg.rannacher_substeps > 0) {
            const auto sub = static_cast<std::size_t>(cfg.rannacher_substeps);
            const double dt = (tau1 - tau0) / static_cast<double>(sub);
            for (std::size_t k = 0; k < sub; ++k) {
                const double ts = tau0 + static_cast<double>(k) * dt;
                u = advance(ts, k + 1 == sub ? tau1 - ts : dt, 1.0);
                if (!all_finite(u)) {
                    fail(ts, "non-finite state in start-up step");
                }
            }
            next = u;
        } else {
            next = advance(tau0, tau1 - tau0, cfg.theta);
        }
        if (!all_finite(next)) {
            fail(tau1, "non-finite state");
        }
        u = std::move(next);
        if (!record(tau1, u)) {
            surface.tau.pop_back();
            surface.u.pop_back();
            surface.v.pop_back();
            fail(tau1, "non-finite auxiliary variable");
        }
    }
    return surface;
}

double SolutionSurface::value_at(double spot) const {
    if (!(spot > 0.0)) {
        throw Error(ErrorCode::NonpositiveSpot, "spot must be positive");
    }
    const double x = std::log(spot / params.strike());
    return spot * mesh.interpolate(u.back(), x);
}

double SolutionSurface::value_at(double spot, double time) const {
    if (!(spot > 0.0)) {
        throw Error(ErrorCode::NonpositiveSpot, "spot must be positive");
    }
    const DerivedConstants d = derive_constants(params);
    if (time >= d.t_star || time >= params.expiry()) {
        return bs_call_price(spot, time, params);
    }
    const double x = std::log(spot / params.strike());
    const double level = 0.5 * params.sigma() * params.sigma() * (params.expiry() - time);
    if (level >= tau.back() || tau.size() == 1) {
        return spot * mesh.interpolate(u.back(), x);
    }
    const auto it = std::upper_bound(tau.begin(), tau.end(), level);
    const std::size_t hi = std::clamp<std::size_t>(static_cast<std::size_t>(it - tau.begin()),
                                                   1, tau.size() - 1);
    const std::size_t lo = hi - 1;
    const double w = std::clamp((level - tau[lo]) / (tau[hi] - tau[lo]), 0.0, 1.0);
    const double ulo = mesh.interpolate(u[lo], x);
    const double uhi = mesh.interpolate(u[hi], x);
    return spot * ((1.0 - w) * ulo + w * uhi);
}

std::vector<PricePoint> price_option(const RapmParams& params, const Mesh1D& mesh,
                                     const SolverConfig& cfg, std::span<const double> spots) {
    const double lo = params.strike() * std::exp(mesh.left());
    const double hi = params.strike() * std::exp(mesh.right());
    for (const double s : spots) {
        if (!(s >= lo * (1.0 - 1e-12) && s <= hi * (1.0 + 1e-12))) {
            std::ostringstream os;
            os << "spot " << s << " outside the truncated domain [" << lo << ", " << hi << "]";
            throw Error(ErrorCode::SpotOutOfDomain, os.str());
        }
    }
    const SolutionSurface surface = solve_nonlinear_phase(params, mesh, cfg);
    std::vector<PricePoint> out;
    out.reserve(spots.size());
    for (const double s : spots) {
        out.push_back({s, surface.value_at(s)});
    }
    return out;
}

}  // namespace rapm
