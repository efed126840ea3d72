#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "rapm/assembly.hpp"
#include "rapm/banded.hpp"
#include "rapm/elements.hpp"
#include "rapm/mesh.hpp"
#include "rapm/model.hpp"

namespace rapm {

enum class MassMode { Lumped, Consistent };
enum class BoundaryV { Copy, LinearExtrapolate };

struct SolverConfig {
    double theta = 0.5;
    double dtau = 0.0005;
    int rannacher_substeps = 4;
    MassMode mass_mode = MassMode::Lumped;
    Nonlinearity nonlinearity = Nonlinearity::GroupFE;
    PowerMode power = PowerMode::Signed;
    BoundaryV boundary_v = BoundaryV::Copy;

    /// Throws Error(InvalidParameter) on out-of-range fields.
    void validate() const;
};

/// Largest interior size accepted in consistent-mass mode, where the inner
/// inverse mass is dense.
inline constexpr std::size_t kMaxConsistentSize = 2000;

/// Spatial operators of the mixed Galerkin scheme on one mesh:
///   v = M^{-1} (-K u + P u - b_K + b_P)
///   d/dtau (M u + b_M) = F(u) = -K u + (1 + D) P u + C_R N g(v) - b_K + (1 + D) b_P
/// where M^{-1} is the lumped or consistent inverse mass.
class Discretization {
public:
    Discretization(const Mesh1D& mesh, Nonlinearity variant, MassMode mass_mode,
                   BoundaryV boundary_v = BoundaryV::Copy,
                   PowerMode power = PowerMode::Signed);

    [[nodiscard]] const Mesh1D& mesh() const noexcept { return mesh_; }
    [[nodiscard]] const GlobalSystem& system() const noexcept { return sys_; }
    [[nodiscard]] std::size_t size() const noexcept { return sys_.size(); }
    [[nodiscard]] MassMode mass_mode() const noexcept { return mass_mode_; }

    /// Interior v from interior u and the lifting vectors.
    [[nodiscard]] std::vector<double> recover_v(std::span<const double> u,
                                                const LiftingVectors& lift) const;

    /// Full nodal v (boundary values extrapolated from the interior).
    [[nodiscard]] std::vector<double> extend_v(std::span<const double> v) const;

    /// C_R N g(v) over interior rows, v given on interior nodes.
    [[nodiscard]] std::vector<double> nonlinear_term(std::span<const double> v,
                                                     double c_r) const;

    [[nodiscard]] std::vector<double> rhs(std::span<const double> u, std::span<const double> v,
                                          const LiftingVectors& lift, double d_coeff,
                                          double c_r) const;

    /// Linearized nonlinear operator W = C_R N diag(cbrt(v_ext)) E over the
    /// interior, so that C_R N g(v_new) ~ W v_new.
    [[nodiscard]] BandedMatrix linearized_nonlinear(std::span<const double> v_old,
                                                    double c_r) const;

    /// Step matrix A = M - theta dtau (-K + (1 + D) P + W M^{-1} (-K + P)),
    /// lumped mode only.
    [[nodiscard]] BandedMatrix step_matrix(std::span<const double> v_old, double dtau,
                                           double theta, double d_coeff, double c_r) const;

    /// M - theta dtau (-K + (1 + D) P), the linear Black-Scholes step matrix.
    [[nodiscard]] BandedMatrix linear_step_matrix(double dtau, double theta,
                                                  double d_coeff) const;

    /// One linearized theta-step from tau_old to tau_old + dtau.
    [[nodiscard]] std::vector<double> step(std::span<const double> u_old,
                                           BoundaryValues bc_old, BoundaryValues bc_new,
                                           double dtau, double theta, double d_coeff,
                                           double c_r) const;

    /// Interior slice of a full nodal vector, and the reverse.
    [[nodiscard]] std::vector<double> interior(std::span<const double> full) const;
    [[nodiscard]] std::vector<double> full(std::span<const double> u,
                                           BoundaryValues bc) const;

private:
    [[nodiscard]] std::vector<double> apply_inverse_mass(std::vector<double> rhs) const;

    Mesh1D mesh_;
    GlobalSystem sys_;
    MassMode mass_mode_;
    BoundaryV boundary_v_;
    PowerMode power_;
    std::vector<double> lumped_;           // row sums of M
    std::optional<BandedLU> mass_lu_;      // consistent mode
    BandedMatrix inner_;                   // lumped M^{-1} (-K + P)
    std::vector<double> inner_dense_;      // consistent M^{-1} (-K + P), row-major
};

struct StabilityDiagnostics {
    double dx = 0.0;             ///< largest element size
    double node_spacing = 0.0;   ///< smallest node distance
    double dtau = 0.0;           ///< effective macro step
    std::size_t steps = 0;
    double dtau_over_dx2 = 0.0;  ///< dtau / node_spacing^2
    double max_abs_v = 0.0;
    double max_abs_v_center = 0.0;  ///< max |v| over |x| <= 0.1
};

enum class Method { FiniteElement, FiniteDifference };

/// Nodal history of the transformed solution from tau* to tau_max.
struct SolutionSurface {
    Mesh1D mesh;
    RapmParams params;
    SolverConfig config;
    Method method = Method::FiniteElement;
    std::vector<double> tau;
    std::vector<std::vector<double>> u;  ///< full nodal values per level
    std::vector<std::vector<double>> v;  ///< full nodal v per level
    StabilityDiagnostics diagnostics;

    /// V(S, 0) from the last stored level.
    [[nodiscard]] double value_at(double spot) const;
    /// V(S, t); closed-form Black-Scholes for t >= t*, linear in tau between
    /// stored levels otherwise.
    [[nodiscard]] double value_at(double spot, double time) const;
};

/// Time steps from tau_begin to tau_end: count = round(span/dtau) (at least
/// one) and the step recomputed so the end is hit exactly.
struct TimeGrid {
    std::size_t steps;
    double dtau;
};
[[nodiscard]] TimeGrid make_time_grid(double tau_begin, double tau_end, double dtau);

/// Initial data at tau*: the switching profile, or the raw payoff if tau* = 0.
[[nodiscard]] double initial_profile(double x, const RapmParams& p);

[[nodiscard]] SolutionSurface solve_nonlinear_phase(const RapmParams& params,
                                                    const Mesh1D& mesh,
                                                    const SolverConfig& cfg);

struct PricePoint {
    double spot;
    double value;
};

[[nodiscard]] std::vector<PricePoint> price_option(const RapmParams& params,
                                                   const Mesh1D& mesh,
                                                   const SolverConfig& cfg,
                                                   std::span<const double> spots);

}  // namespace rapm
