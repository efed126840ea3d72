#pragma once

#include <cstddef>
#include <vector>

#include "rapm/assembly.hpp"
#include "rapm/elements.hpp"
#include "rapm/model.hpp"
#include "rapm/solver.hpp"

namespace rapm {

struct FdmConfig {
    double dx = 0.01;
    double dtau = 0.0005;
    double radius = 3.0;
    double theta = 0.5;
    int rannacher_substeps = 4;
    PowerMode power = PowerMode::Signed;
};

/// Tridiagonal coefficients of the centred stencil for u_xx + u_x on a
/// uniform grid: (lower, diag, upper) applied as lo u_{i-1} + d u_i + up u_{i+1}.
struct Stencil {
    double lower;
    double diag;
    double upper;
};
[[nodiscard]] Stencil fdm_stencil(double dx) noexcept;

/// Centred-difference operator on a uniform grid of `nodes` points.
class FdmOperator {
public:
    FdmOperator(double dx, std::size_t nodes, double d_coeff, double c_r,
                PowerMode power = PowerMode::Signed);

    /// w = u_xx + u_x at interior nodes; boundary entries copy their neighbour.
    [[nodiscard]] std::vector<double> auxiliary(const std::vector<double>& u) const;

    /// One theta-step of the linear part with the power term at the old level.
    /// `u` holds all nodes; the result carries the new boundary values.
    [[nodiscard]] std::vector<double> step(const std::vector<double>& u, double dt, double theta,
                                           BoundaryValues bc_new) const;

private:
    std::size_t nodes_;
    double c_r_;
    PowerMode power_;
    Stencil aux_;
    Stencil lin_;  // u_xx + (1 + D) u_x
};

/// Step restriction used when the oracle runs beside the element solver:
/// min(dtau, dx^2) keeps the explicit power term stable for |w| well past the
/// values reached by a call under the reference parameters.
[[nodiscard]] inline double fdm_stable_dtau(double dtau, double dx) noexcept {
    return dtau < dx * dx ? dtau : dx * dx;
}

/// Finite-difference solution of
///   u_tau = w + D u_x + C_R g(w),  w = u_xx + u_x
/// with centred differences, the linear part theta-weighted and the power
/// term explicit. Same data and Rannacher start-up as the element solver.
[[nodiscard]] SolutionSurface fdm_solve(const RapmParams& params, const FdmConfig& cfg);

}  // namespace rapm
