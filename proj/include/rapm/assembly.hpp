#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "rapm/banded.hpp"
#include "rapm/elements.hpp"
#include "rapm/mesh.hpp"

namespace rapm {

/// Columns of a global matrix belonging to the two boundary nodes, restricted
/// to interior rows. Only the first/last few rows can be nonzero.
struct BoundaryColumns {
    std::vector<double> left;
    std::vector<double> right;
};

/// Galerkin system over the interior nodes 1..n of a mesh with Dirichlet
/// data eliminated. Interior row j corresponds to global node j + 1.
struct GlobalSystem {
    BandedMatrix mass;        ///< M
    BandedMatrix stiffness;   ///< K
    BandedMatrix convection;  ///< P
    /// Nonlinear weights over interior rows and all node columns
    /// (n x (n + 2) folded as interior block plus boundary columns).
    BandedMatrix nonlinear;
    BoundaryColumns mass_bc;
    BoundaryColumns stiffness_bc;
    BoundaryColumns convection_bc;
    BoundaryColumns nonlinear_bc;
    Nonlinearity variant = Nonlinearity::GroupFE;

    [[nodiscard]] std::size_t size() const noexcept { return mass.size(); }
};

[[nodiscard]] GlobalSystem assemble(const Mesh1D& mesh, Nonlinearity variant);

/// Dirichlet data of the transformed problem: u(-R) = 0 and the far-field
/// call asymptote u(R) = 1 - e^{-D tau - R}.
struct BoundaryState {
    double radius = 0.0;
    double d_coeff = 0.0;

    [[nodiscard]] double left(double /*tau*/) const noexcept { return 0.0; }
    [[nodiscard]] double right(double tau) const noexcept;
    [[nodiscard]] double right_rate(double tau) const noexcept;
};

/// Boundary values (left, right) at one time level.
struct BoundaryValues {
    double left = 0.0;
    double right = 0.0;
};

struct LiftingVectors {
    std::vector<double> mass;        ///< b_M
    std::vector<double> stiffness;   ///< b_K
    std::vector<double> convection;  ///< b_P
};

[[nodiscard]] LiftingVectors lifting_vectors(const GlobalSystem& sys, BoundaryValues bv);

[[nodiscard]] inline LiftingVectors lifting_vectors(const GlobalSystem& sys,
                                                    const BoundaryState& bs, double tau) {
    return lifting_vectors(sys, BoundaryValues{bs.left(tau), bs.right(tau)});
}

}  // namespace rapm
