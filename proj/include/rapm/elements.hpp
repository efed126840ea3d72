#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>

#include "rapm/mesh.hpp"

namespace rapm {

using LocalMatrix = std::array<std::array<double, 3>, 3>;

/// Exact element integrals for one element of size h; entries [j][i] with j
/// the test function and i the trial function. Only the leading k x k block
/// is meaningful (k = 2 for P1, 3 for P2).
struct ElementMatrices {
    LocalMatrix mass{};   ///< int psi_j psi_i
    LocalMatrix stiff{};  ///< int psi_j' psi_i'
    LocalMatrix conv{};   ///< int psi_j psi_i'
    std::size_t size = 0;
};

[[nodiscard]] ElementMatrices element_matrices(double h, ElementOrder order);

enum class Nonlinearity { GroupFE, Quadrature };
enum class PowerMode { Signed, Clamped };

/// The v^(4/3) power. Signed mode uses v * cbrt(v) so that the
/// linearization cbrt(v_old) * v_new is exact at v_new = v_old.
[[nodiscard]] inline double power43(double v, PowerMode mode) noexcept {
    if (mode == PowerMode::Clamped) {
        v = v > 0.0 ? v : 0.0;
    }
    return v * std::cbrt(v);
}

/// The factor multiplying v^{n+1} in the linearized power.
[[nodiscard]] inline double power13(double v, PowerMode mode) noexcept {
    if (mode == PowerMode::Clamped && v < 0.0) {
        return 0.0;
    }
    return std::cbrt(v);
}

/// Nonlinear weight matrix of one element: the contribution to
/// int psi_j v^{4/3} is weights * [g(v_i)]_i. GroupFE uses the consistent
/// mass; Quadrature uses the trapezoid (P1) or Simpson (P2) diagonal.
[[nodiscard]] LocalMatrix nonlinear_weights(double h, ElementOrder order, Nonlinearity variant);

struct NonlinearElementOp {
    Nonlinearity variant = Nonlinearity::GroupFE;
    ElementOrder order = ElementOrder::P1;
    double h = 0.0;
    PowerMode power = PowerMode::Signed;
};

/// Element vector approximating int psi_j v^{4/3} from nodal values of v.
[[nodiscard]] std::array<double, 3> nonlinear_action(const NonlinearElementOp& op,
                                                     std::span<const double> v_nodal);

}  // namespace rapm
