#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace rapm {

enum class ElementOrder { P1, P2 };

[[nodiscard]] constexpr std::size_t nodes_per_element(ElementOrder order) noexcept {
    return order == ElementOrder::P1 ? 2 : 3;
}

/// Lagrange shape functions on the reference element [0, 1].
/// Local node order is (left, [mid,] right).
struct ShapeValues {
    std::array<double, 3> value{};
    std::array<double, 3> deriv{};  ///< d/dxi
    std::size_t count = 0;
};

[[nodiscard]] ShapeValues shape_eval(ElementOrder order, double xi);

/// One-dimensional Lagrange mesh over [-R, R].
///
/// Nodes are numbered left to right; for P2 the midpoint of element e sits
/// between its endpoints, so element e owns nodes (2e, 2e+1, 2e+2).
class Mesh1D {
public:
    /// Builds a mesh from element endpoints (strictly increasing, at least two).
    Mesh1D(std::vector<double> endpoints, ElementOrder order);

    [[nodiscard]] ElementOrder order() const noexcept { return order_; }
    [[nodiscard]] std::span<const double> nodes() const noexcept { return nodes_; }
    [[nodiscard]] std::size_t node_count() const noexcept { return nodes_.size(); }
    [[nodiscard]] std::size_t element_count() const noexcept { return endpoints_.size() - 1; }
    [[nodiscard]] std::size_t interior_count() const noexcept { return nodes_.size() - 2; }

    [[nodiscard]] double left() const noexcept { return nodes_.front(); }
    [[nodiscard]] double right() const noexcept { return nodes_.back(); }

    [[nodiscard]] double element_size(std::size_t e) const noexcept {
        return endpoints_[e + 1] - endpoints_[e];
    }
    [[nodiscard]] double element_left(std::size_t e) const noexcept { return endpoints_[e]; }

    /// Global node indices of element e in local order.
    [[nodiscard]] std::array<std::size_t, 3> element_nodes(std::size_t e) const noexcept;

    /// Largest element size (the spacing between element endpoints).
    [[nodiscard]] double max_element_size() const noexcept;
    /// Smallest distance between neighbouring nodes.
    [[nodiscard]] double min_node_spacing() const noexcept;

    /// Element containing x (the right one at shared endpoints, the last at x = R);
    /// x must lie in the mesh.
    [[nodiscard]] std::size_t locate(double x) const;

    /// Interpolates nodal values at x with the element's own basis.
    [[nodiscard]] double interpolate(std::span<const double> nodal, double x) const;

private:
    std::vector<double> endpoints_;
    std::vector<double> nodes_;
    ElementOrder order_;
};

/// Uniform mesh on [-radius, radius]. If 2R/dx is not an integer the element
/// count is rounded up and the spacing recomputed so both endpoints are exact.
[[nodiscard]] Mesh1D uniform_mesh(double radius, double dx, ElementOrder order);

}  // namespace rapm
