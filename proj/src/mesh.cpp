#include "rapm/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "rapm/error.hpp"

namespace rapm {

ShapeValues shape_eval(ElementOrder order, double xi) {
    if (!(xi >= 0.0 && xi <= 1.0)) {
        std::ostringstream os;
        os << "reference coordinate " << xi << " outside [0, 1]";
        throw Error(ErrorCode::OutOfRange, os.str());
    }
    ShapeValues s;
    if (order == ElementOrder::P1) {
        s.count = 2;
        s.value = {1.0 - xi, xi, 0.0};
        s.deriv = {-1.0, 1.0, 0.0};
    } else {
        s.count = 3;
        s.value = {2.0 * (xi - 0.5) * (xi - 1.0), -4.0 * xi * (xi - 1.0), 2.0 * xi * (xi - 0.5)};
        s.deriv = {4.0 * xi - 3.0, 4.0 - 8.0 * xi, 4.0 * xi - 1.0};
    }
    return s;
}

Mesh1D::Mesh1D(std::vector<double> endpoints, ElementOrder order)
    : endpoints_(std::move(endpoints)), order_(order) {
    if (endpoints_.size() < 2) {
        throw Error(ErrorCode::InvalidSpacing, "mesh needs at least one element");
    }
    for (std::size_t i = 0; i + 1 < endpoints_.size(); ++i) {
        if (!(endpoints_[i + 1] > endpoints_[i]) || !std::isfinite(endpoints_[i + 1])) {
            throw Error(ErrorCode::InvalidSpacing, "mesh endpoints must be strictly increasing");
        }
    }
    if (order_ == ElementOrder::P1) {
        nodes_ = endpoints_;
    } else {
        nodes_.reserve(2 * endpoints_.size() - 1);
        for (std::size_t e = 0; e + 1 < endpoints_.size(); ++e) {
            nodes_.push_back(endpoints_[e]);
            nodes_.push_back(0.5 * (endpoints_[e] + endpoints_[e + 1]));
        }
        nodes_.push_back(endpoints_.back());
    }
}

std::array<std::size_t, 3> Mesh1D::element_nodes(std::size_t e) const noexcept {
    if (order_ == ElementOrder::P1) {
        return {e, e + 1, 0};
    }
    return {2 * e, 2 * e + 1, 2 * e + 2};
}

double Mesh1D::max_element_size() const noexcept {
    double h = 0.0;
    for (std::size_t e = 0; e < element_count(); ++e) {
        h = std::max(h, element_size(e));
    }
    return h;
}

double Mesh1D::min_node_spacing() const noexcept {
    double h = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < nodes_.size(); ++i) {
        h = std::min(h, nodes_[i + 1] - nodes_[i]);
    }
    return h;
}

std::size_t Mesh1D::locate(double x) const {
    const double tol = 1e-12 * (right() - left());
    if (!(x >= left() - tol && x <= right() + tol)) {
        std::ostringstream os;
        os << "x = " << x << " outside mesh [" << left() << ", " << right() << "]";
        throw Error(ErrorCode::SpotOutOfDomain, os.str());
    }
    const auto it = std::upper_bound(endpoints_.begin(), endpoints_.end(), x);
    if (it == endpoints_.begin()) {
        return 0;
    }
    const auto e = static_cast<std::size_t>(it - endpoints_.begin()) - 1;
    return std::min(e, element_count() - 1);
}

double Mesh1D::interpolate(std::span<const double> nodal, double x) const {
    const std::size_t e = locate(x);
    const double xi = std::clamp((x - endpoints_[e]) / element_size(e), 0.0, 1.0);
    const ShapeValues s = shape_eval(order_, xi);
    const auto idx = element_nodes(e);
    double value = 0.0;
    for (std::size_t a = 0; a < s.count; ++a) {
        value += s.value[a] * nodal[idx[a]];
    }
    return value;
}

Mesh1D uniform_mesh(double radius, double dx, ElementOrder order) {
    if (!(radius > 0.0) || !std::isfinite(radius)) {
        throw Error(ErrorCode::InvalidSpacing, "radius must be positive and finite");
    }
    const double width = 2.0 * radius;
    if (!(dx > 0.0) || !(dx < width)) {
        std::ostringstream os;
        os << "spacing " << dx << " must lie in (0, 2R = " << width << ")";
        throw Error(ErrorCode::InvalidSpacing, os.str());
    }
    // Absorb round-off so that e.g. 6 / 0.01 gives 600, not 601.
    const double ratio = width / dx;
    auto count = static_cast<std::size_t>(std::ceil(ratio - 1e-9 * ratio));
    count = std::max<std::size_t>(count, 1);
    std::vector<double> endpoints(count + 1);
    const auto n = static_cast<double>(count);
    for (std::size_t i = 0; i <= count; ++i) {
        // Symmetric form keeps x = 0 exact whenever the count is even.
        endpoints[i] = radius * (2.0 * static_cast<double>(i) - n) / n;
    }
    return Mesh1D(std::move(endpoints), order);
}

}  // namespace rapm
