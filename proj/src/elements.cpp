#include "rapm/elements.hpp"

#include <sstream>

#include "rapm/error.hpp"

namespace rapm {

ElementMatrices element_matrices(double h, ElementOrder order) {
    if (!(h > 0.0)) {
        std::ostringstream os;
        os << "element size must be positive (got " << h << ")";
        throw Error(ErrorCode::InvalidSize, os.str());
    }
    ElementMatrices em;
    if (order == ElementOrder::P1) {
        em.size = 2;
        const double m = h / 6.0;
        const double k = 1.0 / h;
        em.mass = {{{2 * m, m, 0}, {m, 2 * m, 0}, {}}};
        em.stiff = {{{k, -k, 0}, {-k, k, 0}, {}}};
        em.conv = {{{-0.5, 0.5, 0}, {-0.5, 0.5, 0}, {}}};
    } else {
        em.size = 3;
        const double m = h / 30.0;
        const double k = 1.0 / (3.0 * h);
        const double c = 1.0 / 6.0;
        em.mass = {{{4 * m, 2 * m, -m}, {2 * m, 16 * m, 2 * m}, {-m, 2 * m, 4 * m}}};
        em.stiff = {{{7 * k, -8 * k, k}, {-8 * k, 16 * k, -8 * k}, {k, -8 * k, 7 * k}}};
        em.conv = {{{-3 * c, 4 * c, -c}, {-4 * c, 0, 4 * c}, {c, -4 * c, 3 * c}}};
    }
    return em;
}

LocalMatrix nonlinear_weights(double h, ElementOrder order, Nonlinearity variant) {
    if (variant == Nonlinearity::GroupFE) {
        return element_matrices(h, order).mass;
    }
    if (!(h > 0.0)) {
        throw Error(ErrorCode::InvalidSize, "element size must be positive");
    }
    LocalMatrix w{};
    if (order == ElementOrder::P1) {
        // trapezoid rule
        w[0][0] = w[1][1] = h / 2.0;
    } else {
        // Simpson's rule
        w[0][0] = w[2][2] = h / 6.0;
        w[1][1] = 4.0 * h / 6.0;
    }
    return w;
}

std::array<double, 3> nonlinear_action(const NonlinearElementOp& op,
                                       std::span<const double> v_nodal) {
    const std::size_t k = nodes_per_element(op.order);
    if (v_nodal.size() != k) {
        throw Error(ErrorCode::InvalidSize, "nodal vector does not match element order");
    }
    const LocalMatrix w = nonlinear_weights(op.h, op.order, op.variant);
    std::array<double, 3> g{};
    for (std::size_t i = 0; i < k; ++i) {
        g[i] = power43(v_nodal[i], op.power);
    }
    std::array<double, 3> out{};
    for (std::size_t j = 0; j < k; ++j) {
        for (std::size_t i = 0; i < k; ++i) {
            out[j] += w[j][i] * g[i];
        }
    }
    return out;
}

}  // namespace rapm
