#include "rapm/assembly.hpp"

#include <cmath>

namespace rapm {

namespace {

struct Scatter {
    BandedMatrix* interior;
    BoundaryColumns* boundary;
};

void scatter(const LocalMatrix& local, std::size_t k, const std::array<std::size_t, 3>& nodes,
             std::size_t node_count, Scatter target) {
    const std::size_t last = node_count - 1;
    for (std::size_t a = 0; a < k; ++a) {
        const std::size_t row = nodes[a];
        if (row == 0 || row == last) {
            continue;  // boundary rows are eliminated
        }
        for (std::size_t b = 0; b < k; ++b) {
            const double value = local[a][b];
            if (value == 0.0) {
                continue;
            }
            const std::size_t col = nodes[b];
            if (col == 0) {
                target.boundary->left[row - 1] += value;
            } else if (col == last) {
                target.boundary->right[row - 1] += value;
            } else {
                target.interior->ref(row - 1, col - 1) += value;
            }
        }
    }
}

BoundaryColumns zero_columns(std::size_t n) {
    return {std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
}

}  // namespace

GlobalSystem assemble(const Mesh1D& mesh, Nonlinearity variant) {
    const std::size_t n = mesh.interior_count();
    const std::size_t band = mesh.order() == ElementOrder::P1 ? 1 : 2;
    const std::size_t nl_band = variant == Nonlinearity::GroupFE ? band : 0;
    GlobalSystem sys{BandedMatrix(n, band, band),
                     BandedMatrix(n, band, band),
                     BandedMatrix(n, band, band),
                     BandedMatrix(n, nl_band, nl_band),
                     zero_columns(n),
                     zero_columns(n),
                     zero_columns(n),
                     zero_columns(n),
                     variant};

    const std::size_t k = nodes_per_element(mesh.order());
    const std::size_t count = mesh.node_count();
    for (std::size_t e = 0; e < mesh.element_count(); ++e) {
        const double h = mesh.element_size(e);
        const auto nodes = mesh.element_nodes(e);
        const ElementMatrices em = element_matrices(h, mesh.order());
        scatter(em.mass, k, nodes, count, {&sys.mass, &sys.mass_bc});
        scatter(em.stiff, k, nodes, count, {&sys.stiffness, &sys.stiffness_bc});
        scatter(em.conv, k, nodes, count, {&sys.convection, &sys.convection_bc});
        scatter(nonlinear_weights(h, mesh.order(), variant), k, nodes, count,
                {&sys.nonlinear, &sys.nonlinear_bc});
    }
    return sys;
}

double BoundaryState::right(double tau) const noexcept {
    return -std::expm1(-d_coeff * tau - radius);
}

double BoundaryState::right_rate(double tau) const noexcept {
    return d_coeff * std::exp(-d_coeff * tau - radius);
}

LiftingVectors lifting_vectors(const GlobalSystem& sys, BoundaryValues bv) {
    const std::size_t n = sys.size();
    LiftingVectors lift{std::vector<double>(n), std::vector<double>(n), std::vector<double>(n)};
    for (std::size_t j = 0; j < n; ++j) {
        lift.mass[j] = sys.mass_bc.left[j] * bv.left + sys.mass_bc.right[j] * bv.right;
        lift.stiffness[j] =
            sys.stiffness_bc.left[j] * bv.left + sys.stiffness_bc.right[j] * bv.right;
        lift.convection[j] =
            sys.convection_bc.left[j] * bv.left + sys.convection_bc.right[j] * bv.right;
    }
    return lift;
}

}  // namespace rapm
