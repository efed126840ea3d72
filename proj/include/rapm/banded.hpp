#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace rapm {

/// Square band matrix in diagonal-major storage: entry (i, j) with
/// -lower <= j - i <= upper lives in diagonal j - i + lower at row i.
class BandedMatrix {
public:
    BandedMatrix() = default;
    BandedMatrix(std::size_t n, std::size_t lower, std::size_t upper);

    [[nodiscard]] std::size_t size() const noexcept { return n_; }
    [[nodiscard]] std::size_t lower() const noexcept { return lower_; }
    [[nodiscard]] std::size_t upper() const noexcept { return upper_; }

    [[nodiscard]] bool in_band(std::size_t i, std::size_t j) const noexcept {
        return j + lower_ >= i && j <= i + upper_;
    }

    /// Zero outside the band.
    [[nodiscard]] double at(std::size_t i, std::size_t j) const noexcept {
        return in_band(i, j) ? data_[index(i, j)] : 0.0;
    }
    /// Reference to a band entry; (i, j) must be in the band.
    double& ref(std::size_t i, std::size_t j) noexcept { return data_[index(i, j)]; }

    [[nodiscard]] std::vector<double> multiply(std::span<const double> x) const;
    void multiply_add(std::span<const double> x, double alpha, std::span<double> y) const;

    /// Largest |j - i| among entries that are not exactly zero.
    [[nodiscard]] std::size_t effective_bandwidth() const noexcept;

    [[nodiscard]] std::vector<double> diagonal() const;
    [[nodiscard]] std::vector<double> row_sums() const;

    /// diag(d) * this
    [[nodiscard]] BandedMatrix scale_rows(std::span<const double> d) const;
    /// this * diag(d)
    [[nodiscard]] BandedMatrix scale_cols(std::span<const double> d) const;

    /// alpha * a + beta * b, band is the union of both bands.
    [[nodiscard]] static BandedMatrix combine(double alpha, const BandedMatrix& a,
                                              double beta, const BandedMatrix& b);
    /// a * b, band widths add.
    [[nodiscard]] static BandedMatrix product(const BandedMatrix& a, const BandedMatrix& b);

    [[nodiscard]] static BandedMatrix diagonal_matrix(std::span<const double> d);

    /// Row-major dense copy, for verification and small solves.
    [[nodiscard]] std::vector<double> to_dense() const;

private:
    [[nodiscard]] std::size_t index(std::size_t i, std::size_t j) const noexcept {
        return (j + lower_ - i) * n_ + i;
    }

    std::size_t n_ = 0;
    std::size_t lower_ = 0;
    std::size_t upper_ = 0;
    std::vector<double> data_;
};

/// LU factorization with partial pivoting of a band matrix. Throws
/// Error(LinearSolveFailure) when a pivot falls below 1e-14 of its row scale.
class BandedLU {
public:
    explicit BandedLU(const BandedMatrix& a);

    [[nodiscard]] std::vector<double> solve(std::span<const double> b) const;
    void solve_in_place(std::span<double> b) const;

    [[nodiscard]] std::size_t size() const noexcept { return n_; }

private:
    [[nodiscard]] double& at(std::size_t i, std::size_t j) noexcept {
        return lu_[(j + kl_ - i) * n_ + i];
    }
    [[nodiscard]] double at(std::size_t i, std::size_t j) const noexcept {
        return lu_[(j + kl_ - i) * n_ + i];
    }

    std::size_t n_;
    std::size_t kl_;
    std::size_t ku_;  // upper width of U including pivoting fill
    std::vector<double> lu_;
    std::vector<std::size_t> pivots_;
};

}  // namespace rapm
