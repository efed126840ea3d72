#include "rapm/banded.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

#include "rapm/error.hpp"

namespace rapm {

BandedMatrix::BandedMatrix(std::size_t n, std::size_t lower, std::size_t upper)
    : n_(n), lower_(lower), upper_(upper), data_(n * (lower + upper + 1), 0.0) {}

std::vector<double> BandedMatrix::multiply(std::span<const double> x) const {
    std::vector<double> y(n_, 0.0);
    multiply_add(x, 1.0, y);
    return y;
}

void BandedMatrix::multiply_add(std::span<const double> x, double alpha,
                                std::span<double> y) const {
    for (std::size_t i = 0; i < n_; ++i) {
        const std::size_t j0 = i > lower_ ? i - lower_ : 0;
        const std::size_t j1 = std::min(n_ - 1, i + upper_);
        double sum = 0.0;
        for (std::size_t j = j0; j <= j1; ++j) {
            sum += data_[index(i, j)] * x[j];
        }
        y[i] += alpha * sum;
    }
}

std::size_t BandedMatrix::effective_bandwidth() const noexcept {
    std::size_t width = 0;
    for (std::size_t i = 0; i < n_; ++i) {
        const std::size_t j0 = i > lower_ ? i - lower_ : 0;
        const std::size_t j1 = std::min(n_ - 1, i + upper_);
        for (std::size_t j = j0; j <= j1; ++j) {
            if (data_[index(i, j)] != 0.0) {
                width = std::max(width, i > j ? i - j : j - i);
            }
        }
    }
    return width;
}

std::vector<double> BandedMatrix::diagonal() const {
    std::vector<double> d(n_);
    for (std::size_t i = 0; i < n_; ++i) {
        d[i] = data_[index(i, i)];
    }
    return d;
}

std::vector<double> BandedMatrix::row_sums() const {
    const std::vector<double> ones(n_, 1.0);
    return multiply(ones);
}

BandedMatrix BandedMatrix::scale_rows(std::span<const double> d) const {
    BandedMatrix out = *this;
    for (std::size_t i = 0; i < n_; ++i) {
        const std::size_t j0 = i > lower_ ? i - lower_ : 0;
        const std::size_t j1 = std::min(n_ - 1, i + upper_);
        for (std::size_t j = j0; j <= j1; ++j) {
            out.data_[index(i, j)] *= d[i];
        }
    }
    return out;
}

BandedMatrix BandedMatrix::scale_cols(std::span<const double> d) const {
    BandedMatrix out = *this;
    for (std::size_t i = 0; i < n_; ++i) {
        const std::size_t j0 = i > lower_ ? i - lower_ : 0;
        const std::size_t j1 = std::min(n_ - 1, i + upper_);
        for (std::size_t j = j0; j <= j1; ++j) {
            out.data_[index(i, j)] *= d[j];
        }
    }
    return out;
}

BandedMatrix BandedMatrix::combine(double alpha, const BandedMatrix& a, double beta,
                                   const BandedMatrix& b) {
    const std::size_t n = a.size();
    BandedMatrix out(n, std::max(a.lower_, b.lower_), std::max(a.upper_, b.upper_));
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j0 = i > out.lower_ ? i - out.lower_ : 0;
        const std::size_t j1 = std::min(n - 1, i + out.upper_);
        for (std::size_t j = j0; j <= j1; ++j) {
            out.data_[out.index(i, j)] = alpha * a.at(i, j) + beta * b.at(i, j);
        }
    }
    return out;
}

BandedMatrix BandedMatrix::product(const BandedMatrix& a, const BandedMatrix& b) {
    const std::size_t n = a.size();
    BandedMatrix out(n, std::min(n - 1, a.lower_ + b.lower_),
                     std::min(n - 1, a.upper_ + b.upper_));
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t k0 = i > a.lower_ ? i - a.lower_ : 0;
        const std::size_t k1 = std::min(n - 1, i + a.upper_);
        for (std::size_t k = k0; k <= k1; ++k) {
            const double aik = a.data_[a.index(i, k)];
            if (aik == 0.0) {
                continue;
            }
            const std::size_t j0 = k > b.lower_ ? k - b.lower_ : 0;
            const std::size_t j1 = std::min(n - 1, k + b.upper_);
            for (std::size_t j = j0; j <= j1; ++j) {
                out.data_[out.index(i, j)] += aik * b.data_[b.index(k, j)];
            }
        }
    }
    return out;
}

BandedMatrix BandedMatrix::diagonal_matrix(std::span<const double> d) {
    BandedMatrix out(d.size(), 0, 0);
    std::copy(d.begin(), d.end(), out.data_.begin());
    return out;
}

std::vector<double> BandedMatrix::to_dense() const {
    std::vector<double> dense(n_ * n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
        const std::size_t j0 = i > lower_ ? i - lower_ : 0;
        const std::size_t j1 = std::min(n_ - 1, i + upper_);
        for (std::size_t j = j0; j <= j1; ++j) {
            dense[i * n_ + j] = data_[index(i, j)];
        }
    }
    return dense;
}

BandedLU::BandedLU(const BandedMatrix& a)
    : n_(a.size()), kl_(a.lower()), ku_(a.lower() + a.upper()),
      lu_(n_ * (kl_ + ku_ + 1), 0.0), pivots_(n_) {
    std::vector<double> row_scale(n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
        const std::size_t j0 = i > kl_ ? i - kl_ : 0;
        const std::size_t j1 = std::min(n_ - 1, i + a.upper());
        for (std::size_t j = j0; j <= j1; ++j) {
            const double aij = a.at(i, j);
            at(i, j) = aij;
            row_scale[i] = std::max(row_scale[i], std::abs(aij));
        }
    }

    for (std::size_t k = 0; k < n_; ++k) {
        const std::size_t last_row = std::min(n_ - 1, k + kl_);
        const std::size_t last_col = std::min(n_ - 1, k + ku_);
        std::size_t p = k;
        double best = std::abs(at(k, k));
        for (std::size_t i = k + 1; i <= last_row; ++i) {
            if (std::abs(at(i, k)) > best) {
                best = std::abs(at(i, k));
                p = i;
            }
        }
        pivots_[k] = p;
        if (!(best > 1e-14 * row_scale[p]) || row_scale[p] == 0.0) {
            std::ostringstream os;
            os << "pivot " << best << " at row " << k << " below 1e-14 of row scale "
               << row_scale[p];
            throw Error(ErrorCode::LinearSolveFailure, os.str());
        }
        if (p != k) {
            for (std::size_t j = k; j <= last_col; ++j) {
                std::swap(at(k, j), at(p, j));
            }
            std::swap(row_scale[k], row_scale[p]);
        }
        const double pivot = at(k, k);
        for (std::size_t i = k + 1; i <= last_row; ++i) {
            const double l = at(i, k) / pivot;
            at(i, k) = l;
            if (l == 0.0) {
                continue;
            }
            for (std::size_t j = k + 1; j <= last_col; ++j) {
                at(i, j) -= l * at(k, j);
            }
        }
    }
}

std::vector<double> BandedLU::solve(std::span<const double> b) const {
    std::vector<double> x(b.begin(), b.end());
    solve_in_place(x);
    return x;
}

void BandedLU::solve_in_place(std::span<double> b) const {
    for (std::size_t k = 0; k < n_; ++k) {
        if (pivots_[k] != k) {
            std::swap(b[k], b[pivots_[k]]);
        }
        const std::size_t last_row = std::min(n_ - 1, k + kl_);
        for (std::size_t i = k + 1; i <= last_row; ++i) {
            b[i] -= at(i, k) * b[k];
        }
    }
    for (std::size_t ii = n_; ii-- > 0;) {
        const std::size_t last_col = std::min(n_ - 1, ii + ku_);
        double sum = b[ii];
        for (std::size_t j = ii + 1; j <= last_col; ++j) {
            sum -= at(ii, j) * b[j];
        }
        b[ii] = sum / at(ii, ii);
    }
}

}  // namespace rapm
