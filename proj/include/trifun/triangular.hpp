#pragma once

#include <Eigen/Core>
#include <cmath>
#include <complex>
#include <initializer_list>
#include <limits>
#include <vector>

#include "trifun/errors.hpp"

namespace trifun {

template <typename Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Lower triangular matrix in packed row-major storage: entry (i, j) with
/// j <= i lives at offset i*(i+1)/2 + j, for d*(d+1)/2 scalars total. The
/// upper triangle is not stored, so the triangularity invariant cannot be
/// broken, only misread.
template <typename Scalar>
class LowerTriangular {
public:
    using value_type = Scalar;

    explicit LowerTriangular(int dim) : dim_(dim), data_(packed_size(dim), Scalar(0)) {}

    /// Builds from ragged rows, e.g. {{1}, {2, 3}}. Row i must have i + 1 entries.
    LowerTriangular(std::initializer_list<std::initializer_list<Scalar>> rows)
        : dim_(static_cast<int>(rows.size())), data_(packed_size(static_cast<int>(rows.size()))) {
        int i = 0;
        for (const auto& row : rows) {
            if (static_cast<int>(row.size()) != i + 1)
                throw DimensionMismatch("row " + std::to_string(i) + " must have " +
                                        std::to_string(i + 1) + " entries");
            int j = 0;
            for (const Scalar& v : row) data_[packed_index(i, j++)] = v;
            ++i;
        }
    }

    int dim() const { return dim_; }

    Scalar& operator()(int i, int j) { return data_[packed_index(i, j)]; }

    /// Reads above the diagonal return an exact zero.
    Scalar operator()(int i, int j) const {
        return j > i ? Scalar(0) : data_[packed_index(i, j)];
    }

    Scalar diagonal(int i) const { return data_[packed_index(i, i)]; }

    const std::vector<Scalar>& packed() const { return data_; }
    std::vector<Scalar>& packed() { return data_; }

    static std::size_t packed_size(int dim) {
        return static_cast<std::size_t>(dim) * (dim + 1) / 2;
    }

    static std::size_t packed_index(int i, int j) {
        return static_cast<std::size_t>(i) * (i + 1) / 2 + j;
    }

private:
    int dim_;
    std::vector<Scalar> data_;
};

/// Diagonal snapshot plus the separation diagnostics that gate every
/// recursion. For dim 1 there is no pair to separate: min_separation and
/// relative_separation are +inf and (first, second) stay at -1.
template <typename Scalar>
struct SpectrumInfo {
    std::vector<Scalar> diagonal;
    double min_separation = std::numeric_limits<double>::infinity();
    double scale = 0.0;  // max |b_kk|
    double relative_separation = std::numeric_limits<double>::infinity();
    int first = -1;
    int second = -1;
    /// The gate this spectrum was admitted under; divisions re-check it.
    double sep_tol = 0.0;
};

/// Scans all diagonal pairs and admits the matrix only when the tightest
/// gap, relative to max(scale, 1), exceeds sep_tol. Below that the theta
/// recursion's divisions shed roughly half the mantissa or worse.
template <typename Scalar>
SpectrumInfo<Scalar> validate_simple_spectrum(const LowerTriangular<Scalar>& b, double sep_tol) {
    SpectrumInfo<Scalar> info;
    info.sep_tol = sep_tol;
    const int d = b.dim();
    info.diagonal.reserve(d);
    for (int i = 0; i < d; ++i) {
        info.diagonal.push_back(b.diagonal(i));
        info.scale = std::max(info.scale, std::abs(b.diagonal(i)));
    }
    for (int i = 0; i < d; ++i) {
        for (int j = i + 1; j < d; ++j) {
            const double gap = std::abs(b.diagonal(i) - b.diagonal(j));
            if (gap < info.min_separation) {
                info.min_separation = gap;
                info.first = i;
                info.second = j;
            }
        }
    }
    info.relative_separation = info.min_separation / std::max(info.scale, 1.0);
    if (!(info.relative_separation > sep_tol))
        throw DegenerateSpectrum(info.first, info.second, info.min_separation);
    return info;
}

template <typename Scalar>
struct FromDenseResult {
    LowerTriangular<Scalar> matrix;
    /// True when the input was upper triangular and has been transposed into
    /// lower packed form; results computed from it transpose back, since
    /// f of the transpose is the transpose of f.
    bool transposed;
};

enum class Triangle { Lower, Upper };

/// Packs a dense triangular matrix, transposing upper inputs. Any entry of
/// modulus above zero_tol on the wrong side of the diagonal is rejected,
/// reporting the worst offender.
template <typename Scalar>
FromDenseResult<Scalar> from_dense(const DenseMatrix<Scalar>& a, double zero_tol,
                                   Triangle triangle) {
    if (a.rows() != a.cols())
        throw DimensionMismatch("matrix is " + std::to_string(a.rows()) + " x " +
                                std::to_string(a.cols()) + ", expected square");
    const int d = static_cast<int>(a.rows());
    const bool upper = triangle == Triangle::Upper;

    int worst_i = -1, worst_j = -1;
    double worst = zero_tol;
    for (int i = 0; i < d; ++i) {
        for (int j = i + 1; j < d; ++j) {
            const double mag = upper ? std::abs(a(j, i)) : std::abs(a(i, j));
            if (mag > worst) {
                worst = mag;
                worst_i = upper ? j : i;
                worst_j = upper ? i : j;
            }
        }
    }
    if (worst_i >= 0) throw NotTriangular(worst_i, worst_j, worst);

    LowerTriangular<Scalar> packed(d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j <= i; ++j) packed(i, j) = upper ? a(j, i) : a(i, j);
    return {std::move(packed), upper};
}

template <typename Scalar>
DenseMatrix<Scalar> dense_from(const LowerTriangular<Scalar>& b) {
    const int d = b.dim();
    DenseMatrix<Scalar> a = DenseMatrix<Scalar>::Zero(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j <= i; ++j) a(i, j) = b(i, j);
    return a;
}

template <typename Scalar>
DenseMatrix<Scalar> dense_multiply(const DenseMatrix<Scalar>& a, const DenseMatrix<Scalar>& b) {
    if (a.cols() != b.rows())
        throw DimensionMismatch("cannot multiply " + std::to_string(a.rows()) + " x " +
                                std::to_string(a.cols()) + " by " + std::to_string(b.rows()) +
                                " x " + std::to_string(b.cols()));
    return a * b;
}

template <typename Scalar>
std::vector<Scalar> row_sums(const LowerTriangular<Scalar>& b) {
    std::vector<Scalar> sums(b.dim(), Scalar(0));
    for (int i = 0; i < b.dim(); ++i)
        for (int j = 0; j <= i; ++j) sums[i] += b(i, j);
    return sums;
}

template <typename Scalar>
double max_abs(const LowerTriangular<Scalar>& b) {
    double m = 0.0;
    for (const Scalar& v : b.packed()) m = std::max(m, std::abs(v));
    return m;
}

template <typename Scalar>
double max_abs(const DenseMatrix<Scalar>& a) {
    double m = 0.0;
    for (Eigen::Index j = 0; j < a.cols(); ++j)
        for (Eigen::Index i = 0; i < a.rows(); ++i) m = std::max(m, std::abs(a(i, j)));
    return m;
}

}  // namespace trifun
