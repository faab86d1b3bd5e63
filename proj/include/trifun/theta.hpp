#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "trifun/triangular.hpp"

namespace trifun {

/// Ragged table of coefficients theta_n(k, m) for 0 <= m <= k <= n < d,
/// d*(d+1)*(d+2)/6 scalars in a flat array with lexicographic (n, k, m)
/// layout. The table depends only on the matrix, not on the scalar
/// function later applied through it.
template <typename Scalar>
class ThetaTable {
public:
    explicit ThetaTable(int dim) : dim_(dim), data_(flat_size(dim), Scalar(0)) {}

    int dim() const { return dim_; }

    Scalar& operator()(int n, int k, int m) { return data_[flat_index(n, k, m)]; }
    Scalar operator()(int n, int k, int m) const { return data_[flat_index(n, k, m)]; }

    const std::vector<Scalar>& flat() const { return data_; }

    static std::size_t flat_size(int dim) {
        return static_cast<std::size_t>(dim) * (dim + 1) * (dim + 2) / 6;
    }

    static std::size_t flat_index(int n, int k, int m) {
        return static_cast<std::size_t>(n) * (n + 1) * (n + 2) / 6 +
               static_cast<std::size_t>(k) * (k + 1) / 2 + m;
    }

private:
    int dim_;
    std::vector<Scalar> data_;
};

namespace detail {

/// Every division in the recursions re-validates its own denominator, so a
/// spectrum that drifted after info was computed fails loudly instead of
/// amplifying silently.
template <typename Scalar>
void check_denominator(Scalar den, int first, int second, double sep_tol, double scale) {
    if (den == Scalar(0) || std::abs(den) < sep_tol * std::max(scale, 1.0))
        throw DegenerateSpectrum(first, second, std::abs(den));
}

}  // namespace detail

/// Fills the table row by row in n. Within row n the k < n entries come
/// first:
///
///   theta_n(k, m) = (b_kk - b_nn)^-1 sum_{k <= l < n} b_nl theta_l(k, m)
///
/// and the k = n entries then close each column so the column sums over k
/// equal delta_nm. The two branches are deliberately separate code paths;
/// fusing them would route k = n through the guarded division.
template <typename Scalar>
ThetaTable<Scalar> compute_theta(const LowerTriangular<Scalar>& b,
                                 const SpectrumInfo<Scalar>& info) {
    const int d = b.dim();
    ThetaTable<Scalar> theta(d);
    for (int n = 0; n < d; ++n) {
        theta(n, n, n) = Scalar(1);
        for (int k = 0; k < n; ++k) {
            const Scalar den = b.diagonal(k) - b.diagonal(n);
            detail::check_denominator(den, k, n, info.sep_tol, info.scale);
            for (int m = 0; m <= k; ++m) {
                Scalar acc(0);
                for (int l = k; l < n; ++l) acc += b(n, l) * theta(l, k, m);
                theta(n, k, m) = acc / den;
            }
        }
        for (int m = 0; m < n; ++m) {
            Scalar acc(0);
            for (int l = m; l < n; ++l) acc -= theta(n, l, m);
            theta(n, n, m) = acc;
        }
    }
    return theta;
}

/// Unit-diagonal right eigenvector matrix and its inverse, both unit lower
/// triangular. Column k of u spans the eigenspace of b_kk; row k of u_inv
/// is the matching left eigenvector.
template <typename Scalar>
struct EigenPair {
    LowerTriangular<Scalar> u;
    LowerTriangular<Scalar> u_inv;
};

/// Builds the eigenvector pair by forward substitution: column k solves
/// (B - b_kk) u = 0 with u_kk = 1, then the inverse comes from a dense
/// triangular solve. The optional column_scales rescale each eigenvector
/// before inversion; they exist so tests can confirm the normalization
/// freedom is invisible downstream, and must be nonzero.
template <typename Scalar>
EigenPair<Scalar> eigenvector_pair(const LowerTriangular<Scalar>& b,
                                   const SpectrumInfo<Scalar>& info,
                                   const std::vector<double>& column_scales = {}) {
    const int d = b.dim();
    if (!column_scales.empty() && static_cast<int>(column_scales.size()) != d)
        throw DimensionMismatch("expected " + std::to_string(d) + " column scales, got " +
                                std::to_string(column_scales.size()));

    DenseMatrix<Scalar> u = DenseMatrix<Scalar>::Zero(d, d);
    for (int k = 0; k < d; ++k) {
        u(k, k) = Scalar(1);
        for (int n = k + 1; n < d; ++n) {
            const Scalar den = b.diagonal(k) - b.diagonal(n);
            detail::check_denominator(den, k, n, info.sep_tol, info.scale);
            Scalar acc(0);
            for (int l = k; l < n; ++l) acc += b(n, l) * u(l, k);
            u(n, k) = acc / den;
        }
    }
    if (!column_scales.empty())
        for (int k = 0; k < d; ++k) u.col(k) *= Scalar(column_scales[k]);

    const DenseMatrix<Scalar> u_inv =
        u.template triangularView<Eigen::Lower>().solve(DenseMatrix<Scalar>::Identity(d, d));

    return {from_dense(u, 0.0, Triangle::Lower).matrix, from_dense(u_inv, 0.0, Triangle::Lower).matrix};
}

/// Independent construction of the same table from the eigenvector pair:
/// theta_n(k, m) = u_nk * uinv_km. The products are invariant under any
/// nonzero rescaling of the eigenvector columns.
template <typename Scalar>
ThetaTable<Scalar> theta_from_eigenvectors(const LowerTriangular<Scalar>& b,
                                           const SpectrumInfo<Scalar>& info,
                                           const std::vector<double>& column_scales = {}) {
    const EigenPair<Scalar> pair = eigenvector_pair(b, info, column_scales);
    const int d = b.dim();
    ThetaTable<Scalar> theta(d);
    for (int n = 0; n < d; ++n)
        for (int k = 0; k <= n; ++k)
            for (int m = 0; m <= k; ++m) theta(n, k, m) = pair.u(n, k) * pair.u_inv(k, m);
    return theta;
}

/// Worst absolute residual of each structural identity the table must
/// satisfy, one field per identity, judged against one absolute tolerance.
struct IdentityReport {
    /// | sum_k b_kk theta_n(k, m) - b_nm |
    double spectral_decomposition = 0.0;
    /// | sum_k theta_n(k, m) - delta_nm |
    double resolution_of_identity = 0.0;
    /// | sum_i theta_n(k, i) theta_i(l, m) - delta_kl theta_n(k, m) |
    double projector_orthogonality = 0.0;
    /// | sum_l b_nl theta_l(k, m) - b_kk theta_n(k, m) |
    double eigen_relation = 0.0;
    double tol = 0.0;

    double max() const {
        return std::max(std::max(spectral_decomposition, resolution_of_identity),
                        std::max(projector_orthogonality, eigen_relation));
    }
    bool within_tol() const { return max() <= tol; }
};

/// Measures all four identities to absolute tolerance tol. Never throws on
/// a bad table; the report carries the verdict. tol is absolute, so scale
/// it up for large-norm inputs.
template <typename Scalar>
IdentityReport check_identities(const LowerTriangular<Scalar>& b, const ThetaTable<Scalar>& theta,
                                double tol) {
    if (b.dim() != theta.dim())
        throw DimensionMismatch("matrix has dimension " + std::to_string(b.dim()) +
                                ", table has dimension " + std::to_string(theta.dim()));
    const int d = b.dim();
    IdentityReport r;
    r.tol = tol;
    for (int n = 0; n < d; ++n) {
        for (int m = 0; m <= n; ++m) {
            Scalar recon(0);
            Scalar colsum(0);
            for (int k = m; k <= n; ++k) {
                recon += b.diagonal(k) * theta(n, k, m);
                colsum += theta(n, k, m);
            }
            r.spectral_decomposition =
                std::max(r.spectral_decomposition, std::abs(recon - b(n, m)));
            const Scalar delta_nm = n == m ? Scalar(1) : Scalar(0);
            r.resolution_of_identity =
                std::max(r.resolution_of_identity, std::abs(colsum - delta_nm));

            for (int k = m; k <= n; ++k) {
                Scalar acc(0);
                for (int l = k; l <= n; ++l) acc += b(n, l) * theta(l, k, m);
                r.eigen_relation =
                    std::max(r.eigen_relation, std::abs(acc - b.diagonal(k) * theta(n, k, m)));
            }

            for (int k = m; k <= n; ++k) {
                for (int l = m; l <= k; ++l) {
                    Scalar acc(0);
                    // theta_i(l, m) vanishes for i < l, so the sum over
                    // m <= i <= k starts at l.
                    for (int i = l; i <= k; ++i) acc += theta(n, k, i) * theta(i, l, m);
                    const Scalar want = k == l ? theta(n, k, m) : Scalar(0);
                    r.projector_orthogonality =
                        std::max(r.projector_orthogonality, std::abs(acc - want));
                }
            }
        }
    }
    return r;
}

/// Largest coefficient modulus. Large values flag near-defective inputs
/// whose function values will lose roughly that factor in precision; for
/// the 2 x 2 gap-epsilon family this is exactly 2 / epsilon.
template <typename Scalar>
double conditioning_indicator(const ThetaTable<Scalar>& theta) {
    double m = 0.0;
    for (const Scalar& v : theta.flat()) m = std::max(m, std::abs(v));
    return m;
}

template <typename Scalar>
double max_abs_diff(const ThetaTable<Scalar>& a, const ThetaTable<Scalar>& b) {
    if (a.dim() != b.dim())
        throw DimensionMismatch("tables have dimensions " + std::to_string(a.dim()) + " and " +
                                std::to_string(b.dim()));
    double m = 0.0;
    for (std::size_t i = 0; i < a.flat().size(); ++i)
        m = std::max(m, std::abs(a.flat()[i] - b.flat()[i]));
    return m;
}

template <typename Scalar>
double max_abs_diff(const LowerTriangular<Scalar>& a, const LowerTriangular<Scalar>& b) {
    if (a.dim() != b.dim())
        throw DimensionMismatch("matrices have dimensions " + std::to_string(a.dim()) + " and " +
                                std::to_string(b.dim()));
    double m = 0.0;
    for (std::size_t i = 0; i < a.packed().size(); ++i)
        m = std::max(m, std::abs(a.packed()[i] - b.packed()[i]));
    return m;
}

}  // namespace trifun
