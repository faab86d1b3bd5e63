#pragma once

#include <cmath>
#include <complex>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "trifun/errors.hpp"
#include "trifun/triangular.hpp"

// Reference implementations used to cross-check the packed recursions.
// Everything here works on dense matrices and deliberately shares no code
// with the triangular routes: a bug would have to be reproduced twice,
// through different algorithms, to go unnoticed.

namespace trifun {

struct SeriesControl {
    double tol = 1e-15;   // absolute stop on the max norm of a term
    int max_terms = 500;
    int scaling_squarings = 0;  // floor; exp_series raises it as needed
};

namespace detail {

template <typename Scalar>
void require_square(const DenseMatrix<Scalar>& a) {
    if (a.rows() != a.cols())
        throw DimensionMismatch("expected a square matrix, got " + std::to_string(a.rows()) +
                                " x " + std::to_string(a.cols()));
}

template <typename Scalar>
bool exactly_lower(const DenseMatrix<Scalar>& a) {
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = i + 1; j < a.cols(); ++j)
            if (a(i, j) != Scalar(0)) return false;
    return true;
}

template <typename Scalar>
bool exactly_upper(const DenseMatrix<Scalar>& a) {
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < i; ++j)
            if (a(i, j) != Scalar(0)) return false;
    return true;
}

inline double real_part(double z) { return z; }
inline double real_part(std::complex<double> z) { return z.real(); }

/// log(1 + z) has its branch cut where z lies in (-inf, -1].
inline bool on_shifted_cut(double z) { return z <= -1.0; }
inline bool on_shifted_cut(std::complex<double> z) {
    return z.imag() == 0.0 && z.real() <= -1.0;
}

}  // namespace detail

/// Upper bound on the spectral radius: exact for triangular input (the
/// eigenvalues sit on the diagonal), max row sum norm otherwise.
template <typename Scalar>
double spectral_radius_bound(const DenseMatrix<Scalar>& a) {
    detail::require_square(a);
    if (detail::exactly_lower(a) || detail::exactly_upper(a)) {
        double m = 0.0;
        for (Eigen::Index i = 0; i < a.rows(); ++i) m = std::max(m, std::abs(a(i, i)));
        return m;
    }
    double m = 0.0;
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        double s = 0.0;
        for (Eigen::Index j = 0; j < a.cols(); ++j) s += std::abs(a(i, j));
        m = std::max(m, s);
    }
    return m;
}

/// Taylor series with scaling and squaring: halve until the max norm is
/// at most 0.5, sum exp(A / 2^s) from the constant term up, square back.
template <typename Scalar>
DenseMatrix<Scalar> exp_series(const DenseMatrix<Scalar>& a, const SeriesControl& ctrl = {}) {
    detail::require_square(a);
    const Eigen::Index d = a.rows();

    int s = ctrl.scaling_squarings;
    const double norm = max_abs(a);
    while (s < 64 && std::ldexp(norm, -s) > 0.5) ++s;
    DenseMatrix<Scalar> m = a / Scalar(std::ldexp(1.0, s));

    DenseMatrix<Scalar> acc = DenseMatrix<Scalar>::Identity(d, d);
    DenseMatrix<Scalar> term = DenseMatrix<Scalar>::Identity(d, d);
    bool converged = false;
    for (int k = 1; k <= ctrl.max_terms; ++k) {
        term = (term * m / Scalar(k)).eval();
        acc += term;
        if (max_abs(term) < ctrl.tol) {
            converged = true;
            break;
        }
    }
    if (!converged) throw NotConverged(ctrl.max_terms);

    for (int i = 0; i < s; ++i) acc = (acc * acc).eval();
    return acc;
}

/// Mercator series log(1 + A) = A - A^2/2 + A^3/3 - ..., valid only while
/// the spectral radius of A = P - 1 stays below 1; refuses otherwise
/// rather than summing a divergent series.
template <typename Scalar>
DenseMatrix<Scalar> log_series(const DenseMatrix<Scalar>& p, const SeriesControl& ctrl = {}) {
    detail::require_square(p);
    const Eigen::Index d = p.rows();
    DenseMatrix<Scalar> a = p - DenseMatrix<Scalar>::Identity(d, d);

    const double bound = spectral_radius_bound(a);
    if (!(bound < 1.0)) throw SpectralRadiusTooLarge(bound);

    DenseMatrix<Scalar> acc = DenseMatrix<Scalar>::Zero(d, d);
    DenseMatrix<Scalar> power = DenseMatrix<Scalar>::Identity(d, d);
    for (int k = 1; k <= ctrl.max_terms; ++k) {
        power = (power * a).eval();
        DenseMatrix<Scalar> term = power / Scalar(k % 2 == 0 ? -double(k) : double(k));
        acc += term;
        if (max_abs(term) < ctrl.tol) return acc;
    }
    throw NotConverged(ctrl.max_terms);
}

struct Quadrature {
    std::vector<double> nodes;    // inside (0, 1), ascending
    std::vector<double> weights;  // positive, summing to 1
};

namespace detail {

/// P_n(x) and P_n'(x) by the three-term recurrence.
inline std::pair<double, double> legendre_pair(int n, double x) {
    double p0 = 1.0;
    double p1 = x;
    for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    const double dp = n * (x * p1 - p0) / (x * x - 1.0);
    return {p1, dp};
}

}  // namespace detail

/// Gauss-Legendre rule on [0, 1]: Newton from Chebyshev starting guesses,
/// one mirrored pair of nodes per root of P_n.
inline Quadrature gauss_legendre_unit(int n) {
    constexpr double pi = 3.141592653589793238462643383279502884;
    Quadrature q;
    q.nodes.resize(n);
    q.weights.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(pi * (i + 0.75) / (n + 0.5));
        for (int iter = 0; iter < 100; ++iter) {
            const auto [p, dp] = detail::legendre_pair(n, x);
            const double dx = p / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        const double dp = detail::legendre_pair(n, x).second;
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        q.nodes[n - 1 - i] = 0.5 * (1.0 + x);
        q.weights[n - 1 - i] = 0.5 * w;
        q.nodes[i] = 0.5 * (1.0 - x);
        q.weights[i] = 0.5 * w;
    }
    return q;
}

/// Integral representation of the principal logarithm,
///
///   log(P) = integral_0^1 A (1 + tau A)^{-1} dtau,   A = P - 1,
///
/// evaluated by Gauss-Legendre quadrature. For triangular input the
/// diagonal exposes the spectrum, so resolvent singularities at the nodes
/// and eigenvalues on the cut are rejected up front (in that order: a
/// node hit is the sharper diagnosis and would otherwise be masked).
/// Dense callers must ensure the domain themselves.
template <typename Scalar>
DenseMatrix<Scalar> log_integral(const DenseMatrix<Scalar>& p, int nodes = 32) {
    detail::require_square(p);
    const Eigen::Index d = p.rows();
    DenseMatrix<Scalar> a = p - DenseMatrix<Scalar>::Identity(d, d);
    const Quadrature q = gauss_legendre_unit(nodes);

    const bool lower = detail::exactly_lower(a);
    const bool upper = !lower && detail::exactly_upper(a);
    if (lower || upper) {
        for (int j = 0; j < nodes; ++j)
            for (Eigen::Index i = 0; i < d; ++i)
                if (std::abs(Scalar(1) + Scalar(q.nodes[j]) * a(i, i)) <= 1e-14)
                    throw SingularResolvent(q.nodes[j], static_cast<int>(i));
        for (Eigen::Index i = 0; i < d; ++i)
            if (detail::on_shifted_cut(a(i, i)))
                throw EigenvalueOnCut(static_cast<int>(i), detail::real_part(a(i, i)));
    }

    DenseMatrix<Scalar> acc = DenseMatrix<Scalar>::Zero(d, d);
    for (int j = 0; j < nodes; ++j) {
        const Scalar tau(q.nodes[j]);
        DenseMatrix<Scalar> m = DenseMatrix<Scalar>::Identity(d, d) + tau * a;
        // A commutes with its resolvent, so solving M X = A gives the integrand.
        DenseMatrix<Scalar> solved;
        if (lower)
            solved = m.template triangularView<Eigen::Lower>().solve(a);
        else if (upper)
            solved = m.template triangularView<Eigen::Upper>().solve(a);
        else
            solved = m.partialPivLu().solve(a);
        acc += Scalar(q.weights[j]) * solved;
    }
    return acc;
}

}  // namespace trifun
