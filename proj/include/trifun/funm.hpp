#pragma once

#include <cmath>
#include <complex>
#include <string>
#include <variant>
#include <vector>

#include "trifun/theta.hpp"
#include "trifun/triangular.hpp"

namespace trifun {

/// Scalar maps that extend to matrix arguments through the coefficient
/// table. Exp carries the semigroup time, so exp(t B) is Exp{t} applied
/// to B. Polynomial coefficients are ascending in degree.
struct Exp {
    double t = 1.0;
};
struct PrincipalLog {};
struct Power {
    double alpha = 1.0;
};
struct Inverse {};
struct Polynomial {
    std::vector<double> coefficients;
};

using ScalarFunction = std::variant<Exp, PrincipalLog, Power, Inverse, Polynomial>;

inline const char* function_label(const ScalarFunction& f) {
    switch (f.index()) {
        case 0: return "exp";
        case 1: return "log";
        case 2: return "pow";
        case 3: return "inv";
        default: return "poly";
    }
}

namespace detail {

inline bool is_nonnegative_integer(double a) {
    return a >= 0.0 && a == std::floor(a) && a <= 1e15;
}

template <typename Scalar>
Scalar integer_power(Scalar z, unsigned long long e) {
    Scalar r(1);
    for (Scalar base = z; e != 0; e >>= 1) {
        if (e & 1) r *= base;
        base *= base;
    }
    return r;
}

/// The principal branch lives off the cut (-inf, 0]. On the real field
/// that means strictly positive arguments.
inline bool off_log_cut(double z) { return z > 0.0; }
inline bool off_log_cut(std::complex<double> z) { return z.imag() != 0.0 || z.real() > 0.0; }

}  // namespace detail

/// Evaluates f at one eigenvalue. The index only feeds error reporting.
template <typename Scalar>
Scalar evaluate(const ScalarFunction& f, Scalar z, int index) {
    return std::visit(
        [&](const auto& fn) -> Scalar {
            using F = std::decay_t<decltype(fn)>;
            if constexpr (std::is_same_v<F, Exp>) {
                return std::exp(Scalar(fn.t) * z);
            } else if constexpr (std::is_same_v<F, PrincipalLog>) {
                if (!detail::off_log_cut(z)) throw DomainViolation("log", index, z);
                return std::log(z);
            } else if constexpr (std::is_same_v<F, Power>) {
                if (detail::is_nonnegative_integer(fn.alpha))
                    return detail::integer_power(z, static_cast<unsigned long long>(fn.alpha));
                if (!detail::off_log_cut(z)) throw DomainViolation("pow", index, z);
                return std::pow(z, Scalar(fn.alpha));
            } else if constexpr (std::is_same_v<F, Inverse>) {
                if (z == Scalar(0)) throw DomainViolation("inv", index, z);
                return Scalar(1) / z;
            } else {
                Scalar acc(0);
                for (auto it = fn.coefficients.rbegin(); it != fn.coefficients.rend(); ++it)
                    acc = acc * z + Scalar(*it);
                return acc;
            }
        },
        f);
}

/// f(B) through the precomputed table:
///
///   f(B)_nm = delta_nm f(b_nn) + sum_{m <= k < n} theta_n(k, m) (f(b_kk) - f(b_nn))
///
/// The k = n term drops out of the sum, so the diagonal is exactly the
/// scalar image of the diagonal, and constant f reproduces f(0) times the
/// identity without rounding; in particular exp(0 B) is exactly 1.
template <typename Scalar>
LowerTriangular<Scalar> apply(const LowerTriangular<Scalar>& b, const ThetaTable<Scalar>& theta,
                              const ScalarFunction& f) {
    if (b.dim() != theta.dim())
        throw DimensionMismatch("matrix has dimension " + std::to_string(b.dim()) +
                                ", table has dimension " + std::to_string(theta.dim()));
    const int d = b.dim();
    std::vector<Scalar> fd(d);
    for (int i = 0; i < d; ++i) fd[i] = evaluate(f, b.diagonal(i), i);

    LowerTriangular<Scalar> result(d);
    for (int n = 0; n < d; ++n) {
        result(n, n) = fd[n];
        for (int m = 0; m < n; ++m) {
            Scalar acc(0);
            for (int k = m; k < n; ++k) acc += theta(n, k, m) * (fd[k] - fd[n]);
            result(n, m) = acc;
        }
    }
    return result;
}

/// exp(t B) for each requested time, all through the one shared table.
/// This is the point of the function-independent coefficients: the table
/// costs O(d^4) once, each additional time only O(d^2) exponentials and
/// O(d^3) accumulation.
template <typename Scalar>
std::vector<LowerTriangular<Scalar>> exp_semigroup(const LowerTriangular<Scalar>& b,
                                                   const ThetaTable<Scalar>& theta,
                                                   const std::vector<double>& times) {
    std::vector<LowerTriangular<Scalar>> snapshots;
    snapshots.reserve(times.size());
    for (double t : times) snapshots.push_back(apply(b, theta, Exp{t}));
    return snapshots;
}

/// Reference route, independent of any table: the commutation equation
/// B f(B) = f(B) B solved entry by entry,
///
///   p_nm (b_nn - b_mm) = b_nm (p_nn - p_mm) + sum_{m < k < n} (p_nk b_km - b_nk p_km)
///
/// Every p on the right sits on a shorter subdiagonal, so sweeping by
/// offset n - m fills the triangle.
template <typename Scalar>
LowerTriangular<Scalar> parlett_apply(const LowerTriangular<Scalar>& b, const ScalarFunction& f,
                                      double sep_tol) {
    const int d = b.dim();
    double scale = 0.0;
    for (int i = 0; i < d; ++i) scale = std::max(scale, std::abs(b.diagonal(i)));

    LowerTriangular<Scalar> p(d);
    for (int i = 0; i < d; ++i) p(i, i) = evaluate(f, b.diagonal(i), i);

    for (int offset = 1; offset < d; ++offset) {
        for (int n = offset; n < d; ++n) {
            const int m = n - offset;
            const Scalar den = b.diagonal(n) - b.diagonal(m);
            detail::check_denominator(den, m, n, sep_tol, scale);
            Scalar acc = b(n, m) * (p(n, n) - p(m, m));
            for (int k = m + 1; k < n; ++k) acc += p(n, k) * b(k, m) - b(n, k) * p(k, m);
            p(n, m) = acc / den;
        }
    }
    return p;
}

/// Runs the same sweep on coefficient vectors instead of values: seeding
/// the diagonal with unit coordinate vectors makes entry k of the vector
/// at (n, m) the weight of f(b_kk) in p_nm, which is theta_n(k, m). That
/// both recursions produce one table is a theorem, and the equality is
/// checked, not assumed.
template <typename Scalar>
ThetaTable<Scalar> parlett_coefficients(const LowerTriangular<Scalar>& b,
                                        const SpectrumInfo<Scalar>& info) {
    const int d = b.dim();
    using Coeffs = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    std::vector<Coeffs> c(static_cast<std::size_t>(d) * d, Coeffs::Zero(d));
    auto at = [&](int n, int m) -> Coeffs& { return c[static_cast<std::size_t>(n) * d + m]; };

    for (int i = 0; i < d; ++i) at(i, i)(i) = Scalar(1);
    for (int offset = 1; offset < d; ++offset) {
        for (int n = offset; n < d; ++n) {
            const int m = n - offset;
            const Scalar den = b.diagonal(n) - b.diagonal(m);
            detail::check_denominator(den, m, n, info.sep_tol, info.scale);
            Coeffs acc = b(n, m) * (at(n, n) - at(m, m));
            for (int k = m + 1; k < n; ++k) acc += b(k, m) * at(n, k) - b(n, k) * at(k, m);
            at(n, m) = acc / den;
        }
    }

    ThetaTable<Scalar> theta(d);
    for (int n = 0; n < d; ++n)
        for (int k = 0; k <= n; ++k)
            for (int m = 0; m <= k; ++m) theta(n, k, m) = at(n, m)(k);
    return theta;
}

}  // namespace trifun
