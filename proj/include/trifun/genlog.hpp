#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "trifun/oracles.hpp"
#include "trifun/theta.hpp"
#include "trifun/triangular.hpp"

namespace trifun {

/// One observation of a semigroup: the matrix P and the time it was taken
/// at. Extraction never sees the generator that produced it. Everything
/// here is real on purpose: the uniqueness of the recovered generator
/// lives in the real positive-diagonal setting, and complex snapshots
/// belong to the general function machinery instead.
struct SemigroupSample {
    LowerTriangular<double> p;
    double t = 1.0;
};

/// Stochastic-matrix test for a snapshot: entries nonnegative up to tol,
/// unit row sums up to tol, diagonal inside (0, 1]. The diagonal bound is
/// what a positive-time exponential of a rate matrix guarantees.
struct MarkovReport {
    double min_entry = 0.0;
    double max_row_sum_error = 0.0;
    double min_diagonal = 0.0;
    double max_diagonal = 0.0;
    double tol = 0.0;
    bool markov = false;
};

inline MarkovReport check_markov(const LowerTriangular<double>& p, double tol = 1e-12) {
    const int d = p.dim();
    MarkovReport report;
    report.tol = tol;
    report.min_entry = std::numeric_limits<double>::infinity();
    report.min_diagonal = std::numeric_limits<double>::infinity();
    report.max_diagonal = -std::numeric_limits<double>::infinity();
    for (int n = 0; n < d; ++n) {
        double sum = 0.0;
        for (int m = 0; m <= n; ++m) {
            report.min_entry = std::min(report.min_entry, p(n, m));
            sum += p(n, m);
        }
        report.max_row_sum_error = std::max(report.max_row_sum_error, std::abs(sum - 1.0));
        report.min_diagonal = std::min(report.min_diagonal, p.diagonal(n));
        report.max_diagonal = std::max(report.max_diagonal, p.diagonal(n));
    }
    report.markov = report.min_entry >= -tol && report.max_row_sum_error <= tol &&
                    report.min_diagonal > 0.0 && report.max_diagonal <= 1.0;
    return report;
}

/// Coefficient table of the snapshot itself. Because the same eigenvector
/// pair diagonalises the generator and every exp(t B) alike, this table
/// does not depend on t and coincides with the generator's table; that
/// invariance is what makes one-snapshot extraction possible.
inline ThetaTable<double> eta_coefficients(const SemigroupSample& s, double sep_tol) {
    return compute_theta(s.p, validate_simple_spectrum(s.p, sep_tol));
}

struct GeneratorDiagnostics {
    std::vector<double> row_sums_of_b;
    bool markov_input = false;
    bool rate_matrix = false;  // off-diagonals nonnegative, diagonal nonpositive
    double conditioning = 0.0;
};

struct GeneratorResult {
    LowerTriangular<double> generator;
    ThetaTable<double> eta;
    SpectrumInfo<double> snapshot_spectrum;
    GeneratorDiagnostics diagnostics;
};

/// Recovers the unique real generator from one snapshot:
///
///   b_nn = log(p_nn) / t
///   b_nm = sum_{m <= k < n} eta_n(k, m) (b_kk - b_nn)
///
/// No matrix logarithm is ever formed; the off-diagonal assembly reuses
/// the snapshot's own coefficient table. Requires t > 0, a strictly
/// positive diagonal and a simple snapshot spectrum. Whether the result
/// is a Markov rate matrix is reported, never enforced: the uniqueness
/// theorem promises a real generator, not an embeddable one.
inline GeneratorResult extract_generator(const SemigroupSample& s, double sep_tol,
                                         double markov_tol = 1e-12) {
    if (!(s.t > 0.0))
        throw DomainViolation("generator",
                              "snapshot time must be positive, got " + std::to_string(s.t));
    const int d = s.p.dim();
    std::vector<double> diag(d);
    for (int n = 0; n < d; ++n) {
        const double p_nn = s.p.diagonal(n);
        if (!(p_nn > 0.0)) throw NonPositiveDiagonal(n, p_nn);
        diag[n] = std::log(p_nn) / s.t;
    }

    const SpectrumInfo<double> info = validate_simple_spectrum(s.p, sep_tol);
    ThetaTable<double> eta = compute_theta(s.p, info);

    LowerTriangular<double> b(d);
    for (int n = 0; n < d; ++n) {
        b(n, n) = diag[n];
        for (int m = 0; m < n; ++m) {
            double acc = 0.0;
            for (int k = m; k < n; ++k) acc += eta(n, k, m) * (diag[k] - diag[n]);
            b(n, m) = acc;
        }
    }

    GeneratorResult result{std::move(b), std::move(eta), info, {}};
    result.diagnostics.row_sums_of_b = row_sums(result.generator);
    result.diagnostics.markov_input = check_markov(s.p, markov_tol).markov;
    result.diagnostics.conditioning = conditioning_indicator(result.eta);
    result.diagnostics.rate_matrix = true;
    for (int n = 0; n < d && result.diagnostics.rate_matrix; ++n) {
        if (result.generator.diagonal(n) > 0.0) result.diagnostics.rate_matrix = false;
        for (int m = 0; m < n; ++m)
            if (result.generator(n, m) < 0.0) result.diagnostics.rate_matrix = false;
    }
    return result;
}

struct VerifyReport {
    double residual = 0.0;
    double tol = 0.0;
    bool ok = false;
};

/// Scale-aware default: d times the snapshot magnitude at 1e-8.
inline double default_verify_tol(const SemigroupSample& s) {
    return 1e-8 * s.p.dim() * max_abs(s.p);
}

/// Round trip through the series oracle: exponentiate the extracted
/// generator back to the snapshot time and compare. The oracle shares no
/// code with the extraction path.
inline VerifyReport verify_generator(const GeneratorResult& r, const SemigroupSample& s,
                                     double tol, const SeriesControl& ctrl = {}) {
    const DenseMatrix<double> tb = dense_from(r.generator) * s.t;
    const DenseMatrix<double> back = exp_series(tb, ctrl);
    const DenseMatrix<double> diff = back - dense_from(s.p);
    VerifyReport report;
    report.residual = max_abs(diff);
    report.tol = tol;
    report.ok = report.residual <= tol;
    return report;
}

}  // namespace trifun
