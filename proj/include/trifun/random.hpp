#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "trifun/triangular.hpp"

namespace trifun {

/// splitmix64 finalizer. Folding run parameters through this gives every
/// generated instance its own stream, independent of evaluation order.
inline std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

/// Deterministic random source. The bit-to-double mapping and the shuffle
/// are spelled out here rather than taken from <random>'s distributions,
/// whose outputs the standard leaves implementation defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    std::uint64_t below(std::uint64_t n) {
        return static_cast<std::uint64_t>((static_cast<unsigned __int128>(gen_()) * n) >> 64);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
    }

private:
    std::mt19937_64 gen_;
};

/// Random lower triangular matrix whose diagonal entries are pairwise at
/// least min_gap apart: consecutive gaps of min_gap * (1 + u) accumulate,
/// the run is centered at zero and then shuffled onto the diagonal.
inline LowerTriangular<double> random_separated_lower(Rng& rng, int dim, double min_gap,
                                                      double off_scale) {
    std::vector<double> diag(dim);
    double v = 0.0;
    for (int i = 0; i < dim; ++i) {
        if (i > 0) v += min_gap * (1.0 + rng.uniform01());
        diag[i] = v;
    }
    for (double& x : diag) x -= v / 2.0;
    rng.shuffle(diag);

    LowerTriangular<double> b(dim);
    for (int i = 0; i < dim; ++i) {
        b(i, i) = diag[i];
        for (int j = 0; j < i; ++j) b(i, j) = rng.uniform(-off_scale, off_scale);
    }
    return b;
}

/// Random triangular Markov generator: nonnegative off-diagonal entries
/// and exactly cancelling row sums. The diagonal stores the negated
/// left-to-right partial sum of its row; summing the row in the same order
/// later reproduces that partial sum bit for bit, so the row sum is an
/// exact zero, not a small residual. Diagonal separation comes from
/// rejection, so keep dim small against min_gap.
inline LowerTriangular<double> random_markov_generator(Rng& rng, int dim, double min_gap,
                                                       double off_lo, double off_hi) {
    for (int attempt = 0; attempt < 10000; ++attempt) {
        LowerTriangular<double> b(dim);
        for (int i = 0; i < dim; ++i) {
            double partial = 0.0;
            for (int j = 0; j < i; ++j) {
                b(i, j) = rng.uniform(off_lo, off_hi);
                partial += b(i, j);
            }
            b(i, i) = -partial;
        }
        bool separated = true;
        for (int i = 0; i < dim && separated; ++i)
            for (int j = i + 1; j < dim && separated; ++j)
                if (std::abs(b.diagonal(i) - b.diagonal(j)) < min_gap) separated = false;
        if (separated) return b;
    }
    throw Error("no separated generator found; loosen min_gap or widen the entry range");
}

}  // namespace trifun
