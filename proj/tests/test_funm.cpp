#include <doctest.h>

#include <cmath>

#include "trifun/funm.hpp"
#include "trifun/oracles.hpp"
#include "trifun/random.hpp"

using namespace trifun;

namespace {

ThetaTable<double> table_of(const LowerTriangular<double>& b) {
    return compute_theta(b, validate_simple_spectrum(b, 1e-8));
}

double diff(const LowerTriangular<double>& a, const LowerTriangular<double>& b) {
    return max_abs_diff(a, b);
}

}  // namespace

TEST_CASE("the identity polynomial reproduces the matrix") {
    Rng rng(mix_seed(31));
    for (int rep = 0; rep < 10; ++rep) {
        int d = 2 + static_cast<int>(rng.below(9));
        auto b = random_separated_lower(rng, d, 0.5, 1.0);
        auto p = apply(b, table_of(b), Polynomial{{0, 1}});
        CHECK(diff(p, b) <= 1e-12);
        CHECK(diff(parlett_apply(b, Polynomial{{0, 1}}, 1e-8), b) <= 1e-12);
    }
}

TEST_CASE("2x2 exponential closed form") {
    LowerTriangular<double> b{{1}, {2, 3}};
    auto theta = table_of(b);
    double t = 0.5;
    auto p = apply(b, theta, Exp{t});
    CHECK(p(0, 0) == std::exp(t));
    CHECK(p(1, 1) == std::exp(3 * t));
    CHECK(p(1, 0) == doctest::Approx(std::exp(3 * t) - std::exp(t)).epsilon(1e-15));

    DenseMatrix<double> scaled = dense_from(b) * t;
    DenseMatrix<double> residual = dense_from(p) - exp_series(scaled);
    CHECK(max_abs(residual) <= 1e-12);
}

TEST_CASE("principal log refuses a negative eigenvalue") {
    LowerTriangular<double> b{{-1}, {1, 2}};
    try {
        apply(b, table_of(b), PrincipalLog{});
        FAIL("expected DomainViolation");
    } catch (const DomainViolation& e) {
        CHECK(e.function() == "log");
        CHECK(e.index() == 0);
        CHECK(e.eigenvalue().real() == -1.0);
    }
}

TEST_CASE("power handling splits on the exponent") {
    LowerTriangular<double> b{{-2}, {1, 3}};
    auto theta = table_of(b);
    // integer exponents work on any spectrum
    auto sq = apply(b, theta, Power{2.0});
    DenseMatrix<double> dense = dense_from(b);
    DenseMatrix<double> residual = dense_from(sq) - dense_multiply(dense, dense);
    CHECK(max_abs(residual) <= 1e-12);
    // fractional ones need the principal branch
    CHECK_THROWS_AS(apply(b, theta, Power{0.5}), DomainViolation);
}

TEST_CASE("inverse needs nonzero eigenvalues") {
    LowerTriangular<double> b{{0}, {1, 2}};
    CHECK_THROWS_AS(apply(b, table_of(b), Inverse{}), DomainViolation);

    LowerTriangular<double> ok{{2}, {1, 4}};
    auto inv = apply(ok, table_of(ok), Inverse{});
    DenseMatrix<double> residual =
        dense_multiply(dense_from(inv), dense_from(ok)) - DenseMatrix<double>::Identity(2, 2);
    CHECK(max_abs(residual) <= 1e-14);
}

TEST_CASE("semigroup at t=0 is the identity") {
    Rng rng(mix_seed(32));
    auto b = random_separated_lower(rng, 6, 0.5, 1.0);
    auto snaps = exp_semigroup(b, table_of(b), {0.0});
    REQUIRE(snaps.size() == 1);
    DenseMatrix<double> residual = dense_from(snaps[0]) - DenseMatrix<double>::Identity(6, 6);
    CHECK(max_abs(residual) <= 1e-12);
    for (int i = 0; i < 6; ++i) CHECK(snaps[0].diagonal(i) == 1.0);
}

TEST_CASE("two-state Markov snapshot") {
    LowerTriangular<double> b{{0}, {1, -1}};
    auto p = exp_semigroup(b, table_of(b), {1.0})[0];
    CHECK(p(0, 0) == 1.0);
    CHECK(p(1, 1) == std::exp(-1.0));
    CHECK(p(1, 0) == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-15));
    for (double s : row_sums(p)) CHECK(s == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("snapshots compose along the semigroup law") {
    LowerTriangular<double> b{{1}, {2, 3}};
    auto theta = table_of(b);
    auto snaps = exp_semigroup(b, theta, {0.3, 0.7});
    auto whole = apply(b, theta, Exp{1.0});
    DenseMatrix<double> residual =
        dense_multiply(dense_from(snaps[0]), dense_from(snaps[1])) - dense_from(whole);
    CHECK(max_abs(residual) <= 1e-9);
}

TEST_CASE("semigroup law on the random family") {
    Rng rng(mix_seed(33));
    for (int rep = 0; rep < 25; ++rep) {
        int d = 2 + static_cast<int>(rng.below(11));
        auto b = random_separated_lower(rng, d, 0.5, 1.0);
        auto theta = table_of(b);
        double t = rng.uniform01(), s = rng.uniform01();
        auto pt = apply(b, theta, Exp{t});
        auto ps = apply(b, theta, Exp{s});
        auto pts = apply(b, theta, Exp{t + s});
        DenseMatrix<double> residual =
            dense_multiply(dense_from(pt), dense_from(ps)) - dense_from(pts);
        CHECK(max_abs(residual) <= 1e-9);
    }
}

TEST_CASE("parlett examples") {
    LowerTriangular<double> b{{1}, {2, 3}};
    auto p = parlett_apply(b, Exp{1.0}, 1e-8);
    CHECK(p(0, 0) == std::exp(1.0));
    CHECK(p(1, 1) == std::exp(3.0));
    CHECK(p(1, 0) == doctest::Approx(std::exp(3.0) - std::exp(1.0)).epsilon(1e-15));

    LowerTriangular<double> diag{{2}, {0, 4}};
    auto inv = parlett_apply(diag, Inverse{}, 1e-8);
    CHECK(inv(0, 0) == 0.5);
    CHECK(inv(1, 1) == 0.25);
    CHECK(inv(1, 0) == 0.0);
}

TEST_CASE("parlett coefficient table on fixed matrices") {
    LowerTriangular<double> diag{{1}, {0, 2}, {0, 0, 3}};
    auto info = validate_simple_spectrum(diag, 1e-8);
    auto table = parlett_coefficients(diag, info);
    for (int n = 0; n < 3; ++n)
        for (int k = 0; k <= n; ++k)
            for (int m = 0; m <= k; ++m)
                CHECK(table(n, k, m) == (n == k && k == m ? 1.0 : 0.0));

    LowerTriangular<double> b{{1}, {2, 3}};
    auto binfo = validate_simple_spectrum(b, 1e-8);
    auto btable = parlett_coefficients(b, binfo);
    CHECK(btable(1, 0, 0) == -1.0);
    CHECK(btable(1, 1, 0) == 1.0);
    CHECK(max_abs_diff(btable, compute_theta(b, binfo)) == 0.0);
}

TEST_CASE("both recursions build one table") {
    Rng rng(mix_seed(34));
    for (int rep = 0; rep < 30; ++rep) {
        int d = 2 + static_cast<int>(rng.below(9));
        auto b = random_separated_lower(rng, d, 0.5, 1.0);
        auto info = validate_simple_spectrum(b, 1e-8);
        CHECK(max_abs_diff(parlett_coefficients(b, info), compute_theta(b, info)) <= 1e-9);
    }
}

TEST_CASE("route equivalence across the builtin functions") {
    Rng rng(mix_seed(35));
    for (int rep = 0; rep < 15; ++rep) {
        int d = 2 + static_cast<int>(rng.below(11));
        auto b = random_separated_lower(rng, d, 0.5, 1.0);
        auto theta = table_of(b);

        std::vector<ScalarFunction> fns = {Exp{0.7}, Power{3.0}, Polynomial{{1.0, -2.0, 0.5}}};
        // log, sqrt and inverse need a positive spectrum; shift it right
        LowerTriangular<double> pos = b;
        double lift = 0;
        for (int i = 0; i < d; ++i) lift = std::max(lift, -b.diagonal(i));
        for (int i = 0; i < d; ++i) pos(i, i) += lift + 1.0;
        auto pos_theta = table_of(pos);

        for (const auto& f : fns)
            CHECK(diff(apply(b, theta, f), parlett_apply(b, f, 1e-8)) <= 1e-9);
        for (const auto& f : std::vector<ScalarFunction>{PrincipalLog{}, Power{0.5}, Inverse{}})
            CHECK(diff(apply(pos, pos_theta, f), parlett_apply(pos, f, 1e-8)) <= 1e-9);
    }
}

TEST_CASE("zero row sums propagate to unit row sums") {
    Rng rng(mix_seed(36));
    for (int rep = 0; rep < 10; ++rep) {
        int d = 2 + static_cast<int>(rng.below(5));
        auto b = random_markov_generator(rng, d, 0.15, 0.05, 0.65);
        for (double s : row_sums(b)) REQUIRE(std::abs(s) <= 1e-12);
        // zero row sums force a zero first row
        REQUIRE(b(0, 0) == 0.0);

        auto theta = table_of(b);
        for (double t : {0.0, 0.5, 1.0, 2.5, 5.0}) {
            auto p = apply(b, theta, Exp{t});
            for (double s : row_sums(p)) CHECK(std::abs(s - 1.0) <= 1e-10);
        }
    }
}

TEST_CASE("snapshot diagonals stay simple for nonzero t") {
    Rng rng(mix_seed(37));
    for (int rep = 0; rep < 10; ++rep) {
        int d = 2 + static_cast<int>(rng.below(9));
        auto b = random_separated_lower(rng, d, 0.5, 1.0);
        auto theta = table_of(b);
        for (double t : {0.01, -0.5, 1.0}) {
            auto p = apply(b, theta, Exp{t});
            CHECK_NOTHROW(validate_simple_spectrum(p, 1e-8));
        }
    }
}

TEST_CASE("one table serves every function") {
    LowerTriangular<double> b{{1}, {2, 3}};
    auto theta = table_of(b);

    auto e = apply(b, theta, Exp{1.0});
    DenseMatrix<double> exp_ref = exp_series(dense_from(b));
    DenseMatrix<double> exp_res = dense_from(e) - exp_ref;
    CHECK(max_abs(exp_res) <= 1e-12);

    auto lg = apply(b, theta, PrincipalLog{});
    DenseMatrix<double> log_ref = log_integral(dense_from(b), 48);
    DenseMatrix<double> log_res = dense_from(lg) - log_ref;
    CHECK(max_abs(log_res) <= 1e-9);
}

TEST_CASE("table and matrix dimensions must match") {
    LowerTriangular<double> b{{1}, {2, 3}};
    ThetaTable<double> wrong(3);
    CHECK_THROWS_AS(apply(b, wrong, Exp{1.0}), DimensionMismatch);
}
