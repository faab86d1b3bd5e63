#include <doctest.h>

#include <cmath>

#include "trifun/oracles.hpp"
#include "trifun/random.hpp"
#include "trifun/triangular.hpp"

using namespace trifun;

TEST_CASE("exp of zero is the identity") {
    DenseMatrix<double> z = DenseMatrix<double>::Zero(3, 3);
    CHECK(exp_series(z) == DenseMatrix<double>::Identity(3, 3));
}

TEST_CASE("exp of a diagonal matrix") {
    DenseMatrix<double> m = DenseMatrix<double>::Zero(2, 2);
    m(0, 0) = 1;
    m(1, 1) = 3;
    DenseMatrix<double> e = exp_series(m);
    CHECK(e(0, 0) == doctest::Approx(std::exp(1.0)).epsilon(1e-14));
    CHECK(e(1, 1) == doctest::Approx(std::exp(3.0)).epsilon(1e-14));
    CHECK(e(0, 1) == 0.0);
    CHECK(e(1, 0) == 0.0);
}

TEST_CASE("exp closed form on the 2x2 example") {
    DenseMatrix<double> m(2, 2);
    m << 1, 0, 2, 3;
    DenseMatrix<double> e = exp_series(m);
    DenseMatrix<double> want(2, 2);
    want << std::exp(1.0), 0, std::exp(3.0) - std::exp(1.0), std::exp(3.0);
    CHECK(max_abs(DenseMatrix<double>(e - want)) <= 1e-12);
}

TEST_CASE("exp reports exhausted budgets") {
    DenseMatrix<double> m(1, 1);
    m << 0.4;
    SeriesControl tight;
    tight.max_terms = 2;
    try {
        exp_series(m, tight);
        FAIL("expected NotConverged");
    } catch (const NotConverged& e) {
        CHECK(e.terms() == 2);
    }
}

TEST_CASE("scaling floor is honored") {
    // forcing extra squarings must not change the value
    DenseMatrix<double> m(2, 2);
    m << 0.2, 0, 0.1, 0.3;
    SeriesControl ctrl;
    ctrl.scaling_squarings = 4;
    DenseMatrix<double> diff = exp_series(m, ctrl) - exp_series(m);
    CHECK(max_abs(diff) <= 1e-14);
}

TEST_CASE("log series basics") {
    DenseMatrix<double> id = DenseMatrix<double>::Identity(2, 2);
    CHECK(log_series(id) == DenseMatrix<double>::Zero(2, 2));

    DenseMatrix<double> d = DenseMatrix<double>::Zero(2, 2);
    d(0, 0) = 1.5;
    d(1, 1) = 0.5;
    DenseMatrix<double> lg = log_series(d);
    CHECK(lg(0, 0) == doctest::Approx(std::log(1.5)).epsilon(1e-14));
    CHECK(lg(1, 1) == doctest::Approx(std::log(0.5)).epsilon(1e-14));
}

TEST_CASE("log series round-trips a small exponential") {
    DenseMatrix<double> b(2, 2);
    b << 0, 0, 1, -1;
    DenseMatrix<double> scaled = b * 0.1;
    DenseMatrix<double> diff = log_series(exp_series(scaled)) - scaled;
    CHECK(max_abs(diff) <= 1e-10);
}

TEST_CASE("log series refuses a wide spectrum") {
    DenseMatrix<double> d = DenseMatrix<double>::Zero(2, 2);
    d(0, 0) = 3.0;
    d(1, 1) = 0.5;
    try {
        log_series(d);
        FAIL("expected SpectralRadiusTooLarge");
    } catch (const SpectralRadiusTooLarge& e) {
        CHECK(e.bound() == 2.0);
    }
}

TEST_CASE("log series reports exhausted budgets") {
    DenseMatrix<double> d = DenseMatrix<double>::Zero(1, 1);
    d(0, 0) = 1.9;
    SeriesControl tight;
    tight.max_terms = 3;
    CHECK_THROWS_AS(log_series(d, tight), NotConverged);
}

TEST_CASE("integral log basics") {
    DenseMatrix<double> id = DenseMatrix<double>::Identity(3, 3);
    CHECK(log_integral(id) == DenseMatrix<double>::Zero(3, 3));

    DenseMatrix<double> d = DenseMatrix<double>::Zero(2, 2);
    d(0, 0) = 2.0;
    d(1, 1) = 0.5;
    DenseMatrix<double> lg = log_integral(d, 32);
    CHECK(std::abs(lg(0, 0) - std::log(2.0)) <= 1e-12);
    CHECK(std::abs(lg(1, 1) - std::log(0.5)) <= 1e-12);
}

TEST_CASE("integral log reaches spectra the series cannot") {
    DenseMatrix<double> p(2, 2);
    p << std::exp(1.0), 0, std::exp(3.0) - std::exp(1.0), std::exp(3.0);
    // the series precondition fails here; the integral has no radius limit
    DenseMatrix<double> shifted = p - DenseMatrix<double>::Identity(2, 2);
    CHECK(spectral_radius_bound(shifted) > 1.0);

    DenseMatrix<double> want(2, 2);
    want << 1, 0, 2, 3;
    DenseMatrix<double> diff = log_integral(p, 48) - want;
    CHECK(max_abs(diff) <= 1e-9);
}

TEST_CASE("integral log rejects eigenvalues on the cut") {
    DenseMatrix<double> p = DenseMatrix<double>::Identity(2, 2);
    p(1, 1) = -0.5;  // a_nn = -1.5
    try {
        log_integral(p);
        FAIL("expected EigenvalueOnCut");
    } catch (const EigenvalueOnCut& e) {
        CHECK(e.index() == 1);
        CHECK(e.value() == -1.5);
    }
}

TEST_CASE("integral log refuses a node-singular resolvent") {
    auto q = gauss_legendre_unit(8);
    double tau = q.nodes[3];
    DenseMatrix<double> p = DenseMatrix<double>::Identity(2, 2);
    p(1, 1) = 1.0 - 1.0 / tau;  // 1 + tau * a_11 == 0 exactly at that node
    try {
        log_integral(p, 8);
        FAIL("expected SingularResolvent");
    } catch (const SingularResolvent& e) {
        CHECK(e.index() == 1);
        CHECK(e.node() == doctest::Approx(tau).epsilon(1e-15));
    }
}

TEST_CASE("spectral radius bound") {
    DenseMatrix<double> d = DenseMatrix<double>::Zero(2, 2);
    d(0, 0) = 0.3;
    d(1, 1) = -0.7;
    CHECK(spectral_radius_bound(d) == 0.7);

    DenseMatrix<double> nil = DenseMatrix<double>::Zero(2, 2);
    nil(1, 0) = 5.0;
    CHECK(spectral_radius_bound(nil) == 0.0);

    DenseMatrix<double> dense(2, 2);
    dense << 0, 0.5, 0.5, 0;
    CHECK(spectral_radius_bound(dense) == 0.5);
}

TEST_CASE("unit-interval quadrature integrates constants") {
    for (int n : {4, 8, 32}) {
        auto q = gauss_legendre_unit(n);
        REQUIRE(static_cast<int>(q.nodes.size()) == n);
        double total = 0;
        for (double w : q.weights) total += w;
        CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
        for (double x : q.nodes) {
            CHECK(x > 0.0);
            CHECK(x < 1.0);
        }
    }
}

TEST_CASE("series log inverts the series exp at small norm") {
    Rng rng(mix_seed(41));
    for (int rep = 0; rep < 30; ++rep) {
        int d = 2 + static_cast<int>(rng.below(2));
        DenseMatrix<double> m(d, d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) m(i, j) = rng.uniform(-0.3, 0.3);
        DenseMatrix<double> p = exp_series(m);
        DenseMatrix<double> shifted = p - DenseMatrix<double>::Identity(d, d);
        if (spectral_radius_bound(shifted) >= 1.0) continue;
        DenseMatrix<double> diff = log_series(p) - m;
        CHECK(max_abs(diff) <= 1e-9);
    }
}

TEST_CASE("integral log inverts the series exp on triangular input") {
    Rng rng(mix_seed(42));
    for (int rep = 0; rep < 30; ++rep) {
        int d = 2 + static_cast<int>(rng.below(5));
        DenseMatrix<double> m = DenseMatrix<double>::Zero(d, d);
        for (int i = 0; i < d; ++i) {
            m(i, i) = rng.uniform(-2.0, 2.0);
            for (int j = 0; j < i; ++j) m(i, j) = rng.uniform(-1.0, 1.0);
        }
        DenseMatrix<double> diff = log_integral(exp_series(m)) - m;
        CHECK(max_abs(diff) <= 1e-9);
    }
}

TEST_CASE("oracles preserve triangularity") {
    Rng rng(mix_seed(43));
    for (int rep = 0; rep < 10; ++rep) {
        int d = 2 + static_cast<int>(rng.below(5));
        DenseMatrix<double> m = DenseMatrix<double>::Zero(d, d);
        for (int i = 0; i < d; ++i) {
            m(i, i) = rng.uniform(-1.0, 1.0);
            for (int j = 0; j < i; ++j) m(i, j) = rng.uniform(-1.0, 1.0);
        }
        auto upper_leak = [](const DenseMatrix<double>& a) {
            double worst = 0;
            for (int i = 0; i < a.rows(); ++i)
                for (int j = i + 1; j < a.cols(); ++j) worst = std::max(worst, std::abs(a(i, j)));
            return worst;
        };
        DenseMatrix<double> p = exp_series(m);
        CHECK(upper_leak(p) <= 1e-13);
        CHECK(upper_leak(log_integral(p)) <= 1e-13);
        if (spectral_radius_bound(DenseMatrix<double>(p - DenseMatrix<double>::Identity(d, d))) < 1.0)
            CHECK(upper_leak(log_series(p)) <= 1e-13);
    }
}

TEST_CASE("quadrature error falls as nodes double") {
    DenseMatrix<double> d = DenseMatrix<double>::Zero(2, 2);
    d(0, 0) = 2.0;
    d(1, 1) = 0.5;
    DenseMatrix<double> want = DenseMatrix<double>::Zero(2, 2);
    want(0, 0) = std::log(2.0);
    want(1, 1) = std::log(0.5);

    double prev = 1.0;
    for (int nodes : {8, 16, 32, 64}) {
        DenseMatrix<double> diff = log_integral(d, nodes) - want;
        double err = max_abs(diff);
        CHECK(err <= prev + 1e-13);  // monotone up to the float noise floor
        prev = err;
    }
}
