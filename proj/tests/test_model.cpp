#include <doctest.h>

#include <cmath>
#include <vector>

#include "mfl/error.hpp"
#include "mfl/model.hpp"
#include "oracles.hpp"

using namespace mfl;

TEST_CASE("constant coefficients build a uniform grid with zero derivatives") {
    const auto c = make_constant_coefficients(5, 10, 5, 1, 2000);
    CHECK(c.nodes() == 2001);
    CHECK(c.grid.front() == 0.0);
    CHECK(c.grid.back() == 1.0);
    CHECK(c.grid[1000] == doctest::Approx(0.5).epsilon(1e-15));
    for (std::size_t i = 0; i < c.nodes(); ++i) {
        CHECK(c.eta_dot[i] == 0.0);
        CHECK(c.kappa_dot[i] == 0.0);
    }
    CHECK(c.eta_sup() == 5.0);
    CHECK(c.inv_eta_sup() == doctest::Approx(0.2));

    const auto small = make_constant_coefficients(1, 0, 0, 1, 2);
    CHECK(small.nodes() == 3);
    CHECK(small.kappa_sup() == 0.0);
}

TEST_CASE("invalid coefficients are rejected") {
    CHECK_THROWS_AS(make_constant_coefficients(5, 10, -1, 1, 100), InvalidCoefficients);
    CHECK_THROWS_AS(make_constant_coefficients(0, 10, 5, 1, 100), InvalidCoefficients);
    CHECK_THROWS_AS(make_constant_coefficients(5, -1, 5, 1, 100), InvalidCoefficients);
    CHECK_THROWS_AS(make_constant_coefficients(5, 10, 5, 0, 100), InvalidCoefficients);
    CHECK_THROWS_AS(make_constant_coefficients(5, 10, 5, 1, 1), InvalidCoefficients);
    CHECK_THROWS_AS(make_sampled_coefficients({0, 0.5, 0.4}, {1, 1, 1}, {0, 0, 0}, {0, 0, 0}), InvalidCoefficients);
}

TEST_CASE("sampled coefficients recover derivatives of smooth profiles") {
    const std::size_t n = 401;
    std::vector<double> t(n), eta(n), kappa(n), lambda(n);
    for (std::size_t i = 0; i < n; ++i) {
        t[i] = static_cast<double>(i) / (n - 1);
        eta[i] = 2.0 + std::sin(t[i]);
        kappa[i] = 1.0 + t[i] * t[i];
        lambda[i] = 1.0;
    }
    const auto c = make_sampled_coefficients(t, eta, kappa, lambda);
    for (std::size_t i = 0; i < n; ++i) {
        CHECK(c.eta_dot[i] == doctest::Approx(std::cos(t[i])).epsilon(1e-4));
        CHECK(c.kappa_dot[i] == doctest::Approx(2.0 * t[i]).epsilon(1e-4).scale(1.0));
    }
    CHECK(c.at(c.eta, 0.123) == doctest::Approx(2.0 + std::sin(0.123)).epsilon(1e-5));
}

TEST_CASE("exponential sellers") {
    const auto d = make_exponential_sellers(1.5);
    CHECK(d.kind() == DistributionKind::analytic);
    CHECK(d.mean() == 1.5);
    CHECK(std::isinf(d.supp_upper()));
    for (double x : {0.0, 0.3, 1.0, 4.0}) {
        CHECK(d.q0(x) == doctest::Approx(std::exp(-2.0 * x / 3.0)).epsilon(1e-14));
        CHECK(d.p0(-x - 0.1) == 0.0);
    }
    CHECK(d.Q0(3.0) == doctest::Approx(1.5 * (1.0 - std::exp(-2.0))).epsilon(1e-14));
    CHECK(d.Q0(3.0) == doctest::Approx(1.29700).epsilon(1e-5));
    CHECK(oracle::simpson([&](double x) { return d.q0(x); }, 0.0, 3.0) == doctest::Approx(d.Q0(3.0)).epsilon(1e-10));

    const auto unit = make_exponential_sellers(1.0);
    CHECK(unit.q0(0.0) == 1.0);
    CHECK(unit.mean() == 1.0);

    CHECK_THROWS_AS(make_exponential_sellers(0.0), InvalidDistribution);
    CHECK_THROWS_AS(make_exponential_sellers(-2.0), InvalidDistribution);
}

TEST_CASE("two-sided exponential measure") {
    const auto d = make_two_sided(0.8, 1.5, 0.2, 1.0);
    CHECK(d.mean() == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(d.q0(0.6) == doctest::Approx(0.8 * std::exp(-0.4)).epsilon(1e-14));
    CHECK(d.p0(-0.7) == doctest::Approx(0.2 * std::exp(-0.7)).epsilon(1e-14));
    CHECK(d.q0(0.0) + d.p0(0.0) == doctest::Approx(1.0));

    // mean by quadrature over the truncated density
    const double lo = d.buyer_truncation(), hi = d.seller_truncation();
    CHECK(d.q0(hi) == doctest::Approx(1e-12).epsilon(1e-6));
    const double m = oracle::simpson([&](double x) { return x * d.density(x); }, lo, 0.0, 200000) +
                     oracle::simpson([&](double x) { return x * d.density(x); }, 0.0, hi, 200000);
    CHECK(std::abs(m - d.mean()) < 1e-8);

    const auto one = make_two_sided(1.0, 2.0, 0.0, 1.0);
    const auto ref = make_exponential_sellers(2.0);
    for (double x : {0.0, 0.5, 3.0}) {
        CHECK(one.q0(x) == ref.q0(x));
        CHECK(one.Q0(x) == ref.Q0(x));
    }
    CHECK(one.mean() == ref.mean());

    CHECK(make_two_sided(0.5, 1.0, 0.5, 1.0).mean() == 0.0);
    CHECK_THROWS_AS(make_two_sided(-0.1, 1.0, 0.5, 1.0), InvalidDistribution);
    CHECK_THROWS_AS(make_two_sided(0.7, 1.0, 0.5, 1.0), InvalidDistribution);
    CHECK_THROWS_AS(make_two_sided(0.5, 0.0, 0.5, 1.0), InvalidDistribution);

    const auto atom = make_two_sided(0.5, 1.0, 0.3, 1.0);
    CHECK(atom.q0(0.0) == doctest::Approx(0.7));
    CHECK(atom.p0(0.0) == doctest::Approx(0.5));
    CHECK(atom.q0(0.0) + atom.p0(0.0) >= 1.0);
}

TEST_CASE("tail invariants on analytic measures") {
    for (const auto& d : {make_exponential_sellers(1.5), make_two_sided(0.8, 1.5, 0.2, 1.0)}) {
        double prev_q = 2.0, prev_p = -1.0;
        for (int i = 0; i <= 1000; ++i) {
            const double x = 10.0 * i / 1000.0;
            CHECK(d.q0(x) <= prev_q);
            CHECK(d.q0(x) >= 0.0);
            prev_q = d.q0(x);
            const double y = -10.0 + 10.0 * i / 1000.0;
            CHECK(d.p0(y) >= prev_p);
            CHECK(d.p0(y) <= 1.0);
            prev_p = d.p0(y);
        }
        // Q0' = q0 and Q0 is 1-Lipschitz
        const double step = 1e-5;
        for (int i = 1; i <= 1000; ++i) {
            const double x = 8.0 * i / 1000.0;
            const double dq = (d.Q0(x + step) - d.Q0(x - step)) / (2 * step);
            CHECK(std::abs(dq - d.q0(x)) < 1e-8);
            CHECK(d.Q0(x + 0.01) - d.Q0(x) <= 0.01 + 1e-15);
        }
    }
}

TEST_CASE("empirical measure counts atoms with closed tails") {
    const auto d = make_empirical({3, 1, 2});
    CHECK(d.kind() == DistributionKind::empirical);
    CHECK(d.q0(2.0) == doctest::Approx(2.0 / 3.0));
    CHECK(d.mean() == 2.0);
    CHECK(d.supp_upper() == 3.0);
    CHECK(d.Q0(1.5) == doctest::Approx((1.0 + 1.5 + 1.5) / 3.0));

    const auto pair = make_empirical({-1, 1});
    CHECK(pair.mean() == 0.0);
    CHECK(pair.q0(0.0) == 0.5);
    CHECK(pair.p0(0.0) == 0.5);

    const auto zero = make_empirical({0});
    CHECK(zero.q0(0.0) == 1.0);
    CHECK(zero.p0(0.0) == 1.0);

    const std::vector<double> xs{-2.5, -1, 0, 0, 0.5, 0.5, 1.25, 4};
    const auto e = make_empirical(xs);
    for (double a : xs) {
        double ge = 0, le = 0;
        for (double b : xs) {
            ge += b >= a;
            le += b <= a;
        }
        CHECK(e.q0(a) == ge / xs.size());
        CHECK(e.p0(a) == le / xs.size());
    }

    CHECK_THROWS_AS(make_empirical({}), InvalidDistribution);
    CHECK_THROWS_AS(make_empirical({1.0, NAN}), InvalidDistribution);
}

TEST_CASE("reflection mirrors the measure") {
    const auto d = make_two_sided(0.8, 1.5, 0.2, 1.0);
    const auto r = d.reflected();
    CHECK(r.mean() == doctest::Approx(-1.0));
    for (double x : {0.1, 0.7, 2.0}) {
        CHECK(r.q0(x) == doctest::Approx(d.p0(-x)).epsilon(1e-15));
        CHECK(r.p0(-x) == doctest::Approx(d.q0(x)).epsilon(1e-15));
    }
    const auto e = make_empirical({-1, 2, 5}).reflected();
    CHECK(e.empirical()->positions == std::vector<double>{-5, -2, 1});
}

TEST_CASE("assumption report") {
    const auto c = make_constant_coefficients(5, 10, 5, 1, 100);
    CHECK(validate_assumptions(c, 0.0).passes(true));
    const auto seven = validate_assumptions(c, 1.0 / 7.0);
    CHECK(seven.passes(true));
    const auto one = validate_assumptions(c, 1.0);
    CHECK(one.passes());
    CHECK_FALSE(one.passes(true));
    CHECK_FALSE(one.n_player);
    CHECK(one.n_player_violations.size() == c.nodes());
    CHECK(one.describe().find("violated") != std::string::npos);
    CHECK_THROWS_AS(validate_assumptions(c, 1.5), InvalidInput);

    // lambda + delta*kappa_dot < 0 with a steeply falling kappa
    std::vector<double> t{0, 0.5, 1}, eta{1, 1, 1}, kappa{10, 5, 0}, lambda{1, 1, 1};
    const auto falling = make_sampled_coefficients(t, eta, kappa, lambda);
    const auto r = validate_assumptions(falling, 0.5);
    CHECK_FALSE(r.mean_field);
    CHECK(r.mean_field_violations.size() == 3);
    CHECK(validate_assumptions(falling, 0.0).mean_field);
}
