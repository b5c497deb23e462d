#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "fns/problems.hpp"
#include "fns/smoothers.hpp"
#include "fns/spectral.hpp"

#include "oracles.hpp"

using fns::Grid;
using fns::Stencil3x3;

namespace {

/** Per-mode amplitude ratio of a linear error map u -> op(u) with f = 0. */
double mode_reduction(const Grid& before, const Grid& after, int p, int q) {
    const Grid cb = fns::dst2(before);
    const Grid ca = fns::dst2(after);
    return ca(p - 1, q - 1) / cb(p - 1, q - 1);
}

}  // namespace

TEST_CASE("jacobi_sweep keeps the exact solution fixed", "[smoothers]") {
    const int n = 12;
    const Stencil3x3 s = fns::build_poisson(n);
    const Grid u = oracles::random_grid(n, 3);
    const Grid f = fns::stencil_apply(s, u);
    const Grid out = fns::jacobi_sweep(s, u, f, 2.0 / 3.0, 3);
    CHECK(oracles::max_abs_diff(out, u) < 1e-12);
}

TEST_CASE("jacobi_sweep damps each sine mode by the symbol factor", "[smoothers]") {
    const int n = 16;
    const Stencil3x3 s = fns::build_poisson(n);
    const Grid zero(n);
    const double omega = 2.0 / 3.0;
    for (int p = 1; p < n; ++p) {
        for (int q = 1; q < n; ++q) {
            const Grid mode = oracles::sine_mode(n, p, q);
            const Grid swept = fns::jacobi_sweep(s, mode, zero, omega, 1);
            const double predicted = 1.0 - omega * fns::poisson_eigenvalue(p, q, n) / 4.0;
            CHECK(mode_reduction(mode, swept, p, q) == Catch::Approx(predicted).margin(1e-10));
        }
    }
}

TEST_CASE("five sweeps equal five composed single sweeps bit for bit", "[smoothers]") {
    const int n = 10;
    const Stencil3x3 s = oracles::random_stencil(7);
    const Grid f = oracles::random_grid(n, 4);
    Grid u = oracles::random_grid(n, 5);
    const Grid multi = fns::jacobi_sweep(s, u, f, 0.8, 5);
    for (int k = 0; k < 5; ++k) u = fns::jacobi_sweep(s, u, f, 0.8, 1);
    CHECK(u.v == multi.v);
}

TEST_CASE("jacobi_sweep rejects a zero center", "[smoothers]") {
    Stencil3x3 s;
    s.at(1, 0) = 1.0;
    CHECK_THROWS_AS(fns::jacobi_sweep(s, Grid(4), Grid(4), 0.5, 1), std::invalid_argument);
}

TEST_CASE("power_method finds the top Poisson eigenvalue", "[smoothers]") {
    const int n = 32;
    const auto res = fns::power_method(fns::build_poisson(n), n, 1e-10, 20000);
    const double expect = 4.0 - 4.0 * std::cos((n - 1) * std::numbers::pi / n);
    CHECK(res.converged);
    CHECK(std::abs(res.lambda_max - expect) < 1e-4);
}

TEST_CASE("power_method on a scaled identity stencil returns the scale", "[smoothers]") {
    Stencil3x3 s;
    s.at(0, 0) = 7.0;
    const auto res = fns::power_method(s, 8);
    CHECK(res.converged);
    CHECK(res.lambda_max == Catch::Approx(7.0).epsilon(1e-12));
}

TEST_CASE("power_method result is seed independent", "[smoothers]") {
    const int n = 16;
    const Stencil3x3 s = fns::build_poisson(n);
    const auto a = fns::power_method(s, n, 1e-9, 50000, 1);
    const auto b = fns::power_method(s, n, 1e-9, 50000, 2);
    CHECK(std::abs(a.lambda_max - b.lambda_max) < 2e-4);
}

TEST_CASE("chebyshev_taus reproduces the closed form", "[smoothers]") {
    const auto taus = fns::chebyshev_taus(8.0, 3.0, 10);
    REQUIRE(taus.size() == 10);
    // tau_0 = 2 / (8 + 8/3 + (16/3) cos(pi/20)), frozen by hand evaluation
    CHECK(taus[0] == Catch::Approx(0.1255150997193038).epsilon(1e-10));

    const auto single = fns::chebyshev_taus(8.0, 1e12, 1);
    CHECK(single[0] == Catch::Approx(2.0 / 8.0).epsilon(1e-10));  // x_0 = cos(pi/2) = 0
}

TEST_CASE("chebyshev_taus stay within the Richardson stability bounds", "[smoothers]") {
    std::mt19937 rng(99);
    std::uniform_real_distribution<double> ulam(0.5, 50.0), ualpha(1.5, 10.0);
    for (int trial = 0; trial < 20; ++trial) {
        const double lmax = ulam(rng), alpha = ualpha(rng);
        const int m = 1 + int(rng() % 16);
        // |x_k| < 1 pins every step size between the interval endpoints:
        // 2/(2 lmax) < tau_k < 2/(2 lmin)
        for (const double tau : fns::chebyshev_taus(lmax, alpha, m)) {
            CHECK(tau * lmax > 1.0);
            CHECK(tau * lmax < alpha);
        }
    }
}

TEST_CASE("chebyshev_taus validates parameters", "[smoothers]") {
    CHECK_THROWS_AS(fns::chebyshev_taus(0.0, 3.0, 10), std::invalid_argument);
    CHECK_THROWS_AS(fns::chebyshev_taus(8.0, 1.0, 10), std::invalid_argument);
    CHECK_THROWS_AS(fns::chebyshev_taus(8.0, 3.0, 0), std::invalid_argument);
}

TEST_CASE("chebyshev_sweep fixed point and m=1 Richardson step", "[smoothers]") {
    const int n = 12;
    const Stencil3x3 s = fns::build_poisson(n);
    const Grid u = oracles::random_grid(n, 21);
    const Grid f = fns::stencil_apply(s, u);
    const auto taus = fns::chebyshev_taus(7.8, 3.0, 10);
    CHECK(oracles::max_abs_diff(fns::chebyshev_sweep(s, u, f, taus), u) < 1e-11);

    const Grid g = oracles::random_grid(n, 22);
    const Grid start = oracles::random_grid(n, 23);
    const std::vector<double> one_tau{0.17};
    const Grid swept = fns::chebyshev_sweep(s, start, g, one_tau);
    Grid richardson = start;
    const Grid au = fns::stencil_apply(s, start);
    for (std::size_t k = 0; k < richardson.size(); ++k)
        richardson.v[k] += 0.17 * (g.v[k] - au.v[k]);
    CHECK(oracles::max_abs_diff(swept, richardson) < 1e-15);
}

TEST_CASE("chebyshev_sweep per-mode reduction matches the tau product", "[smoothers]") {
    const int n = 16;
    const Stencil3x3 s = fns::build_poisson(n);
    const double lmax = fns::power_method(s, n).lambda_max;
    const auto taus = fns::chebyshev_taus(lmax, 3.0, 10);
    const Grid zero(n);
    for (int p : {1, 5, 15}) {
        for (int q : {2, 8, 15}) {
            const Grid mode = oracles::sine_mode(n, p, q);
            const Grid swept = fns::chebyshev_sweep(s, mode, zero, taus);
            double predicted = 1.0;
            for (double tau : taus) predicted *= 1.0 - tau * fns::poisson_eigenvalue(p, q, n);
            CHECK(mode_reduction(mode, swept, p, q) == Catch::Approx(predicted).margin(1e-8));
        }
    }
}

TEST_CASE("chebyshev beats equal-cost fixed Richardson on its interval", "[smoothers]") {
    const double lmax = 6.4, alpha = 3.0;
    const int m = 10;
    const auto taus = fns::chebyshev_taus(lmax, alpha, m);
    const double lmin = lmax / alpha;
    const double tau_fixed = 2.0 / (lmax + lmin);
    double worst_cheb = 0.0, worst_fixed = 0.0;
    for (int k = 0; k <= 10000; ++k) {
        const double lambda = lmin + (lmax - lmin) * k / 10000.0;
        double prod = 1.0;
        for (double tau : taus) prod *= 1.0 - tau * lambda;
        worst_cheb = std::max(worst_cheb, std::abs(prod));
        worst_fixed = std::max(worst_fixed, std::pow(std::abs(1.0 - tau_fixed * lambda), m));
    }
    CHECK(worst_cheb < worst_fixed);
}

TEST_CASE("learned_conv_apply is linear with no bias", "[smoothers]") {
    const int n = 10;
    fns::LearnedConv lc;
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> dist(-0.3, 0.3);
    for (auto& k : lc.k1)
        for (double& x : k.c) x = dist(rng);
    for (auto& k : lc.k2)
        for (double& x : k.c) x = dist(rng);

    CHECK(oracles::max_abs_diff(fns::learned_conv_apply(lc, Grid(n)), Grid(n)) == 0.0);

    const Grid r = oracles::random_grid(n, 6);
    const Grid a = fns::learned_conv_apply(lc, 2.5 * r);
    Grid b = 2.5 * fns::learned_conv_apply(lc, r);
    CHECK(oracles::max_abs_diff(a, b) < 1e-12);
}

TEST_CASE("identity-kernel LearnedConv reproduces a weighted-Jacobi correction", "[smoothers]") {
    const int n = 12;
    const Stencil3x3 s = fns::build_poisson(n);
    const double omega = 0.7;
    fns::LearnedConv lc;
    lc.k1[0].at(0, 0) = 1.0;
    lc.k2[0].at(0, 0) = omega / s.center();

    const Grid u = oracles::random_grid(n, 31);
    const Grid f = oracles::random_grid(n, 32);
    const Grid conv = fns::apply_smoother(s, fns::SmootherSpec{lc}, u, f);
    const Grid jac = fns::jacobi_sweep(s, u, f, omega, 1);
    CHECK(oracles::max_abs_diff(conv, jac) < 1e-13);
}

TEST_CASE("every smoother is affine in u and fixes the exact solution", "[smoothers]") {
    const int n = 10;
    const Stencil3x3 s = fns::build_poisson(n);
    fns::LearnedConv lc;
    std::mt19937 rng(77);
    std::uniform_real_distribution<double> dist(-0.05, 0.05);
    for (auto& k : lc.k1)
        for (double& x : k.c) x = dist(rng);
    for (auto& k : lc.k2)
        for (double& x : k.c) x = dist(rng);

    const std::vector<fns::SmootherSpec> variants = {
        fns::WeightedJacobi{2.0 / 3.0, 5},
        fns::Chebyshev{10, 3.0, fns::power_method(s, n).lambda_max},
        fns::SmootherSpec{lc},
    };

    const Grid f = oracles::random_grid(n, 41);
    const Grid u1 = oracles::random_grid(n, 42);
    const Grid u2 = oracles::random_grid(n, 43);
    const double a = 1.37;

    for (const auto& sm : variants) {
        // affine: Phi(u, f) - Phi(0, f) is linear in u
        const Grid base = fns::apply_smoother(s, sm, Grid(n), f);
        const Grid d1 = fns::apply_smoother(s, sm, u1, f) - base;
        const Grid d2 = fns::apply_smoother(s, sm, u2, f) - base;
        Grid combo(n);
        for (std::size_t k = 0; k < combo.size(); ++k) combo.v[k] = a * u1.v[k] + u2.v[k];
        const Grid dc = fns::apply_smoother(s, sm, combo, f) - base;
        Grid expect(n);
        for (std::size_t k = 0; k < expect.size(); ++k) expect.v[k] = a * d1.v[k] + d2.v[k];
        CHECK(oracles::max_abs_diff(dc, expect) < 1e-12);

        // fixed point at the exact solution
        const Grid ustar = oracles::random_grid(n, 44);
        const Grid fstar = fns::stencil_apply(s, ustar);
        CHECK(oracles::max_abs_diff(fns::apply_smoother(s, sm, ustar, fstar), ustar) < 1e-12);
    }
}

TEST_CASE("smoother matvec accounting", "[smoothers]") {
    CHECK(fns::smoother_matvecs(fns::WeightedJacobi{0.5, 5}) == 5);
    CHECK(fns::smoother_matvecs(fns::Chebyshev{10, 3.0, 1.0}) == 10);
    CHECK(fns::smoother_matvecs(fns::SmootherSpec{fns::LearnedConv{}}) == 1);
}
