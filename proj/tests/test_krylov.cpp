#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "fns/krylov.hpp"
#include "fns/problems.hpp"
#include "fns/spectral.hpp"

#include "oracles.hpp"

using fns::Grid;
using fns::Stencil3x3;

namespace {

double true_residual(const Stencil3x3& s, const Grid& f, const Grid& u) {
    return fns::norm2(f - fns::stencil_apply(s, u)) / fns::norm2(f);
}

}  // namespace

TEST_CASE("cg solves the Poisson system to the direct-solver answer", "[krylov]") {
    const int n = 32;
    const Stencil3x3 s = fns::build_poisson(n);
    const Grid f = fns::sample_rhs(n, 11);
    const auto [u, trace] = fns::cg(s, f, 1e-10, 4 * (n - 1) * (n - 1));
    CHECK(trace.converged);
    CHECK(trace.iterations <= 2 * (n - 1) * (n - 1));
    CHECK(oracles::max_abs_diff(u, fns::fast_poisson_solve(f)) < 1e-6);
    CHECK(true_residual(s, f, u) <= 1.01 * trace.residuals.back());
}

TEST_CASE("cg on a zero right-hand side", "[krylov]") {
    const auto [u, trace] = fns::cg(fns::build_poisson(8), Grid(8), 1e-8, 100);
    CHECK(trace.converged);
    CHECK(trace.iterations == 0);
}

TEST_CASE("gmres with full restart terminates within N steps", "[krylov]") {
    const int n = 16;
    const int N = (n - 1) * (n - 1);
    const Stencil3x3 s = fns::build_poisson(n);
    const Grid f = fns::sample_rhs(n, 13);
    const auto [u, trace] = fns::gmres(s, f, N, 1e-10, 4 * N);
    CHECK(trace.converged);
    CHECK(trace.iterations <= N);
    CHECK(oracles::max_abs_diff(u, fns::fast_poisson_solve(f)) < 1e-6);
}

TEST_CASE("gmres residual estimates never increase on SPD systems", "[krylov]") {
    const int n = 32;
    const Stencil3x3 s = fns::build_poisson(n);
    const Grid f = fns::sample_rhs(n, 17);
    const auto [u, trace] = fns::gmres(s, f, 10, 1e-8, 3000);
    CHECK(trace.converged);
    for (std::size_t k = 1; k < trace.residuals.size(); ++k)
        CHECK(trace.residuals[k] <= trace.residuals[k - 1] * (1.0 + 1e-10) + 1e-15);
}

TEST_CASE("gmres converges on the convection-dominated system where Jacobi diverges",
          "[krylov]") {
    const int n = 32;
    const Stencil3x3 s = fns::build_convection_diffusion(1e-6, n);
    const Grid f = fns::sample_rhs(n, 19);
    // the nearly skew-symmetric system defeats short restarts; run unrestarted
    const auto [u, trace] = fns::gmres(s, f, (n - 1) * (n - 1), 1e-6, 10000);
    CHECK(trace.converged);
    CHECK(true_residual(s, f, u) <= 1.01 * trace.residuals.back());

    const auto [uj, jtrace] = fns::stationary_solve(s, fns::WeightedJacobi{0.8, 5}, f, 1e-6, 500);
    CHECK(jtrace.diverged);
}

TEST_CASE("gmres on a zero right-hand side", "[krylov]") {
    const auto [u, trace] = fns::gmres(fns::build_poisson(8), Grid(8), 30, 1e-8, 100);
    CHECK(trace.converged);
    CHECK(trace.iterations == 0);
}

TEST_CASE("bicgstab(1) agrees with cg on the Poisson system", "[krylov]") {
    const int n = 32;
    const Stencil3x3 s = fns::build_poisson(n);
    const Grid f = fns::sample_rhs(n, 23);
    const auto [u1, t1] = fns::bicgstab_l(s, f, 1, 1e-10, 20000);
    const auto [u2, t2] = fns::cg(s, f, 1e-10, 20000);
    CHECK(t1.converged);
    CHECK(oracles::max_abs_diff(u1, u2) < 1e-6);
    CHECK(true_residual(s, f, u1) <= 1.01 * t1.residuals.back());
}

TEST_CASE("bicgstab(2) matches the direct solver on Poisson", "[krylov]") {
    const int n = 32;
    const Stencil3x3 s = fns::build_poisson(n);
    const Grid f = fns::sample_rhs(n, 29);
    const auto [u, trace] = fns::bicgstab_l(s, f, 2, 1e-10, 20000);
    CHECK(trace.converged);
    CHECK(oracles::max_abs_diff(u, fns::fast_poisson_solve(f)) < 1e-6);
}

TEST_CASE("bicgstab converges on the low-wavenumber Helmholtz system", "[krylov]") {
    const int n = 64;
    const Stencil3x3 s = fns::build_helmholtz(25.0, n);
    const Grid f = fns::sample_rhs(n, 31);
    const auto [u, trace] = fns::bicgstab_l(s, f, 2, 1e-6, 5000);
    CHECK(trace.converged);
    CHECK(trace.matvecs.back() <= 5000);
}

TEST_CASE("bicgstab on a zero right-hand side", "[krylov]") {
    const auto [u, trace] = fns::bicgstab_l(fns::build_poisson(8), Grid(8), 2, 1e-8, 100);
    CHECK(trace.converged);
    CHECK(trace.iterations == 0);
}

TEST_CASE("krylov traces are cost-aligned and end with the true residual", "[krylov]") {
    const int n = 16;
    const Stencil3x3 s = fns::build_poisson(n);
    const Grid f = fns::sample_rhs(n, 37);
    for (int which = 0; which < 3; ++which) {
        auto [u, trace] = which == 0   ? fns::cg(s, f, 1e-8, 5000)
                          : which == 1 ? fns::gmres(s, f, 20, 1e-8, 5000)
                                       : fns::bicgstab_l(s, f, 2, 1e-8, 5000);
        REQUIRE(trace.residuals.size() == trace.matvecs.size());
        for (std::size_t k = 1; k < trace.matvecs.size(); ++k)
            CHECK(trace.matvecs[k] >= trace.matvecs[k - 1]);
        CHECK(trace.residuals.back() ==
              Catch::Approx(true_residual(s, f, u)).epsilon(1e-12).margin(1e-15));
    }
}
