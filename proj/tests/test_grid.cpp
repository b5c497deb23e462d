#include <catch2/catch_amalgamated.hpp>

#include "fns/grid.hpp"
#include "fns/problems.hpp"
#include "fns/spectral.hpp"

#include "oracles.hpp"

using fns::Grid;
using fns::Stencil3x3;

TEST_CASE("stencil_apply reproduces the stencil pattern on a unit impulse", "[grid]") {
    const int n = 8;
    const Stencil3x3 s = fns::build_poisson(n);
    Grid u(n);
    u(3, 3) = 1.0;
    const Grid v = fns::stencil_apply(s, u);
    CHECK(v(3, 3) == 4.0);
    CHECK(v(2, 3) == -1.0);
    CHECK(v(4, 3) == -1.0);
    CHECK(v(3, 2) == -1.0);
    CHECK(v(3, 4) == -1.0);
    CHECK(v(2, 2) == 0.0);
    CHECK(v(0, 0) == 0.0);
}

TEST_CASE("stencil_apply on the zero grid is zero", "[grid]") {
    const Grid z(9);
    const Grid v = fns::stencil_apply(oracles::random_stencil(3), z);
    for (double x : v.v) CHECK(x == 0.0);
}

TEST_CASE("Poisson stencil on a 3x3 all-ones interior", "[grid]") {
    const int n = 4;
    Grid u(n, std::vector<double>(9, 1.0));
    const Grid v = fns::stencil_apply(fns::build_poisson(n), u);
    // corners keep two halo neighbors, edge centers one, the middle none
    CHECK(v(0, 0) == 2.0);
    CHECK(v(2, 0) == 2.0);
    CHECK(v(0, 2) == 2.0);
    CHECK(v(2, 2) == 2.0);
    CHECK(v(1, 0) == 1.0);
    CHECK(v(0, 1) == 1.0);
    CHECK(v(2, 1) == 1.0);
    CHECK(v(1, 2) == 1.0);
    CHECK(v(1, 1) == 0.0);
}

TEST_CASE("stencil_apply is linear", "[grid]") {
    const int n = 9;
    const Stencil3x3 s = oracles::random_stencil(11);
    const Grid u = oracles::random_grid(n, 1);
    const Grid v = oracles::random_grid(n, 2);
    const double a = 0.731, b = -1.618;

    Grid combo(n);
    for (std::size_t k = 0; k < combo.size(); ++k) combo.v[k] = a * u.v[k] + b * v.v[k];
    const Grid lhs = fns::stencil_apply(s, combo);
    const Grid au = fns::stencil_apply(s, u);
    const Grid av = fns::stencil_apply(s, v);
    Grid rhs(n);
    for (std::size_t k = 0; k < rhs.size(); ++k) rhs.v[k] = a * au.v[k] + b * av.v[k];
    CHECK(oracles::max_abs_diff(lhs, rhs) < 1e-12);
}

TEST_CASE("stencil_apply matches the dense-matrix oracle", "[grid]") {
    const int n = 6;
    const Stencil3x3 s = oracles::random_stencil(17);
    const Grid u = oracles::random_grid(n, 5);
    const auto mat = oracles::dense_matrix(s, n);
    CHECK(oracles::max_abs_diff(fns::stencil_apply(s, u), oracles::dense_apply(mat, u)) < 1e-13);
}

TEST_CASE("symmetric stencils give symmetric operators", "[grid]") {
    const int n = 10;
    const Stencil3x3 s = oracles::random_stencil(23, /*symmetric=*/true);
    const Grid u = oracles::random_grid(n, 7);
    const Grid v = oracles::random_grid(n, 8);
    CHECK(fns::dot(fns::stencil_apply(s, u), v) ==
          Catch::Approx(fns::dot(u, fns::stencil_apply(s, v))).margin(1e-10));
}

TEST_CASE("transposed stencil is the operator adjoint", "[grid]") {
    const int n = 10;
    const Stencil3x3 s = oracles::random_stencil(29);  // not symmetric
    const Grid u = oracles::random_grid(n, 9);
    const Grid v = oracles::random_grid(n, 10);
    CHECK(fns::dot(fns::stencil_apply(s, u), v) ==
          Catch::Approx(fns::dot(u, fns::stencil_apply(s.transposed(), v))).margin(1e-10));
}

TEST_CASE("dot and norm2 basics", "[grid]") {
    const Grid u = oracles::random_grid(12, 31);
    CHECK(fns::dot(u, u) == Catch::Approx(fns::norm2(u) * fns::norm2(u)).epsilon(1e-12));

    Grid e1(5), e2(5);
    e1(1, 2) = 1.0;
    e2(3, 0) = 1.0;
    CHECK(fns::dot(e1, e2) == 0.0);

    // elementwise [1,2] . [3,4] on a grid padded with zeros
    Grid a(3), b(3);
    a(0, 0) = 1.0;
    a(1, 0) = 2.0;
    b(0, 0) = 3.0;
    b(1, 0) = 4.0;
    CHECK(fns::dot(a, b) == 11.0);

    CHECK_THROWS_AS(fns::dot(Grid(4), Grid(5)), std::invalid_argument);
}

TEST_CASE("grid constructors validate their invariants", "[grid]") {
    CHECK_THROWS_AS(Grid(1), std::invalid_argument);
    CHECK_THROWS_AS(Grid(4, std::vector<double>(8, 0.0)), std::invalid_argument);
}

TEST_CASE("dst2 round trip is the identity", "[grid]") {
    for (int n : {5, 8, 9}) {
        const Grid u = oracles::random_grid(n, 41 + n);
        CHECK(oracles::max_abs_diff(fns::idst2(fns::dst2(u)), u) < 1e-12);
    }
}

TEST_CASE("dst2 matches direct summation", "[grid]") {
    const int n = 7;
    const Grid u = oracles::random_grid(n, 43);
    CHECK(oracles::max_abs_diff(fns::dst2(u), oracles::dst2_direct(u)) < 1e-10);
}

TEST_CASE("dst2 of a pure sine mode hits a single bin", "[grid]") {
    const int n = 12, p = 3, q = 5;
    const Grid coef = fns::dst2(oracles::sine_mode(n, p, q));
    for (int j = 0; j < n - 1; ++j)
        for (int i = 0; i < n - 1; ++i) {
            if (i == p - 1 && j == q - 1)
                CHECK(std::abs(coef(i, j)) > 1.0);
            else
                CHECK(std::abs(coef(i, j)) < 1e-12);
        }
}

TEST_CASE("dst2 of zero is zero", "[grid]") {
    const Grid zero(9);
    for (double x : fns::dst2(zero).v) CHECK(x == 0.0);
}

TEST_CASE("dst2 diagonalizes the Poisson stencil", "[grid]") {
    const int n = 16;
    const Stencil3x3 s = fns::build_poisson(n);
    for (int p : {1, 4, 15})
        for (int q : {2, 9}) {
            const Grid mode = oracles::sine_mode(n, p, q);
            const Grid amode = fns::stencil_apply(s, mode);
            const double lambda = fns::poisson_eigenvalue(p, q, n);
            Grid expect = lambda * mode;
            CHECK(oracles::max_abs_diff(amode, expect) < 1e-10);
        }
}
