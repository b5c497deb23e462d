#ifndef FNS_GRID_HPP
#define FNS_GRID_HPP

// Core field type for structured-grid solvers: a real-valued function on the
// (n-1)x(n-1) interior nodes of a uniform unit-square mesh with homogeneous
// Dirichlet boundary, plus the 3x3 stencil operator acting on it and the
// orthonormal 2-D discrete sine transform.

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include "fns/fft.hpp"

namespace fns {

/** Field on the interior nodes of a uniform mesh over the unit square with
 * spacing h = 1/n. Boundary values are implicitly zero and never stored.
 * Storage is row-major: index i runs along x (columns), j along y (rows). */
struct Grid {
    int n = 2;              ///< mesh divisions per side, h = 1/n
    std::vector<double> v;  ///< (n-1)^2 interior values

    Grid() : v(1, 0.0) {}
    explicit Grid(int n_) : n(n_) {
        if (n < 2) throw std::invalid_argument("Grid: n must be >= 2");
        v.assign(static_cast<std::size_t>(n - 1) * (n - 1), 0.0);
    }
    Grid(int n_, std::vector<double> values) : n(n_), v(std::move(values)) {
        if (n < 2) throw std::invalid_argument("Grid: n must be >= 2");
        if (v.size() != static_cast<std::size_t>(n - 1) * (n - 1))
            throw std::invalid_argument("Grid: values size must be (n-1)^2");
    }

    int cols() const { return n - 1; }
    int rows() const { return n - 1; }
    double h() const { return 1.0 / n; }
    std::size_t size() const { return v.size(); }
    bool same_shape(const Grid& o) const { return n == o.n; }

    double operator()(int i, int j) const {
        return v[static_cast<std::size_t>(j) * cols() + i];
    }
    double& operator()(int i, int j) { return v[static_cast<std::size_t>(j) * cols() + i]; }
};

/** Complex-valued companion of Grid with identical layout; used for the
 * frequency-domain intermediates of the spectral correction. */
struct ComplexGrid {
    int n = 2;
    std::vector<std::complex<double>> v;

    ComplexGrid() : v(1) {}
    explicit ComplexGrid(int n_) : n(n_) {
        if (n < 2) throw std::invalid_argument("ComplexGrid: n must be >= 2");
        v.assign(static_cast<std::size_t>(n - 1) * (n - 1), {0.0, 0.0});
    }

    int cols() const { return n - 1; }
    int rows() const { return n - 1; }
    std::size_t size() const { return v.size(); }

    std::complex<double> operator()(int i, int j) const {
        return v[static_cast<std::size_t>(j) * cols() + i];
    }
    std::complex<double>& operator()(int i, int j) {
        return v[static_cast<std::size_t>(j) * cols() + i];
    }
};

/** Nine real coefficients defining a constant-coefficient local operator.
 * at(a, b) multiplies the neighbor at x-offset a and y-offset b. */
struct Stencil3x3 {
    std::array<double, 9> c{};

    static constexpr int idx(int a, int b) { return (b + 1) * 3 + (a + 1); }
    double at(int a, int b) const { return c[idx(a, b)]; }
    double& at(int a, int b) { return c[idx(a, b)]; }
    double center() const { return c[idx(0, 0)]; }

    /** Stencil of the transposed operator under the zero-halo convention. */
    Stencil3x3 transposed() const {
        Stencil3x3 t;
        for (int b = -1; b <= 1; ++b)
            for (int a = -1; a <= 1; ++a) t.at(a, b) = at(-a, -b);
        return t;
    }

    bool is_symmetric(double tol = 0.0) const {
        for (int b = -1; b <= 1; ++b)
            for (int a = -1; a <= 1; ++a)
                if (std::abs(at(a, b) - at(-a, -b)) > tol) return false;
        return true;
    }

    double sum() const {
        double s = 0.0;
        for (double x : c) s += x;
        return s;
    }
};

// ---------------------------------------------------------------------------
// Elementwise arithmetic

inline void check_same_shape(const Grid& a, const Grid& b, const char* who) {
    if (!a.same_shape(b)) throw std::invalid_argument(std::string(who) + ": shape mismatch");
}

inline Grid& operator+=(Grid& a, const Grid& b) {
    check_same_shape(a, b, "Grid::operator+=");
    for (std::size_t k = 0; k < a.size(); ++k) a.v[k] += b.v[k];
    return a;
}

inline Grid& operator-=(Grid& a, const Grid& b) {
    check_same_shape(a, b, "Grid::operator-=");
    for (std::size_t k = 0; k < a.size(); ++k) a.v[k] -= b.v[k];
    return a;
}

inline Grid operator+(Grid a, const Grid& b) {
    a += b;
    return a;
}

inline Grid operator-(Grid a, const Grid& b) {
    a -= b;
    return a;
}

inline Grid operator*(double s, Grid a) {
    for (double& x : a.v) x *= s;
    return a;
}

/** y += a*x */
inline void axpy(Grid& y, double a, const Grid& x) {
    check_same_shape(y, x, "axpy");
    for (std::size_t k = 0; k < y.size(); ++k) y.v[k] += a * x.v[k];
}

// ---------------------------------------------------------------------------
// Operations

/** Applies the stencil as a linear operator with homogeneous Dirichlet halo:
 * out(i,j) = sum_{a,b} s(a,b) * u(i+a, j+b), out-of-range neighbors are 0. */
inline Grid stencil_apply(const Stencil3x3& s, const Grid& u) {
    const int m = u.cols();
    Grid out(u.n);

    auto cell = [&](int i, int j) {
        double acc = 0.0;
        for (int b = -1; b <= 1; ++b) {
            const int jj = j + b;
            if (jj < 0 || jj >= m) continue;
            for (int a = -1; a <= 1; ++a) {
                const int ii = i + a;
                if (ii < 0 || ii >= m) continue;
                acc += s.at(a, b) * u(ii, jj);
            }
        }
        return acc;
    };

    for (int j = 0; j < m; ++j) {
        if (j == 0 || j == m - 1) {
            for (int i = 0; i < m; ++i) out(i, j) = cell(i, j);
            continue;
        }
        out(0, j) = cell(0, j);
        const double* up = &u.v[static_cast<std::size_t>(j - 1) * m];
        const double* mid = &u.v[static_cast<std::size_t>(j) * m];
        const double* dn = &u.v[static_cast<std::size_t>(j + 1) * m];
        double* dst = &out.v[static_cast<std::size_t>(j) * m];
        for (int i = 1; i < m - 1; ++i) {
            dst[i] = s.at(-1, -1) * up[i - 1] + s.at(0, -1) * up[i] + s.at(1, -1) * up[i + 1] +
                     s.at(-1, 0) * mid[i - 1] + s.at(0, 0) * mid[i] + s.at(1, 0) * mid[i + 1] +
                     s.at(-1, 1) * dn[i - 1] + s.at(0, 1) * dn[i] + s.at(1, 1) * dn[i + 1];
        }
        out(m - 1, j) = cell(m - 1, j);
    }
    return out;
}

/** Euclidean inner product of two grids of the same shape. */
inline double dot(const Grid& a, const Grid& b) {
    check_same_shape(a, b, "dot");
    double acc = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) acc += a.v[k] * b.v[k];
    return acc;
}

/** Euclidean norm. */
inline double norm2(const Grid& a) { return std::sqrt(dot(a, a)); }

/** Orthonormal 2-D type-I discrete sine transform. Both axes carry a factor
 * sqrt(2/n), making the transform its own inverse: idst2(dst2(u)) == u up to
 * rounding. Implemented via FFTW's RODFT00 in O(N log N). */
inline Grid dst2(const Grid& u) {
    Grid out(u.n);
    detail::dst1_2d(u.v.data(), out.v.data(), u.rows(), u.cols());
    const double scale = 1.0 / (2.0 * u.n);  // RODFT00 is 2n times the orthonormal DST-I
    for (double& x : out.v) x *= scale;
    return out;
}

/** Inverse of dst2 (the transform is self-inverse under this normalization). */
inline Grid idst2(const Grid& c) { return dst2(c); }

}  // namespace fns

#endif  // FNS_GRID_HPP
