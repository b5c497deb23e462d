#ifndef FNS_PROBLEMS_HPP
#define FNS_PROBLEMS_HPP

// The four discrete systems exercised by the workbench, each expressed as a
// constant-coefficient Stencil3x3 on the interior of a uniform unit-square
// mesh, plus the random right-hand-side sampler shared by training and
// benchmarking.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>

#include "fns/grid.hpp"

namespace fns {

enum class Family : std::uint8_t {
    Poisson = 0,
    Anisotropic = 1,
    ConvectionDiffusion = 2,
    Helmholtz = 3,
};

inline const char* family_name(Family f) {
    switch (f) {
        case Family::Poisson: return "poisson";
        case Family::Anisotropic: return "anisotropic";
        case Family::ConvectionDiffusion: return "convdiff";
        case Family::Helmholtz: return "helmholtz";
    }
    return "?";
}

/** Parameters selecting one discrete system. Only the fields relevant to the
 * family are read. */
struct ProblemSpec {
    Family family = Family::Poisson;
    int n = 64;            ///< mesh divisions per side
    double xi = 1.0;       ///< anisotropic strength, in (0, 1]
    double theta = 0.0;    ///< anisotropic direction, in [0, pi]
    double epsilon = 1.0;  ///< diffusion coefficient, > 0
    double kappa = 0.0;    ///< Helmholtz wavenumber, >= 0

    void validate() const {
        if (n < 2) throw std::invalid_argument("ProblemSpec: n must be >= 2");
        switch (family) {
            case Family::Anisotropic:
                if (!(xi > 0.0 && xi <= 1.0))
                    throw std::invalid_argument("ProblemSpec: xi must be in (0, 1]");
                if (!(theta >= 0.0 && theta <= std::numbers::pi))
                    throw std::invalid_argument("ProblemSpec: theta must be in [0, pi]");
                break;
            case Family::ConvectionDiffusion:
                if (!(epsilon > 0.0))
                    throw std::invalid_argument("ProblemSpec: epsilon must be > 0");
                break;
            case Family::Helmholtz:
                if (!(kappa >= 0.0))
                    throw std::invalid_argument("ProblemSpec: kappa must be >= 0");
                break;
            case Family::Poisson: break;
        }
    }
};

/** Five-point Laplacian from linear finite elements: center 4, cross
 * neighbors -1, O(1) scale (no 1/h^2 factor). */
inline Stencil3x3 build_poisson(int n) {
    if (n < 2) throw std::invalid_argument("build_poisson: n must be >= 2");
    Stencil3x3 s;
    s.at(0, 0) = 4.0;
    s.at(1, 0) = s.at(-1, 0) = s.at(0, 1) = s.at(0, -1) = -1.0;
    return s;
}

namespace detail {

/** Bilinear-quad element stiffness entry for -div(C grad u), C constant, on
 * a square element; exact integration collapses to this closed form in the
 * reference corner signs (xa, ya), (xb, yb) in {-1, +1}. The element size h
 * cancels, so entries are O(1) for every mesh. */
inline double bilinear_stiffness_entry(double c11, double c12, double c22, int xa, int ya, int xb,
                                       int yb) {
    return c11 * xa * xb * (3.0 + ya * yb) / 12.0 + c12 * (xa * yb + ya * xb) / 4.0 +
           c22 * ya * yb * (3.0 + xa * xb) / 12.0;
}

}  // namespace detail

/** Nine-point stencil of the anisotropic diffusion operator -div(C grad u)
 * with C = R(theta) diag(1, xi) R(theta)^T, assembled from bilinear finite
 * elements over the four elements sharing a node. */
inline Stencil3x3 build_anisotropic(double xi, double theta, int n) {
    if (!(xi > 0.0 && xi <= 1.0))
        throw std::invalid_argument("build_anisotropic: xi must be in (0, 1]");
    if (!(theta >= 0.0 && theta <= std::numbers::pi))
        throw std::invalid_argument("build_anisotropic: theta must be in [0, pi]");
    if (n < 2) throw std::invalid_argument("build_anisotropic: n must be >= 2");

    const double ct = std::cos(theta), st = std::sin(theta);
    const double c11 = ct * ct + xi * st * st;
    const double c12 = (1.0 - xi) * st * ct;
    const double c22 = st * st + xi * ct * ct;

    // Four elements around the center node, one per quadrant (sx, sy).
    // Within element (sx, sy) the nodes sit at offsets {0, sx} x {0, sy};
    // the reference-corner sign of offset o along an axis with element sign
    // s is -s for o == 0 and +s otherwise.
    Stencil3x3 out;
    for (int sx = -1; sx <= 1; sx += 2) {
        for (int sy = -1; sy <= 1; sy += 2) {
            const int xc = -sx, yc = -sy;  // center node corner signs
            for (int ox : {0, sx}) {
                for (int oy : {0, sy}) {
                    const int xb = (ox == 0) ? -sx : sx;
                    const int yb = (oy == 0) ? -sy : sy;
                    out.at(ox, oy) +=
                        detail::bilinear_stiffness_entry(c11, c12, c22, xc, yc, xb, yb);
                }
            }
        }
    }
    return out;
}

/** Central-difference stencil of -eps*Lap(u) + u_x + u_y, carrying the
 * 1/h^2 factor; non-symmetric for every eps. */
inline Stencil3x3 build_convection_diffusion(double epsilon, int n) {
    if (!(epsilon > 0.0))
        throw std::invalid_argument("build_convection_diffusion: epsilon must be > 0");
    if (n < 2) throw std::invalid_argument("build_convection_diffusion: n must be >= 2");
    const double h = 1.0 / n;
    const double inv_h2 = 1.0 / (h * h);
    Stencil3x3 s;
    s.at(0, 0) = 4.0 * epsilon * inv_h2;
    s.at(1, 0) = s.at(0, 1) = (h / 2.0 - epsilon) * inv_h2;
    s.at(-1, 0) = s.at(0, -1) = (-h / 2.0 - epsilon) * inv_h2;
    return s;
}

/** Second-order finite-difference stencil of -Lap(u) - kappa^2 u, carrying
 * the 1/h^2 factor; indefinite once kappa^2 h^2 pushes low sine modes below
 * zero. */
inline Stencil3x3 build_helmholtz(double kappa, int n) {
    if (!(kappa >= 0.0)) throw std::invalid_argument("build_helmholtz: kappa must be >= 0");
    if (n < 2) throw std::invalid_argument("build_helmholtz: n must be >= 2");
    const double h = 1.0 / n;
    const double inv_h2 = 1.0 / (h * h);
    Stencil3x3 s;
    s.at(0, 0) = (4.0 - kappa * kappa * h * h) * inv_h2;
    s.at(1, 0) = s.at(-1, 0) = s.at(0, 1) = s.at(0, -1) = -1.0 * inv_h2;
    return s;
}

/** True when the discrete Helmholtz operator has sine modes of both signs,
 * i.e. the lowest mode's eigenvalue 4 - 4cos(pi h) - kappa^2 h^2 is negative
 * while the highest stays positive. */
inline bool helmholtz_indefinite(double kappa, int n) {
    const double h = 1.0 / n;
    const double k2h2 = kappa * kappa * h * h;
    const double lo = 4.0 - 4.0 * std::cos(std::numbers::pi * h) - k2h2;
    const double hi = 4.0 - 4.0 * std::cos(std::numbers::pi * (n - 1) * h) - k2h2;
    return lo < 0.0 && hi > 0.0;
}

inline Stencil3x3 build_stencil(const ProblemSpec& p) {
    p.validate();
    switch (p.family) {
        case Family::Poisson: return build_poisson(p.n);
        case Family::Anisotropic: return build_anisotropic(p.xi, p.theta, p.n);
        case Family::ConvectionDiffusion: return build_convection_diffusion(p.epsilon, p.n);
        case Family::Helmholtz: return build_helmholtz(p.kappa, p.n);
    }
    throw std::logic_error("build_stencil: unknown family");
}

/** I.i.d. standard-normal right-hand side from a fixed, portable generator:
 * std::mt19937_64 seeded with `seed`, uniforms taken as the top 53 bits, and
 * the Box-Muller transform. Identical seeds give identical grids. */
inline Grid sample_rhs(int n, std::uint64_t seed) {
    Grid g(n);
    std::mt19937_64 rng(seed);
    auto uniform = [&rng]() { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
    std::size_t k = 0;
    while (k < g.size()) {
        const double u1 = uniform();
        const double u2 = uniform();
        const double rad = std::sqrt(-2.0 * std::log1p(-u1));
        const double ang = 2.0 * std::numbers::pi * u2;
        g.v[k++] = rad * std::cos(ang);
        if (k < g.size()) g.v[k++] = rad * std::sin(ang);
    }
    return g;
}

/** Peclet number h/eps of the unit-velocity convection-diffusion problem;
 * central differencing is stable for values <= 2. */
inline double peclet(double epsilon, double h) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("peclet: epsilon must be > 0");
    return h / epsilon;
}

}  // namespace fns

#endif  // FNS_PROBLEMS_HPP
