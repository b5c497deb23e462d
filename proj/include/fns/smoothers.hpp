#ifndef FNS_SMOOTHERS_HPP
#define FNS_SMOOTHERS_HPP

// Stationary operators Phi used inside the solver: weighted Jacobi, the
// Chebyshev semi-iteration (with a power-method spectral estimate), and a
// learned two-layer linear-convolution smoother. All of them are affine maps
// in (u, f) with fixed point at the exact solution.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <variant>
#include <vector>

#include "fns/grid.hpp"
#include "fns/problems.hpp"

namespace fns {

struct WeightedJacobi {
    double omega = 2.0 / 3.0;
    int sweeps = 1;
};

struct Chebyshev {
    int m = 10;
    double alpha = 3.0;
    double lambda_max = 0.0;  ///< from power_method; must be > 0
};

/** Two-layer linear convolution, channels 1 -> 8 -> 1, 3x3 kernels, no bias
 * and no activation. Kernels reuse Stencil3x3 so each layer is a plain
 * stencil application with zero padding. */
struct LearnedConv {
    static constexpr int kPlanes = 8;
    std::array<Stencil3x3, kPlanes> k1{};
    std::array<Stencil3x3, kPlanes> k2{};
};

using SmootherSpec = std::variant<WeightedJacobi, Chebyshev, LearnedConv>;

/** u <- u + (omega / s_center) (f - A u), applied `sweeps` times. */
inline Grid jacobi_sweep(const Stencil3x3& s, Grid u, const Grid& f, double omega, int sweeps) {
    if (s.center() == 0.0)
        throw std::invalid_argument("jacobi_sweep: stencil center must be nonzero");
    if (sweeps < 1) throw std::invalid_argument("jacobi_sweep: sweeps must be >= 1");
    check_same_shape(u, f, "jacobi_sweep");
    const double scale = omega / s.center();
    for (int k = 0; k < sweeps; ++k) {
        Grid au = stencil_apply(s, u);
        for (std::size_t t = 0; t < u.size(); ++t) u.v[t] += scale * (f.v[t] - au.v[t]);
    }
    return u;
}

struct PowerMethodResult {
    double lambda_max = 0.0;
    bool converged = false;
    int iterations = 0;
};

/** Rayleigh-quotient power iteration on the stencil operator for an n-grid,
 * started from a seeded random field. Stops when the quotient's relative
 * change drops below tol; if maxit is exhausted first the best estimate is
 * returned with converged = false. */
inline PowerMethodResult power_method(const Stencil3x3& s, int n, double tol = 1e-6,
                                      int maxit = 1000, std::uint64_t seed = 0x9E3779B97F4A7C15ULL) {
    PowerMethodResult res;
    Grid v = sample_rhs(n, seed);
    double nv = norm2(v);
    if (nv == 0.0) return res;
    for (double& x : v.v) x /= nv;

    double lambda_prev = 0.0;
    for (int it = 1; it <= maxit; ++it) {
        Grid w = stencil_apply(s, v);
        const double lambda = dot(v, w);
        res.lambda_max = lambda;
        res.iterations = it;
        if (it > 1 && std::abs(lambda - lambda_prev) <= tol * std::abs(lambda)) {
            res.converged = true;
            return res;
        }
        lambda_prev = lambda;
        const double nw = norm2(w);
        if (nw == 0.0) {  // v in the null space; the zero operator case
            res.lambda_max = 0.0;
            res.converged = true;
            return res;
        }
        for (std::size_t t = 0; t < w.size(); ++t) v.v[t] = w.v[t] / nw;
    }
    return res;
}

/** Richardson step sizes from the roots of the m-th Chebyshev polynomial on
 * [lambda_max/alpha, lambda_max]:
 *   tau_k = 2 / (lambda_max + lambda_min + (lambda_max - lambda_min) x_k),
 *   x_k = cos(pi (2k+1) / (2m)). */
inline std::vector<double> chebyshev_taus(double lambda_max, double alpha, int m) {
    if (!(lambda_max > 0.0))
        throw std::invalid_argument("chebyshev_taus: lambda_max must be > 0");
    if (!(alpha > 1.0)) throw std::invalid_argument("chebyshev_taus: alpha must be > 1");
    if (m < 1) throw std::invalid_argument("chebyshev_taus: m must be >= 1");
    const double lambda_min = lambda_max / alpha;
    std::vector<double> taus(m);
    for (int k = 0; k < m; ++k) {
        const double xk = std::cos(std::numbers::pi * (2 * k + 1) / (2.0 * m));
        taus[k] = 2.0 / (lambda_max + lambda_min + (lambda_max - lambda_min) * xk);
    }
    return taus;
}

/** Varying-parameter Richardson sweep u <- u + tau_k (f - A u), k in order. */
inline Grid chebyshev_sweep(const Stencil3x3& s, Grid u, const Grid& f,
                            const std::vector<double>& taus) {
    if (taus.empty()) throw std::invalid_argument("chebyshev_sweep: taus must be nonempty");
    check_same_shape(u, f, "chebyshev_sweep");
    for (const double tau : taus) {
        Grid au = stencil_apply(s, u);
        for (std::size_t t = 0; t < u.size(); ++t) u.v[t] += tau * (f.v[t] - au.v[t]);
    }
    return u;
}

/** Correction B r of the learned smoother: second-layer convolution of the
 * first-layer convolution of r, summing the 8 intermediate planes. Linear in
 * r, so the smoother u + B(f - A u) keeps the exact solution fixed. */
inline Grid learned_conv_apply(const LearnedConv& spec, const Grid& r) {
    Grid out(r.n);
    for (int p = 0; p < LearnedConv::kPlanes; ++p) {
        Grid z = stencil_apply(spec.k1[p], r);
        out += stencil_apply(spec.k2[p], z);
    }
    return out;
}

/** One application of the smoother Phi(u, f). */
inline Grid apply_smoother(const Stencil3x3& s, const SmootherSpec& spec, const Grid& u,
                           const Grid& f) {
    return std::visit(
        [&](const auto& sm) -> Grid {
            using T = std::decay_t<decltype(sm)>;
            if constexpr (std::is_same_v<T, WeightedJacobi>) {
                return jacobi_sweep(s, u, f, sm.omega, sm.sweeps);
            } else if constexpr (std::is_same_v<T, Chebyshev>) {
                return chebyshev_sweep(s, u, f, chebyshev_taus(sm.lambda_max, sm.alpha, sm.m));
            } else {
                Grid r = f - stencil_apply(s, u);
                Grid corr = learned_conv_apply(sm, r);
                return u + corr;
            }
        },
        spec);
}

/** Number of operator applications (A-products) one smoother call costs;
 * used for the equal-cost iteration accounting of solver traces. */
inline int smoother_matvecs(const SmootherSpec& spec) {
    return std::visit(
        [](const auto& sm) -> int {
            using T = std::decay_t<decltype(sm)>;
            if constexpr (std::is_same_v<T, WeightedJacobi>) {
                return sm.sweeps;
            } else if constexpr (std::is_same_v<T, Chebyshev>) {
                return sm.m;
            } else {
                return 1;
            }
        },
        spec);
}

inline void validate_smoother(const Stencil3x3& s, const SmootherSpec& spec) {
    std::visit(
        [&](const auto& sm) {
            using T = std::decay_t<decltype(sm)>;
            if constexpr (std::is_same_v<T, WeightedJacobi>) {
                if (s.center() == 0.0)
                    throw std::invalid_argument("smoother: Jacobi needs a nonzero stencil center");
                if (!(sm.omega > 0.0 && sm.omega <= 1.0))
                    throw std::invalid_argument("smoother: omega must be in (0, 1]");
                if (sm.sweeps < 1) throw std::invalid_argument("smoother: sweeps must be >= 1");
            } else if constexpr (std::is_same_v<T, Chebyshev>) {
                if (!(sm.lambda_max > 0.0))
                    throw std::invalid_argument("smoother: Chebyshev needs lambda_max > 0");
                if (!(sm.alpha > 1.0))
                    throw std::invalid_argument("smoother: Chebyshev needs alpha > 1");
                if (sm.m < 1) throw std::invalid_argument("smoother: Chebyshev needs m >= 1");
            }
        },
        spec);
}

/** Chebyshev spec with lambda_max filled in by the power method on (s, n). */
inline Chebyshev make_chebyshev(const Stencil3x3& s, int n, int m = 10, double alpha = 3.0,
                                double tol = 1e-6, int maxit = 1000) {
    Chebyshev cheb;
    cheb.m = m;
    cheb.alpha = alpha;
    cheb.lambda_max = power_method(s, n, tol, maxit).lambda_max;
    return cheb;
}

}  // namespace fns

#endif  // FNS_SMOOTHERS_HPP
