#ifndef FNS_LFA_HPP
#define FNS_LFA_HPP

// Local Fourier analysis of stencil-based stationary iterations: symbols,
// per-frequency convergence factors and region-restricted maxima over the
// frequency square [-pi, pi)^2.

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <variant>
#include <vector>

#include "fns/grid.hpp"
#include "fns/smoothers.hpp"

namespace fns {

/** One frequency sample of a convergence-factor map. */
struct FreqSample {
    double theta1 = 0.0;
    double theta2 = 0.0;
    double value = 0.0;
};

/** Symbol of the stencil operator: A_hat(theta) = sum s(a,b) e^{i(a t1 + b t2)}. */
inline std::complex<double> stencil_symbol(const Stencil3x3& s, double theta1, double theta2) {
    std::complex<double> acc{0.0, 0.0};
    for (int b = -1; b <= 1; ++b)
        for (int a = -1; a <= 1; ++a)
            acc += s.at(a, b) * std::exp(std::complex<double>(0.0, a * theta1 + b * theta2));
    return acc;
}

/** Per-frequency convergence factor of `sweeps` weighted-Jacobi sweeps:
 * |1 - omega A_hat(theta) / s_center|^sweeps. */
inline double jacobi_factor(const Stencil3x3& s, double omega, double theta1, double theta2,
                            int sweeps = 1) {
    if (s.center() == 0.0)
        throw std::invalid_argument("jacobi_factor: stencil center must be nonzero");
    const double one = std::abs(1.0 - omega * stencil_symbol(s, theta1, theta2) / s.center());
    return sweeps == 1 ? one : std::pow(one, sweeps);
}

/** Per-frequency convergence factor of one Chebyshev semi-iteration sweep:
 * prod_k |1 - tau_k A_hat(theta)|. */
inline double chebyshev_factor(const Stencil3x3& s, const std::vector<double>& taus, double theta1,
                               double theta2) {
    if (taus.empty()) throw std::invalid_argument("chebyshev_factor: taus must be nonempty");
    const std::complex<double> sym = stencil_symbol(s, theta1, theta2);
    double acc = 1.0;
    for (const double tau : taus) acc *= std::abs(1.0 - tau * sym);
    return acc;
}

inline bool in_low_frequency_region(double theta1, double theta2) {
    const double half = std::numbers::pi / 2.0;
    return theta1 >= -half && theta1 < half && theta2 >= -half && theta2 < half;
}

/** Convergence factors sampled on a uniform resolution x resolution grid over
 * [-pi, pi)^2, theta(k) = -pi + 2 pi k / resolution, stored row-major with
 * theta2 as the row index. mu_low / mu_high are the sampled maxima over the
 * low- and high-frequency regions (grid maxima, not true suprema; a
 * resolution divisible by 4 places samples exactly on the region boundary). */
struct FactorMap {
    int resolution = 0;
    std::vector<double> value;
    double mu_low = 0.0;
    double mu_high = 0.0;
    double fraction_above_one = 0.0;

    double theta_at(int k) const {
        return -std::numbers::pi + 2.0 * std::numbers::pi * k / resolution;
    }
    double at(int i1, int i2) const {
        return value[static_cast<std::size_t>(i2) * resolution + i1];
    }
};

struct JacobiFactorParams {
    double omega = 2.0 / 3.0;
    int sweeps = 1;
};

struct ChebyshevFactorParams {
    std::vector<double> taus;
};

using FactorParams = std::variant<JacobiFactorParams, ChebyshevFactorParams>;

inline FactorMap factor_map(const Stencil3x3& s, const FactorParams& params,
                            int resolution = 128) {
    if (resolution < 8) throw std::invalid_argument("factor_map: resolution must be >= 8");
    FactorMap map;
    map.resolution = resolution;
    map.value.resize(static_cast<std::size_t>(resolution) * resolution);

    std::size_t above_one = 0;
    for (int i2 = 0; i2 < resolution; ++i2) {
        const double t2 = map.theta_at(i2);
        for (int i1 = 0; i1 < resolution; ++i1) {
            const double t1 = map.theta_at(i1);
            const double mu = std::visit(
                [&](const auto& p) -> double {
                    using T = std::decay_t<decltype(p)>;
                    if constexpr (std::is_same_v<T, JacobiFactorParams>) {
                        return jacobi_factor(s, p.omega, t1, t2, p.sweeps);
                    } else {
                        return chebyshev_factor(s, p.taus, t1, t2);
                    }
                },
                params);
            map.value[static_cast<std::size_t>(i2) * resolution + i1] = mu;
            if (mu > 1.0) ++above_one;
            if (in_low_frequency_region(t1, t2)) {
                if (mu > map.mu_low) map.mu_low = mu;
            } else {
                if (mu > map.mu_high) map.mu_high = mu;
            }
        }
    }
    map.fraction_above_one = static_cast<double>(above_one) / static_cast<double>(map.value.size());
    return map;
}

}  // namespace fns

#endif  // FNS_LFA_HPP
