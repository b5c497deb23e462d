#ifndef FNS_SPECTRAL_HPP
#define FNS_SPECTRAL_HPP

// Frequency-space error correction and the composed solver iteration: smooth,
// form the residual, multiply its FFT by a per-bin filter, transform back and
// add. Also the sine-transform direct solver that serves as the analytic
// reference for the Poisson and Helmholtz systems.

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

#include "fns/grid.hpp"
#include "fns/smoothers.hpp"

namespace fns {

/** One complex coefficient per 2-D FFT bin of the interior grid, multiplied
 * into the residual spectrum (Hadamard product). Bins are stored row-major in
 * standard FFT order: index k along each axis is frequency k for
 * k <= (n-1)/2 and k-(n-1) above. */
struct SpectralFilter {
    int n = 2;
    std::vector<std::complex<double>> c;

    SpectralFilter() : c(1) {}
    explicit SpectralFilter(int n_) : n(n_) {
        if (n < 2) throw std::invalid_argument("SpectralFilter: n must be >= 2");
        c.assign(static_cast<std::size_t>(n - 1) * (n - 1), {0.0, 0.0});
    }
    static SpectralFilter zeros(int n) { return SpectralFilter(n); }

    std::size_t size() const { return c.size(); }
};

/** Real diagonal filter in the sine basis; the test-oracle counterpart of
 * SpectralFilter for operators the DST diagonalizes exactly. */
struct SineFilter {
    int n = 2;
    std::vector<double> c;

    SineFilter() : c(1, 0.0) {}
    explicit SineFilter(int n_) : n(n_) {
        if (n < 2) throw std::invalid_argument("SineFilter: n must be >= 2");
        c.assign(static_cast<std::size_t>(n - 1) * (n - 1), 0.0);
    }
};

// ---------------------------------------------------------------------------
// FFT plumbing. Convention: unnormalized forward transform, inverse carries
// the 1/N factor, bins in standard FFT order.

/** Unnormalized forward 2-D DFT. */
inline ComplexGrid fft2(const ComplexGrid& g) {
    ComplexGrid out(g.n);
    detail::fft_2d(g.v.data(), out.v.data(), g.rows(), g.cols(), /*backward=*/false);
    return out;
}

/** Inverse 2-D DFT including the 1/N normalization. */
inline ComplexGrid ifft2(const ComplexGrid& g) {
    ComplexGrid out(g.n);
    detail::fft_2d(g.v.data(), out.v.data(), g.rows(), g.cols(), /*backward=*/true);
    const double scale = 1.0 / static_cast<double>(g.size());
    for (auto& z : out.v) z *= scale;
    return out;
}

inline ComplexGrid fft2_of_real(const Grid& g) {
    ComplexGrid c(g.n);
    for (std::size_t k = 0; k < g.size(); ++k) c.v[k] = {g.v[k], 0.0};
    return fft2(c);
}

inline Grid real_part(const ComplexGrid& g) {
    Grid out(g.n);
    for (std::size_t k = 0; k < g.size(); ++k) out.v[k] = g.v[k].real();
    return out;
}

// ---------------------------------------------------------------------------
// Operations

/** e = Re(IFFT2(FFT2(r) o filter)): the frequency-space residual correction.
 * The result is projected onto its real part; the filter itself may be any
 * complex array. O(N log N). */
inline Grid frequency_correct(const Grid& r, const SpectralFilter& filt) {
    if (r.n != filt.n) throw std::invalid_argument("frequency_correct: shape mismatch");
    ComplexGrid rhat = fft2_of_real(r);
    for (std::size_t k = 0; k < rhat.size(); ++k) rhat.v[k] *= filt.c[k];
    return real_part(ifft2(rhat));
}

/** Sine-basis analogue: e = idst2(dst2(r) o filter). Exact inverse of any
 * DST-diagonalized operator when the filter holds reciprocal eigenvalues. */
inline Grid sine_correct(const Grid& r, const SineFilter& filt) {
    if (r.n != filt.n) throw std::invalid_argument("sine_correct: shape mismatch");
    Grid rhat = dst2(r);
    for (std::size_t k = 0; k < rhat.size(); ++k) rhat.v[k] *= filt.c[k];
    return idst2(rhat);
}

/** Eigenvalue of the O(1)-scale five-point Poisson stencil on the sine mode
 * (p, q), p,q in 1..n-1: 4 - 2cos(p pi h) - 2cos(q pi h). */
inline double poisson_eigenvalue(int p, int q, int n) {
    const double h = 1.0 / n;
    return 4.0 - 2.0 * std::cos(p * std::numbers::pi * h) -
           2.0 * std::cos(q * std::numbers::pi * h);
}

/** Reciprocal-eigenvalue sine filter of the Poisson stencil. */
inline SineFilter poisson_inverse_sine_filter(int n) {
    SineFilter filt(n);
    for (int q = 1; q <= n - 1; ++q)
        for (int p = 1; p <= n - 1; ++p)
            filt.c[static_cast<std::size_t>(q - 1) * (n - 1) + (p - 1)] =
                1.0 / poisson_eigenvalue(p, q, n);
    return filt;
}

/** Reciprocal-eigenvalue sine filter of the 1/h^2-scale Helmholtz stencil;
 * throws if some mode's eigenvalue vanishes (singular operator). */
inline SineFilter helmholtz_inverse_sine_filter(double kappa, int n) {
    SineFilter filt(n);
    const double h = 1.0 / n;
    const double k2h2 = kappa * kappa * h * h;
    for (int q = 1; q <= n - 1; ++q) {
        for (int p = 1; p <= n - 1; ++p) {
            const double lambda = (poisson_eigenvalue(p, q, n) - k2h2) / (h * h);
            if (lambda == 0.0)
                throw std::runtime_error("helmholtz_inverse_sine_filter: singular mode");
            filt.c[static_cast<std::size_t>(q - 1) * (n - 1) + (p - 1)] = 1.0 / lambda;
        }
    }
    return filt;
}

/** Direct solve of the O(1)-scale Poisson system by eigen-expansion: expand f
 * in sine modes, divide by the eigenvalues, recombine. O(N log N). */
inline Grid fast_poisson_solve(const Grid& f) {
    return sine_correct(f, poisson_inverse_sine_filter(f.n));
}

// ---------------------------------------------------------------------------
// Composed iteration

/** Relative-residual history of an iterative solve. residuals[k] is
 * ||f - A u^k|| / ||f||; matvecs[k] is the cumulative number of operator
 * applications spent up to that point. */
struct IterationTrace {
    std::vector<double> residuals;
    std::vector<long long> matvecs;
    bool converged = false;
    bool diverged = false;
    int iterations = 0;
};

/** Residual growth beyond this ratio aborts an iteration as divergent. */
inline constexpr double kDivergenceLimit = 1e8;

/** One composed iteration with an arbitrary linear corrector C:
 * v = Phi(u); r = f - A v; u' = v + C(r). */
template <class Corrector>
Grid fns_step_with(const Stencil3x3& s, const SmootherSpec& smoother, Corrector&& correct,
                   const Grid& u, const Grid& f) {
    Grid v = apply_smoother(s, smoother, u, f);
    Grid r = f - stencil_apply(s, v);
    v += correct(r);
    return v;
}

/** One full solver iteration with the FFT-space filter. */
inline Grid fns_step(const Stencil3x3& s, const SmootherSpec& smoother,
                     const SpectralFilter& filt, const Grid& u, const Grid& f) {
    return fns_step_with(
        s, smoother, [&](const Grid& r) { return frequency_correct(r, filt); }, u, f);
}

template <class Corrector>
std::pair<Grid, IterationTrace> fns_solve_with(const Stencil3x3& s, const SmootherSpec& smoother,
                                               Corrector&& correct, const Grid& f, double tol,
                                               int maxit) {
    if (!(tol > 0.0)) throw std::invalid_argument("fns_solve: tol must be > 0");
    if (maxit < 1) throw std::invalid_argument("fns_solve: maxit must be >= 1");

    IterationTrace trace;
    Grid u(f.n);
    const double nf = norm2(f);
    if (nf == 0.0) {
        trace.residuals.push_back(0.0);
        trace.matvecs.push_back(0);
        trace.converged = true;
        return {std::move(u), std::move(trace)};
    }

    const long long step_cost = smoother_matvecs(smoother) + 2;  // correction + trace residuals
    double res = 1.0;
    long long mv = 0;
    trace.residuals.push_back(res);
    trace.matvecs.push_back(mv);

    while (res > tol && trace.iterations < maxit) {
        u = fns_step_with(s, smoother, correct, u, f);
        res = norm2(f - stencil_apply(s, u)) / nf;
        mv += step_cost;
        ++trace.iterations;
        trace.residuals.push_back(res);
        trace.matvecs.push_back(mv);
        if (!std::isfinite(res) || res > kDivergenceLimit) {
            trace.diverged = true;
            break;
        }
    }
    trace.converged = !trace.diverged && res <= tol;
    return {std::move(u), std::move(trace)};
}

/** Iterates fns_step from u = 0 until ||f - A u|| / ||f|| <= tol or maxit
 * steps; the trace records the relative residual after every step. */
inline std::pair<Grid, IterationTrace> fns_solve(const Stencil3x3& s, const SmootherSpec& smoother,
                                                 const SpectralFilter& filt, const Grid& f,
                                                 double tol, int maxit) {
    return fns_solve_with(
        s, smoother, [&](const Grid& r) { return frequency_correct(r, filt); }, f, tol, maxit);
}

/** fns_solve on the sine-basis corrector (oracle path). */
inline std::pair<Grid, IterationTrace> fns_solve(const Stencil3x3& s, const SmootherSpec& smoother,
                                                 const SineFilter& filt, const Grid& f, double tol,
                                                 int maxit) {
    return fns_solve_with(
        s, smoother, [&](const Grid& r) { return sine_correct(r, filt); }, f, tol, maxit);
}

/** Smoother-only stationary solve (no frequency correction); one trace entry
 * per outer step, smoother_matvecs + 1 operator applications each. */
inline std::pair<Grid, IterationTrace> stationary_solve(const Stencil3x3& s,
                                                        const SmootherSpec& smoother,
                                                        const Grid& f, double tol, int maxit) {
    if (!(tol > 0.0)) throw std::invalid_argument("stationary_solve: tol must be > 0");
    if (maxit < 1) throw std::invalid_argument("stationary_solve: maxit must be >= 1");

    IterationTrace trace;
    Grid u(f.n);
    const double nf = norm2(f);
    if (nf == 0.0) {
        trace.residuals.push_back(0.0);
        trace.matvecs.push_back(0);
        trace.converged = true;
        return {std::move(u), std::move(trace)};
    }

    const long long step_cost = smoother_matvecs(smoother) + 1;
    double res = 1.0;
    long long mv = 0;
    trace.residuals.push_back(res);
    trace.matvecs.push_back(mv);

    while (res > tol && trace.iterations < maxit) {
        u = apply_smoother(s, smoother, u, f);
        res = norm2(f - stencil_apply(s, u)) / nf;
        mv += step_cost;
        ++trace.iterations;
        trace.residuals.push_back(res);
        trace.matvecs.push_back(mv);
        if (!std::isfinite(res) || res > kDivergenceLimit) {
            trace.diverged = true;
            break;
        }
    }
    trace.converged = !trace.diverged && res <= tol;
    return {std::move(u), std::move(trace)};
}

}  // namespace fns

#endif  // FNS_SPECTRAL_HPP
