#ifndef FNS_KRYLOV_HPP
#define FNS_KRYLOV_HPP

// Krylov-subspace baselines: conjugate gradients, restarted GMRES with
// modified Gram-Schmidt and Givens rotations, and BiCGSTAB(l). All solvers
// start from u = 0, stop on the relative residual ||f - A u|| / ||f||, and
// record one trace entry per operator application so that residual histories
// are cost-comparable across methods. The returned trace always ends with a
// freshly recomputed true residual.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "fns/grid.hpp"
#include "fns/problems.hpp"
#include "fns/spectral.hpp"

namespace fns {

namespace detail {

inline bool trivial_rhs(const Grid& f, Grid& u, IterationTrace& trace) {
    u = Grid(f.n);
    if (norm2(f) == 0.0) {
        trace.residuals.push_back(0.0);
        trace.matvecs.push_back(0);
        trace.converged = true;
        return true;
    }
    return false;
}

}  // namespace detail

/** Conjugate gradients; intended for symmetric stencils. `maxit` caps the
 * number of operator applications. Throws on a zero-curvature direction. */
inline std::pair<Grid, IterationTrace> cg(const Stencil3x3& s, const Grid& f, double tol,
                                          int maxit) {
    if (!(tol > 0.0)) throw std::invalid_argument("cg: tol must be > 0");
    Grid u;
    IterationTrace trace;
    if (detail::trivial_rhs(f, u, trace)) return {std::move(u), std::move(trace)};

    const double nf = norm2(f);
    Grid r = f;
    Grid p = r;
    double rr = dot(r, r);
    double res = 1.0;
    long long mv = 0;
    trace.residuals.push_back(res);
    trace.matvecs.push_back(mv);

    while (res > tol && mv < maxit) {
        Grid w = stencil_apply(s, p);
        ++mv;
        const double pw = dot(p, w);
        if (pw == 0.0 || !std::isfinite(pw))
            throw std::runtime_error("cg: breakdown (zero curvature direction)");
        const double alpha = rr / pw;
        axpy(u, alpha, p);
        axpy(r, -alpha, w);
        const double rr_new = dot(r, r);
        res = std::sqrt(rr_new) / nf;
        trace.residuals.push_back(res);
        trace.matvecs.push_back(mv);
        ++trace.iterations;
        if (!std::isfinite(res) || res > kDivergenceLimit) {
            trace.diverged = true;
            break;
        }
        const double beta = rr_new / rr;
        rr = rr_new;
        for (std::size_t k = 0; k < p.size(); ++k) p.v[k] = r.v[k] + beta * p.v[k];
    }

    const double true_res = norm2(f - stencil_apply(s, u)) / nf;
    ++mv;
    trace.residuals.push_back(true_res);
    trace.matvecs.push_back(mv);
    trace.converged = !trace.diverged && true_res <= tol;
    return {std::move(u), std::move(trace)};
}

/** Restarted GMRES: Arnoldi with modified Gram-Schmidt, Givens-rotation
 * least squares. Within a cycle the recorded residual estimate is
 * non-increasing; the true residual is recomputed at every restart. Happy
 * breakdown ends the cycle and is treated as convergence of the subspace
 * solve. `maxit` caps operator applications. */
inline std::pair<Grid, IterationTrace> gmres(const Stencil3x3& s, const Grid& f, int restart,
                                             double tol, int maxit) {
    if (restart < 1) throw std::invalid_argument("gmres: restart must be >= 1");
    if (!(tol > 0.0)) throw std::invalid_argument("gmres: tol must be > 0");
    Grid u;
    IterationTrace trace;
    if (detail::trivial_rhs(f, u, trace)) return {std::move(u), std::move(trace)};

    const double nf = norm2(f);
    Grid r = f;  // u = 0
    double res = 1.0;
    long long mv = 0;
    trace.residuals.push_back(res);
    trace.matvecs.push_back(mv);

    const int rs = restart;
    std::vector<Grid> basis;
    // Hessenberg column-major: hess[j] holds column j (j+2 entries used).
    std::vector<std::vector<double>> hess(rs);
    std::vector<double> cs(rs), sn(rs), g(rs + 1);

    while (res > tol && mv < maxit && !trace.diverged) {
        const double beta = norm2(r);
        if (beta / nf <= tol) break;
        basis.clear();
        basis.push_back((1.0 / beta) * r);
        for (auto& col : hess) col.assign(rs + 1, 0.0);
        std::fill(g.begin(), g.end(), 0.0);
        g[0] = beta;

        int j = 0;
        bool happy = false;
        for (; j < rs && mv < maxit; ++j) {
            Grid w = stencil_apply(s, basis[j]);
            ++mv;
            for (int i = 0; i <= j; ++i) {
                hess[j][i] = dot(w, basis[i]);
                axpy(w, -hess[j][i], basis[i]);
            }
            const double hnext = norm2(w);
            hess[j][j + 1] = hnext;
            if (hnext > 0.0) basis.push_back((1.0 / hnext) * w);

            // apply accumulated rotations, then eliminate the new entry
            for (int i = 0; i < j; ++i) {
                const double t = cs[i] * hess[j][i] + sn[i] * hess[j][i + 1];
                hess[j][i + 1] = -sn[i] * hess[j][i] + cs[i] * hess[j][i + 1];
                hess[j][i] = t;
            }
            const double denom = std::hypot(hess[j][j], hess[j][j + 1]);
            if (denom == 0.0) {
                cs[j] = 1.0;
                sn[j] = 0.0;
            } else {
                cs[j] = hess[j][j] / denom;
                sn[j] = hess[j][j + 1] / denom;
            }
            hess[j][j] = denom;
            hess[j][j + 1] = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] = cs[j] * g[j];

            res = std::abs(g[j + 1]) / nf;
            trace.residuals.push_back(res);
            trace.matvecs.push_back(mv);
            ++trace.iterations;
            if (hnext == 0.0) {  // happy breakdown: exact solution in the subspace
                happy = true;
                ++j;
                break;
            }
            if (res <= tol) {
                ++j;
                break;
            }
        }

        // back-substitution on the j x j triangle
        std::vector<double> y(j, 0.0);
        for (int i = j - 1; i >= 0; --i) {
            double acc = g[i];
            for (int k2 = i + 1; k2 < j; ++k2) acc -= hess[k2][i] * y[k2];
            y[i] = acc / hess[i][i];
        }
        for (int i = 0; i < j; ++i) axpy(u, y[i], basis[i]);

        r = f - stencil_apply(s, u);
        ++mv;
        res = norm2(r) / nf;
        trace.residuals.push_back(res);
        trace.matvecs.push_back(mv);
        if (!std::isfinite(res) || res > kDivergenceLimit) trace.diverged = true;
        if (happy) break;
    }

    trace.converged = !trace.diverged && res <= tol;
    return {std::move(u), std::move(trace)};
}

/** BiCGSTAB(l) after Sleijpen-Fokkema: cycles of l BiCG steps followed by a
 * degree-l minimal-residual polynomial update. A rho- or gamma-breakdown is
 * retried once with a fresh random shadow residual, then reported as an
 * error. `maxit` caps operator applications. */
inline std::pair<Grid, IterationTrace> bicgstab_l(const Stencil3x3& s, const Grid& f, int ell,
                                                  double tol, int maxit) {
    if (ell < 1) throw std::invalid_argument("bicgstab_l: l must be >= 1");
    if (!(tol > 0.0)) throw std::invalid_argument("bicgstab_l: tol must be > 0");
    Grid u;
    IterationTrace trace;
    if (detail::trivial_rhs(f, u, trace)) return {std::move(u), std::move(trace)};

    const double nf = norm2(f);
    long long mv = 0;
    double res = 1.0;
    trace.residuals.push_back(res);
    trace.matvecs.push_back(mv);

    std::vector<Grid> r(ell + 1, Grid(f.n));
    std::vector<Grid> w(ell + 1, Grid(f.n));
    r[0] = f;
    Grid shadow = r[0];
    double rho0 = 1.0, alpha = 0.0, omega = 1.0;
    bool restarted = false;

    auto record = [&](double value) {
        trace.residuals.push_back(value);
        trace.matvecs.push_back(mv);
        ++trace.iterations;
    };

    std::vector<double> sigma(ell + 1, 0.0), gamma(ell + 1, 0.0), gamma_p(ell + 1, 0.0),
        gamma_pp(ell + 1, 0.0);
    std::vector<std::vector<double>> tau(ell + 1, std::vector<double>(ell + 1, 0.0));

    while (res > tol && mv < maxit && !trace.diverged) {
        rho0 = -omega * rho0;
        bool breakdown = (rho0 == 0.0) || !std::isfinite(rho0);

        for (int j = 0; j < ell && !breakdown; ++j) {
            const double rho1 = dot(r[j], shadow);
            if (rho1 == 0.0 || !std::isfinite(rho1)) {
                breakdown = true;
                break;
            }
            const double beta = alpha * rho1 / rho0;
            rho0 = rho1;
            for (int i = 0; i <= j; ++i)
                for (std::size_t k = 0; k < w[i].size(); ++k)
                    w[i].v[k] = r[i].v[k] - beta * w[i].v[k];
            w[j + 1] = stencil_apply(s, w[j]);
            ++mv;
            record(res);
            const double gscal = dot(w[j + 1], shadow);
            if (gscal == 0.0 || !std::isfinite(gscal)) {
                breakdown = true;
                break;
            }
            alpha = rho0 / gscal;
            for (int i = 0; i <= j; ++i) axpy(r[i], -alpha, w[i + 1]);
            r[j + 1] = stencil_apply(s, r[j]);
            ++mv;
            axpy(u, alpha, w[0]);
            res = norm2(r[0]) / nf;
            record(res);
            if (!std::isfinite(res) || res > kDivergenceLimit) {
                trace.diverged = true;
                break;
            }
        }
        if (trace.diverged) break;

        if (breakdown) {
            if (restarted) throw std::runtime_error("bicgstab_l: breakdown");
            restarted = true;
            shadow = sample_rhs(f.n, 0xB1C657ABULL);
            r[0] = f - stencil_apply(s, u);
            ++mv;
            for (int i = 0; i <= ell; ++i) w[i] = Grid(f.n);
            rho0 = 1.0;
            alpha = 0.0;
            omega = 1.0;
            res = norm2(r[0]) / nf;
            record(res);
            continue;
        }

        // minimal-residual polynomial on r_1..r_l (modified Gram-Schmidt)
        for (int j = 1; j <= ell; ++j) {
            for (int i = 1; i < j; ++i) {
                tau[i][j] = sigma[i] != 0.0 ? dot(r[j], r[i]) / sigma[i] : 0.0;
                axpy(r[j], -tau[i][j], r[i]);
            }
            sigma[j] = dot(r[j], r[j]);
            gamma_p[j] = sigma[j] != 0.0 ? dot(r[0], r[j]) / sigma[j] : 0.0;
        }
        gamma[ell] = gamma_p[ell];
        omega = gamma[ell];
        for (int j = ell - 1; j >= 1; --j) {
            double acc = gamma_p[j];
            for (int i = j + 1; i <= ell; ++i) acc -= tau[j][i] * gamma[i];
            gamma[j] = acc;
        }
        for (int j = 1; j < ell; ++j) {
            double acc = gamma[j + 1];
            for (int i = j + 1; i < ell; ++i) acc += tau[j][i] * gamma[i + 1];
            gamma_pp[j] = acc;
        }

        axpy(u, gamma[1], r[0]);
        axpy(r[0], -gamma_p[ell], r[ell]);
        axpy(w[0], -gamma[ell], w[ell]);
        for (int j = 1; j < ell; ++j) {
            axpy(w[0], -gamma[j], w[j]);
            axpy(u, gamma_pp[j], r[j]);
            axpy(r[0], -gamma_p[j], r[j]);
        }
        res = norm2(r[0]) / nf;
        record(res);
        if (!std::isfinite(res) || res > kDivergenceLimit) trace.diverged = true;
    }

    const double true_res = norm2(f - stencil_apply(s, u)) / nf;
    ++mv;
    trace.residuals.push_back(true_res);
    trace.matvecs.push_back(mv);
    trace.converged = !trace.diverged && true_res <= tol;
    return {std::move(u), std::move(trace)};
}

}  // namespace fns

#endif  // FNS_KRYLOV_HPP
