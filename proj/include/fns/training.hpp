#ifndef FNS_TRAINING_HPP
#define FNS_TRAINING_HPP

// Offline training of the spectral filter (and optionally the learned
// convolution smoother) by Adam on the relative-residual loss of the K-step
// unrolled iteration. Every forward operation is linear, so the reverse-mode
// gradient is assembled from hand-written adjoints: transposed stencils for
// operator products, conjugate-scaled transforms for the FFTs, and shifted
// correlations for the convolution kernels.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fns/grid.hpp"
#include "fns/parallel.hpp"
#include "fns/problems.hpp"
#include "fns/smoothers.hpp"
#include "fns/spectral.hpp"

namespace fns {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

}  // namespace detail

/** Deterministic seed stream: chained splitmix64 over (base, a, b). */
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
    return detail::splitmix64(detail::splitmix64(detail::splitmix64(base) + a) + b);
}

/** Number of unrolled steps per epoch: fixed K, or a linear integer ramp
 * from `start` to `end` across the epochs. */
struct KSchedule {
    int start = 10;
    int end = 10;

    static KSchedule fixed(int k) { return {k, k}; }
    static KSchedule ramp(int a, int b) { return {a, b}; }
    bool is_fixed() const { return start == end; }

    int at(int epoch, int epochs) const {
        if (epochs <= 1 || start == end) return start;
        const double t = static_cast<double>(epoch) / (epochs - 1);
        return start + static_cast<int>(std::lround(t * (end - start)));
    }

    void validate() const {
        if (start < 1 || end < 1) throw std::invalid_argument("KSchedule: K must be >= 1");
    }
};

struct TrainConfig {
    KSchedule k_schedule = KSchedule::fixed(10);
    int epochs = 200;
    int batch_size = 100;
    double learning_rate = 1e-4;
    std::optional<double> grad_clip;  ///< max global gradient norm, if set
    double init_scale = 1e-2;         ///< uniform init half-width for conv kernels
    std::uint64_t seed = 0;
    bool train_smoother = false;  ///< jointly update LearnedConv kernels

    void validate() const {
        k_schedule.validate();
        if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
        if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
        if (!(learning_rate >= 0.0))
            throw std::invalid_argument("TrainConfig: learning_rate must be >= 0");
        if (grad_clip && !(*grad_clip > 0.0))
            throw std::invalid_argument("TrainConfig: grad_clip must be > 0");
        if (!(init_scale > 0.0)) throw std::invalid_argument("TrainConfig: init_scale must be > 0");
    }
};

struct EpochLog {
    int epoch = 0;
    int k = 0;
    double loss = 0.0;
};

struct Checkpoint {
    ProblemSpec problem;
    SmootherSpec smoother;
    SpectralFilter filter;
    double final_loss = 0.0;
    int epochs = 0;
    std::uint64_t seed = 0;
};

struct TrainResult {
    Checkpoint checkpoint;
    std::vector<EpochLog> history;
};

// ---------------------------------------------------------------------------
// Loss and gradient

namespace detail {

/** sum_{i,j} g(i,j) * x(i+a, j+b) over in-range offsets (the kernel-entry
 * adjoint of a zero-padded 3x3 convolution). */
inline double shifted_dot(const Grid& g, const Grid& x, int a, int b) {
    const int m = g.cols();
    double acc = 0.0;
    const int ilo = std::max(0, -a), ihi = std::min(m, m - a);
    const int jlo = std::max(0, -b), jhi = std::min(m, m - b);
    for (int j = jlo; j < jhi; ++j)
        for (int i = ilo; i < ihi; ++i) acc += g(i, j) * x(i + a, j + b);
    return acc;
}

/** g <- (I - scale * A^T) g */
inline void stationary_adjoint_step(const Stencil3x3& st, double scale, Grid& g) {
    Grid ag = stencil_apply(st, g);
    for (std::size_t k = 0; k < g.size(); ++k) g.v[k] -= scale * ag.v[k];
}

struct KernelGrads {
    std::array<Stencil3x3, LearnedConv::kPlanes> k1{};
    std::array<Stencil3x3, LearnedConv::kPlanes> k2{};
};

struct StepTape {
    ComplexGrid residual_spectrum;  // FFT of the correction residual
    Grid smoother_residual;         // LearnedConv only: f - A u entering the conv
};

/** Forward K-step unroll for one sample; when gradient outputs are non-null
 * the matching reverse sweep accumulates into them. Returns the sample's
 * relative-residual loss term. */
inline double unrolled_loss_sample(const Stencil3x3& s, const SmootherSpec& sm,
                                   const SpectralFilter& filt, const Grid& f, int K,
                                   std::vector<std::complex<double>>* d_filter,
                                   KernelGrads* d_kernels) {
    const double nf = norm2(f);
    if (nf == 0.0) return 0.0;
    const bool want_grad = d_filter != nullptr || d_kernels != nullptr;
    const bool conv = std::holds_alternative<LearnedConv>(sm);
    const std::size_t nn = f.size();
    const double inv_nn = 1.0 / static_cast<double>(nn);
    const Stencil3x3 st = s.transposed();

    std::vector<StepTape> tape;
    if (want_grad) tape.resize(K);

    Grid u(f.n);
    for (int k = 0; k < K; ++k) {
        Grid v = apply_smoother(s, sm, u, f);
        if (want_grad && conv) tape[k].smoother_residual = f - stencil_apply(s, u);
        Grid r = f - stencil_apply(s, v);
        ComplexGrid rhat = fft2_of_real(r);
        ComplexGrid ehat(f.n);
        for (std::size_t t = 0; t < nn; ++t) ehat.v[t] = rhat.v[t] * filt.c[t];
        if (want_grad) tape[k].residual_spectrum = std::move(rhat);
        Grid e = real_part(ifft2(ehat));
        u = std::move(v);
        u += e;
    }

    Grid r_final = f - stencil_apply(s, u);
    const double nr = norm2(r_final);
    const double sample_loss = nr / nf;
    if (!want_grad) return sample_loss;
    if (nr == 0.0) return sample_loss;  // exact minimum: zero gradient

    // d loss / d u^K = -A^T r_K / (||r_K|| ||f||)
    Grid gu = stencil_apply(st, r_final);
    const double scale0 = -1.0 / (nr * nf);
    for (double& x : gu.v) x *= scale0;

    ComplexGrid gehat(f.n);
    ComplexGrid grhat(f.n);
    for (int k = K - 1; k >= 0; --k) {
        // u^{k+1} = v + Re(IFFT(FFT(f - A v) o theta))
        // adjoint of e = Re(IFFT(ehat)): ghat = FFT(gu) / N
        ComplexGrid ge = fft2_of_real(gu);
        for (std::size_t t = 0; t < nn; ++t) gehat.v[t] = ge.v[t] * inv_nn;

        const ComplexGrid& rhat = tape[k].residual_spectrum;
        if (d_filter != nullptr) {
            for (std::size_t t = 0; t < nn; ++t)
                (*d_filter)[t] += gehat.v[t] * std::conj(rhat.v[t]);
        }
        for (std::size_t t = 0; t < nn; ++t) grhat.v[t] = gehat.v[t] * std::conj(filt.c[t]);

        // adjoint of rhat = FFT(r), r real: real part of the raw backward DFT
        ComplexGrid graw(f.n);
        fft_2d(grhat.v.data(), graw.v.data(), f.n - 1, f.n - 1, /*backward=*/true);
        Grid gr = real_part(graw);

        // r = f - A v contributes -A^T gr to the smoother output adjoint
        Grid gv = gu;
        Grid atgr = stencil_apply(st, gr);
        gv -= atgr;

        // backward through the smoother v = Phi(u)
        if (conv) {
            const auto& lc = std::get<LearnedConv>(sm);
            Grid grs(f.n);
            for (int p = 0; p < LearnedConv::kPlanes; ++p) {
                Grid gz = stencil_apply(lc.k2[p].transposed(), gv);
                if (d_kernels != nullptr) {
                    const Grid& rs = tape[k].smoother_residual;
                    Grid z = stencil_apply(lc.k1[p], rs);
                    for (int b = -1; b <= 1; ++b)
                        for (int a = -1; a <= 1; ++a) {
                            d_kernels->k2[p].at(a, b) += shifted_dot(gv, z, a, b);
                            d_kernels->k1[p].at(a, b) += shifted_dot(gz, rs, a, b);
                        }
                }
                grs += stencil_apply(lc.k1[p].transposed(), gz);
            }
            // v = u + B(f - A u): gu = gv - A^T B^T gv
            gu = gv;
            Grid atgrs = stencil_apply(st, grs);
            gu -= atgrs;
        } else if (const auto* wj = std::get_if<WeightedJacobi>(&sm)) {
            gu = std::move(gv);
            const double scale = wj->omega / s.center();
            for (int sweep = 0; sweep < wj->sweeps; ++sweep)
                stationary_adjoint_step(st, scale, gu);
        } else {
            const auto& ch = std::get<Chebyshev>(sm);
            gu = std::move(gv);
            const std::vector<double> taus = chebyshev_taus(ch.lambda_max, ch.alpha, ch.m);
            for (int t = ch.m - 1; t >= 0; --t) stationary_adjoint_step(st, taus[t], gu);
        }
    }
    return sample_loss;
}

}  // namespace detail

/** Relative-residual training loss: sum over the batch of
 * ||f_i - A u_i^K|| / ||f_i|| with u_i^K produced by K unrolled steps from
 * zero. Throws if a sample's residual turns non-finite. */
inline double loss(const Stencil3x3& s, const SmootherSpec& sm, const SpectralFilter& filt,
                   const std::vector<Grid>& batch, int K) {
    if (K < 1) throw std::invalid_argument("loss: K must be >= 1");
    if (batch.empty()) throw std::invalid_argument("loss: batch must be nonempty");
    double acc = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const double li = detail::unrolled_loss_sample(s, sm, filt, batch[i], K, nullptr, nullptr);
        if (!std::isfinite(li))
            throw std::runtime_error("loss: non-finite residual at sample " + std::to_string(i));
        acc += li;
    }
    return acc;
}

struct LossGrad {
    double value = 0.0;
    std::vector<std::complex<double>> d_filter;  ///< dL/dRe + i dL/dIm per bin
    detail::KernelGrads d_kernels;
    bool has_kernel_grads = false;
};

/** Exact reverse-mode gradient of `loss` with respect to the filter bins and
 * (optionally) the LearnedConv kernels. Per-sample passes run in parallel;
 * the reduction is in fixed index order, so results are deterministic. */
inline LossGrad grad_loss(const Stencil3x3& s, const SmootherSpec& sm, const SpectralFilter& filt,
                          const std::vector<Grid>& batch, int K, bool kernel_grads = false) {
    if (K < 1) throw std::invalid_argument("grad_loss: K must be >= 1");
    if (batch.empty()) throw std::invalid_argument("grad_loss: batch must be nonempty");
    if (kernel_grads && !std::holds_alternative<LearnedConv>(sm))
        throw std::invalid_argument("grad_loss: kernel gradients need a LearnedConv smoother");

    const int nb = static_cast<int>(batch.size());
    std::vector<double> values(nb, 0.0);
    std::vector<std::vector<std::complex<double>>> filter_slots(nb);
    std::vector<detail::KernelGrads> kernel_slots(kernel_grads ? nb : 0);

    parallel_for(nb, [&](int i) {
        filter_slots[i].assign(filt.size(), {0.0, 0.0});
        values[i] = detail::unrolled_loss_sample(s, sm, filt, batch[i], K, &filter_slots[i],
                                                 kernel_grads ? &kernel_slots[i] : nullptr);
    });

    LossGrad out;
    out.d_filter.assign(filt.size(), {0.0, 0.0});
    out.has_kernel_grads = kernel_grads;
    for (int i = 0; i < nb; ++i) {
        if (!std::isfinite(values[i]))
            throw std::runtime_error("grad_loss: non-finite residual at sample " +
                                     std::to_string(i));
        out.value += values[i];
        for (std::size_t t = 0; t < out.d_filter.size(); ++t)
            out.d_filter[t] += filter_slots[i][t];
        if (kernel_grads) {
            for (int p = 0; p < LearnedConv::kPlanes; ++p)
                for (int e = 0; e < 9; ++e) {
                    out.d_kernels.k1[p].c[e] += kernel_slots[i].k1[p].c[e];
                    out.d_kernels.k2[p].c[e] += kernel_slots[i].k2[p].c[e];
                }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Optimizer

/** Adam with bias correction (beta1 = 0.9, beta2 = 0.999, eps = 1e-8). */
struct Adam {
    double lr;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::vector<double> m, v;
    long long t = 0;

    Adam(std::size_t size, double lr_) : lr(lr_), m(size, 0.0), v(size, 0.0) {}

    void step(std::vector<double>& params, const std::vector<double>& grad) {
        ++t;
        const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
        const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
        for (std::size_t i = 0; i < params.size(); ++i) {
            m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
            v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
            params[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
        }
    }
};

/** Scales grad down to the target global norm when it exceeds it. */
inline void clip_gradient(std::vector<double>& grad, double max_norm) {
    double nrm = 0.0;
    for (double g : grad) nrm += g * g;
    nrm = std::sqrt(nrm);
    if (nrm > max_norm && nrm > 0.0) {
        const double scale = max_norm / nrm;
        for (double& g : grad) g *= scale;
    }
}

// ---------------------------------------------------------------------------
// Training driver

namespace detail {

inline void pack_params(const SpectralFilter& filt, const LearnedConv* lc,
                        std::vector<double>& flat) {
    flat.clear();
    flat.reserve(2 * filt.size() + (lc != nullptr ? 2 * 9 * LearnedConv::kPlanes : 0));
    for (const auto& z : filt.c) {
        flat.push_back(z.real());
        flat.push_back(z.imag());
    }
    if (lc != nullptr) {
        for (const auto& k : lc->k1)
            for (double x : k.c) flat.push_back(x);
        for (const auto& k : lc->k2)
            for (double x : k.c) flat.push_back(x);
    }
}

inline void unpack_params(const std::vector<double>& flat, SpectralFilter& filt, LearnedConv* lc) {
    std::size_t pos = 0;
    for (auto& z : filt.c) {
        z = {flat[pos], flat[pos + 1]};
        pos += 2;
    }
    if (lc != nullptr) {
        for (auto& k : lc->k1)
            for (double& x : k.c) x = flat[pos++];
        for (auto& k : lc->k2)
            for (double& x : k.c) x = flat[pos++];
    }
}

inline void pack_grad(const LossGrad& g, bool kernels, std::vector<double>& flat) {
    flat.clear();
    flat.reserve(2 * g.d_filter.size() + (kernels ? 2 * 9 * LearnedConv::kPlanes : 0));
    for (const auto& z : g.d_filter) {
        flat.push_back(z.real());
        flat.push_back(z.imag());
    }
    if (kernels) {
        for (const auto& k : g.d_kernels.k1)
            for (double x : k.c) flat.push_back(x);
        for (const auto& k : g.d_kernels.k2)
            for (double x : k.c) flat.push_back(x);
    }
}

}  // namespace detail

/** Trains the spectral filter for one problem: a seeded Gaussian right-hand
 * side dataset, the K-step unrolled loss, and one Adam update per epoch. The
 * filter starts from all-zero bins so epoch 1 sees pure-smoother behavior;
 * with train_smoother set, LearnedConv kernels start from a seeded
 * uniform(-init_scale, init_scale) draw and are updated jointly. */
inline TrainResult train(const ProblemSpec& problem, SmootherSpec smoother,
                         const TrainConfig& config) {
    problem.validate();
    config.validate();
    const Stencil3x3 s = build_stencil(problem);

    if (auto* cheb = std::get_if<Chebyshev>(&smoother)) {
        if (cheb->lambda_max <= 0.0)
            cheb->lambda_max = power_method(s, problem.n).lambda_max;
    }
    const bool train_kernels = config.train_smoother && std::holds_alternative<LearnedConv>(smoother);
    if (train_kernels) {
        auto& lc = std::get<LearnedConv>(smoother);
        std::mt19937_64 rng(derive_seed(config.seed, 0x696E6974ULL, 0));  // "init" stream
        auto uniform = [&rng, &config]() {
            const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
            return config.init_scale * (2.0 * u - 1.0);
        };
        for (auto& k : lc.k1)
            for (double& x : k.c) x = uniform();
        for (auto& k : lc.k2)
            for (double& x : k.c) x = uniform();
    }
    validate_smoother(s, smoother);

    SpectralFilter filt = SpectralFilter::zeros(problem.n);
    LearnedConv* lc = train_kernels ? &std::get<LearnedConv>(smoother) : nullptr;

    std::vector<double> params;
    detail::pack_params(filt, lc, params);
    Adam adam(params.size(), config.learning_rate);

    TrainResult result;
    result.history.reserve(config.epochs);
    // The training set is fixed across epochs (seed stream "data"), matching
    // the fixed right-hand-side dataset protocol; it is regenerated on the
    // fly instead of stored.
    std::vector<Grid> batch(config.batch_size, Grid(problem.n));
    for (int i = 0; i < config.batch_size; ++i)
        batch[i] = sample_rhs(problem.n, derive_seed(config.seed, 0xDA7AULL, i));
    std::vector<double> flat_grad;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const int K = config.k_schedule.at(epoch, config.epochs);
        detail::unpack_params(params, filt, lc);
        LossGrad g;
        try {
            g = grad_loss(s, smoother, filt, batch, K, train_kernels);
        } catch (const std::runtime_error& err) {
            throw std::runtime_error("train: " + std::string(err.what()) + " at epoch " +
                                     std::to_string(epoch));
        }
        if (!std::isfinite(g.value))
            throw std::runtime_error("train: divergent loss at epoch " + std::to_string(epoch));

        detail::pack_grad(g, train_kernels, flat_grad);
        if (config.grad_clip) clip_gradient(flat_grad, *config.grad_clip);
        adam.step(params, flat_grad);
        result.history.push_back({epoch, K, g.value});
    }

    detail::unpack_params(params, filt, lc);
    result.checkpoint.problem = problem;
    result.checkpoint.smoother = smoother;
    result.checkpoint.filter = std::move(filt);
    result.checkpoint.final_loss = result.history.empty() ? 0.0 : result.history.back().loss;
    result.checkpoint.epochs = config.epochs;
    result.checkpoint.seed = config.seed;
    return result;
}

// ---------------------------------------------------------------------------
// Evaluation protocol

struct EvalSummary {
    double mean_iterations = 0.0;
    double std_iterations = 0.0;  ///< population standard deviation
    int nonconverged = 0;         ///< counted at maxit in the mean, per the "-" convention
    int num_rhs = 0;
    double mean_matvecs = 0.0;
    std::vector<int> iterations;
};

/** Runs fns_solve over num_rhs fresh right-hand sides (seed stream derived
 * from `seed`) and reports mean +- population std of the outer iteration
 * counts; non-converged solves enter as maxit. */
inline EvalSummary evaluate(const Checkpoint& ck, int num_rhs, double tol, int maxit,
                            std::uint64_t seed) {
    if (num_rhs < 1) throw std::invalid_argument("evaluate: num_rhs must be >= 1");
    const Stencil3x3 s = build_stencil(ck.problem);

    EvalSummary summary;
    summary.num_rhs = num_rhs;
    summary.iterations.assign(num_rhs, 0);
    std::vector<long long> matvecs(num_rhs, 0);
    std::vector<int> converged(num_rhs, 0);

    parallel_for(num_rhs, [&](int i) {
        const Grid f = sample_rhs(ck.problem.n, derive_seed(seed, 0x65764C00ULL, i));
        auto [u, trace] = fns_solve(s, ck.smoother, ck.filter, f, tol, maxit);
        summary.iterations[i] = trace.converged ? trace.iterations : maxit;
        converged[i] = trace.converged ? 1 : 0;
        matvecs[i] = trace.matvecs.back();
    });

    double mean = 0.0, mv = 0.0;
    for (int i = 0; i < num_rhs; ++i) {
        mean += summary.iterations[i];
        mv += static_cast<double>(matvecs[i]);
        if (converged[i] == 0) ++summary.nonconverged;
    }
    mean /= num_rhs;
    mv /= num_rhs;
    double var = 0.0;
    for (int it : summary.iterations) var += (it - mean) * (it - mean);
    var /= num_rhs;
    summary.mean_iterations = mean;
    summary.std_iterations = std::sqrt(var);
    summary.mean_matvecs = mv;
    return summary;
}

}  // namespace fns

#endif  // FNS_TRAINING_HPP
