#ifndef FNS_FFT_HPP
#define FNS_FFT_HPP

// Thin wrapper around FFTW for the two transforms this project needs: the
// 2-D type-I discrete sine transform (RODFT00) and the 2-D complex DFT.
// Plans are cached per thread together with their I/O buffers; FFTW plan
// creation/destruction is serialized through a global mutex as FFTW's
// threading rules require, while execution stays lock-free.

#include <algorithm>
#include <complex>
#include <cstdint>
#include <cstring>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <unordered_map>

#include <fftw3.h>

namespace fns::detail {

inline std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

enum class TransformKind : int { Dst1 = 0, FftForward = 1, FftBackward = 2 };

struct CachedPlan {
    fftw_plan plan = nullptr;
    double* rin = nullptr;
    double* rout = nullptr;
    fftw_complex* cin = nullptr;
    fftw_complex* cout = nullptr;

    CachedPlan() = default;
    CachedPlan(const CachedPlan&) = delete;
    CachedPlan& operator=(const CachedPlan&) = delete;

    ~CachedPlan() {
        std::lock_guard<std::mutex> lock(planner_mutex());
        if (plan != nullptr) fftw_destroy_plan(plan);
        if (rin != nullptr) fftw_free(rin);
        if (rout != nullptr) fftw_free(rout);
        if (cin != nullptr) fftw_free(cin);
        if (cout != nullptr) fftw_free(cout);
    }
};

class PlanCache {
  public:
    CachedPlan& get(int rows, int cols, TransformKind kind) {
        const std::uint64_t key = (static_cast<std::uint64_t>(rows) << 32) |
                                  (static_cast<std::uint64_t>(cols) << 2) |
                                  static_cast<std::uint64_t>(kind);
        auto it = plans_.find(key);
        if (it != plans_.end()) return *it->second;

        auto entry = std::make_unique<CachedPlan>();
        const std::size_t nn = static_cast<std::size_t>(rows) * cols;
        {
            // FFTW_ESTIMATE keeps planning cheap and, unlike MEASURE, makes
            // the chosen algorithm independent of runtime timings.
            std::lock_guard<std::mutex> lock(planner_mutex());
            if (kind == TransformKind::Dst1) {
                entry->rin = fftw_alloc_real(nn);
                entry->rout = fftw_alloc_real(nn);
                entry->plan = fftw_plan_r2r_2d(rows, cols, entry->rin, entry->rout,
                                               FFTW_RODFT00, FFTW_RODFT00, FFTW_ESTIMATE);
            } else {
                entry->cin = fftw_alloc_complex(nn);
                entry->cout = fftw_alloc_complex(nn);
                const int sign =
                    kind == TransformKind::FftForward ? FFTW_FORWARD : FFTW_BACKWARD;
                entry->plan =
                    fftw_plan_dft_2d(rows, cols, entry->cin, entry->cout, sign, FFTW_ESTIMATE);
            }
        }
        if (entry->plan == nullptr) throw std::runtime_error("fft: FFTW plan creation failed");
        CachedPlan& ref = *entry;
        plans_.emplace(key, std::move(entry));
        return ref;
    }

  private:
    std::unordered_map<std::uint64_t, std::unique_ptr<CachedPlan>> plans_;
};

inline PlanCache& plan_cache() {
    thread_local PlanCache cache;
    return cache;
}

/** Unnormalized 2-D DST-I (FFTW RODFT00) of a rows x cols array. */
inline void dst1_2d(const double* in, double* out, int rows, int cols) {
    CachedPlan& p = plan_cache().get(rows, cols, TransformKind::Dst1);
    const std::size_t nn = static_cast<std::size_t>(rows) * cols;
    std::copy(in, in + nn, p.rin);
    fftw_execute(p.plan);
    std::copy(p.rout, p.rout + nn, out);
}

/** Unnormalized 2-D complex DFT; `backward` selects the +i exponent sign. */
inline void fft_2d(const std::complex<double>* in, std::complex<double>* out, int rows, int cols,
                   bool backward) {
    CachedPlan& p = plan_cache().get(
        rows, cols, backward ? TransformKind::FftBackward : TransformKind::FftForward);
    const std::size_t nn = static_cast<std::size_t>(rows) * cols;
    // std::complex<double> is layout-compatible with fftw_complex
    std::memcpy(static_cast<void*>(p.cin), static_cast<const void*>(in),
                nn * sizeof(fftw_complex));
    fftw_execute(p.plan);
    std::memcpy(static_cast<void*>(out), static_cast<const void*>(p.cout),
                nn * sizeof(fftw_complex));
}

}  // namespace fns::detail

#endif  // FNS_FFT_HPP
