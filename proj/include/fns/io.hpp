#ifndef FNS_IO_HPP
#define FNS_IO_HPP

// File formats: CSV exports for grids, traces, loss histories and factor
// maps; 8-bit PGM rendering of factor maps; and the little-endian binary
// checkpoint holding a trained filter with its problem and smoother.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "fns/grid.hpp"
#include "fns/lfa.hpp"
#include "fns/spectral.hpp"
#include "fns/training.hpp"

namespace fns {

/** Shortest round-trippable decimal rendering (17 significant digits). */
inline std::string fmt17(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

namespace detail {

inline std::ofstream open_out(const std::string& path, bool binary = false) {
    std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    return out;
}

inline std::ifstream open_in(const std::string& path, bool binary = false) {
    std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    return in;
}

inline void put_u32(std::ostream& out, std::uint32_t x) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((x >> (8 * i)) & 0xFF);
    out.write(reinterpret_cast<const char*>(b), 4);
}

inline void put_u64(std::ostream& out, std::uint64_t x) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((x >> (8 * i)) & 0xFF);
    out.write(reinterpret_cast<const char*>(b), 8);
}

inline void put_u8(std::ostream& out, std::uint8_t x) {
    out.put(static_cast<char>(x));
}

inline void put_f64(std::ostream& out, double x) {
    std::uint64_t bits;
    std::memcpy(&bits, &x, sizeof(bits));
    put_u64(out, bits);
}

inline std::uint32_t get_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw std::runtime_error("checkpoint: truncated file");
    std::uint32_t x = 0;
    for (int i = 3; i >= 0; --i) x = (x << 8) | b[i];
    return x;
}

inline std::uint64_t get_u64(std::istream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    if (!in) throw std::runtime_error("checkpoint: truncated file");
    std::uint64_t x = 0;
    for (int i = 7; i >= 0; --i) x = (x << 8) | b[i];
    return x;
}

inline std::uint8_t get_u8(std::istream& in) {
    const int c = in.get();
    if (c == EOF) throw std::runtime_error("checkpoint: truncated file");
    return static_cast<std::uint8_t>(c);
}

inline double get_f64(std::istream& in) {
    const std::uint64_t bits = get_u64(in);
    double x;
    std::memcpy(&x, &bits, sizeof(x));
    return x;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// CSV

/** (n-1) rows of (n-1) comma-separated values. */
inline void write_grid_csv(const std::string& path, const Grid& g) {
    auto out = detail::open_out(path);
    for (int j = 0; j < g.rows(); ++j) {
        for (int i = 0; i < g.cols(); ++i) {
            if (i != 0) out << ',';
            out << fmt17(g(i, j));
        }
        out << '\n';
    }
}

/** Columns: step, relative_residual; with matvecs a third cumulative-cost
 * column for equal-cost comparisons across solvers. */
inline void write_trace_csv(const std::string& path, const IterationTrace& trace,
                            bool include_matvecs = false) {
    auto out = detail::open_out(path);
    out << (include_matvecs ? "step,matvecs,relative_residual\n" : "step,relative_residual\n");
    for (std::size_t k = 0; k < trace.residuals.size(); ++k) {
        out << k;
        if (include_matvecs) out << ',' << trace.matvecs[k];
        out << ',' << fmt17(trace.residuals[k]) << '\n';
    }
}

inline void write_loss_csv(const std::string& path, const std::vector<EpochLog>& history) {
    auto out = detail::open_out(path);
    out << "epoch,k,loss\n";
    for (const auto& row : history)
        out << row.epoch << ',' << row.k << ',' << fmt17(row.loss) << '\n';
}

inline void write_factor_map_csv(const std::string& path, const FactorMap& map) {
    auto out = detail::open_out(path);
    for (int i2 = 0; i2 < map.resolution; ++i2) {
        for (int i1 = 0; i1 < map.resolution; ++i1) {
            if (i1 != 0) out << ',';
            out << fmt17(map.at(i1, i2));
        }
        out << '\n';
    }
}

/** 8-bit grayscale PGM: factor 0 maps to black, values clip at 1.25. */
inline void write_factor_map_pgm(const std::string& path, const FactorMap& map) {
    auto out = detail::open_out(path, /*binary=*/true);
    out << "P5\n" << map.resolution << ' ' << map.resolution << "\n255\n";
    std::vector<unsigned char> row(map.resolution);
    for (int i2 = 0; i2 < map.resolution; ++i2) {
        for (int i1 = 0; i1 < map.resolution; ++i1) {
            const double clipped = std::min(map.at(i1, i2), 1.25);
            row[i1] = static_cast<unsigned char>(std::lround(255.0 * clipped / 1.25));
        }
        out.write(reinterpret_cast<const char*>(row.data()), row.size());
    }
}

// ---------------------------------------------------------------------------
// Checkpoint file
//
// Little-endian layout:
//   magic "FNS1" | u32 n | u8 family | f64 xi, theta, epsilon, kappa
//   | u8 smoother tag | smoother parameters as f64
//       tag 0 weighted Jacobi: omega, sweeps
//       tag 1 Chebyshev:       m, alpha, lambda_max
//       tag 2 learned conv:    72 f64 (k1), 72 f64 (k2), kernel entries in
//                              row-major (b, a) order
//   | (n-1)^2 filter bins as interleaved f64 (re, im), FFT order, row-major
//   | u32 metadata length | metadata UTF-8 JSON

inline void write_checkpoint(const std::string& path, const Checkpoint& ck) {
    auto out = detail::open_out(path, /*binary=*/true);
    out.write("FNS1", 4);
    detail::put_u32(out, static_cast<std::uint32_t>(ck.problem.n));
    detail::put_u8(out, static_cast<std::uint8_t>(ck.problem.family));
    detail::put_f64(out, ck.problem.xi);
    detail::put_f64(out, ck.problem.theta);
    detail::put_f64(out, ck.problem.epsilon);
    detail::put_f64(out, ck.problem.kappa);

    std::visit(
        [&](const auto& sm) {
            using T = std::decay_t<decltype(sm)>;
            if constexpr (std::is_same_v<T, WeightedJacobi>) {
                detail::put_u8(out, 0);
                detail::put_f64(out, sm.omega);
                detail::put_f64(out, static_cast<double>(sm.sweeps));
            } else if constexpr (std::is_same_v<T, Chebyshev>) {
                detail::put_u8(out, 1);
                detail::put_f64(out, static_cast<double>(sm.m));
                detail::put_f64(out, sm.alpha);
                detail::put_f64(out, sm.lambda_max);
            } else {
                detail::put_u8(out, 2);
                for (const auto& k : sm.k1)
                    for (double x : k.c) detail::put_f64(out, x);
                for (const auto& k : sm.k2)
                    for (double x : k.c) detail::put_f64(out, x);
            }
        },
        ck.smoother);

    if (ck.filter.n != ck.problem.n)
        throw std::invalid_argument("write_checkpoint: filter shape mismatch");
    for (const auto& z : ck.filter.c) {
        detail::put_f64(out, z.real());
        detail::put_f64(out, z.imag());
    }

    nlohmann::json meta;
    meta["final_loss"] = ck.final_loss;
    meta["epochs"] = ck.epochs;
    meta["seed"] = std::to_string(ck.seed);
    const std::string text = meta.dump();
    detail::put_u32(out, static_cast<std::uint32_t>(text.size()));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw std::runtime_error("write_checkpoint: write failed: " + path);
}

inline Checkpoint read_checkpoint(const std::string& path) {
    auto in = detail::open_in(path, /*binary=*/true);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "FNS1", 4) != 0)
        throw std::runtime_error("checkpoint: bad magic in " + path);

    Checkpoint ck;
    const std::uint32_t n = detail::get_u32(in);
    if (n < 2 || n > (1u << 20)) throw std::runtime_error("checkpoint: implausible n");
    ck.problem.n = static_cast<int>(n);
    const std::uint8_t family = detail::get_u8(in);
    if (family > 3) throw std::runtime_error("checkpoint: unknown family tag");
    ck.problem.family = static_cast<Family>(family);
    ck.problem.xi = detail::get_f64(in);
    ck.problem.theta = detail::get_f64(in);
    ck.problem.epsilon = detail::get_f64(in);
    ck.problem.kappa = detail::get_f64(in);

    const std::uint8_t tag = detail::get_u8(in);
    if (tag == 0) {
        WeightedJacobi sm;
        sm.omega = detail::get_f64(in);
        sm.sweeps = static_cast<int>(detail::get_f64(in));
        ck.smoother = sm;
    } else if (tag == 1) {
        Chebyshev sm;
        sm.m = static_cast<int>(detail::get_f64(in));
        sm.alpha = detail::get_f64(in);
        sm.lambda_max = detail::get_f64(in);
        ck.smoother = sm;
    } else if (tag == 2) {
        LearnedConv sm;
        for (auto& k : sm.k1)
            for (double& x : k.c) x = detail::get_f64(in);
        for (auto& k : sm.k2)
            for (double& x : k.c) x = detail::get_f64(in);
        ck.smoother = sm;
    } else {
        throw std::runtime_error("checkpoint: unknown smoother tag");
    }

    ck.filter = SpectralFilter(ck.problem.n);
    for (auto& z : ck.filter.c) {
        const double re = detail::get_f64(in);
        const double im = detail::get_f64(in);
        z = {re, im};
    }

    const std::uint32_t len = detail::get_u32(in);
    std::string text(len, '\0');
    in.read(text.data(), static_cast<std::streamsize>(len));
    if (!in) throw std::runtime_error("checkpoint: truncated metadata");
    const nlohmann::json meta = nlohmann::json::parse(text);
    ck.final_loss = meta.value("final_loss", 0.0);
    ck.epochs = meta.value("epochs", 0);
    if (meta.contains("seed")) ck.seed = std::stoull(meta["seed"].get<std::string>());
    return ck;
}

}  // namespace fns

#endif  // FNS_IO_HPP
