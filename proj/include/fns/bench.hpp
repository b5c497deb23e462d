#ifndef FNS_BENCH_HPP
#define FNS_BENCH_HPP

// Experiment harness: a JSON config describes a list of runs (problem,
// smoother, solver, stopping protocol); each run solves num_rhs random
// right-hand sides and contributes one row to a summary CSV plus plot-ready
// residual-history files. Runs execute in a worker pool; a crashing run
// becomes an ERROR row without stopping the matrix.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "fns/grid.hpp"
#include "fns/io.hpp"
#include "fns/krylov.hpp"
#include "fns/parallel.hpp"
#include "fns/problems.hpp"
#include "fns/smoothers.hpp"
#include "fns/spectral.hpp"
#include "fns/training.hpp"

namespace fns {

/** Seed stream shared by evaluate() and the bench harness so both draw the
 * same right-hand sides for a given base seed. */
inline constexpr std::uint64_t kEvalStream = 0x65764C00ULL;

enum class SolverKind { Fns, Jacobi, Chebyshev, Cg, Gmres, BicgstabL, DstDirect };

inline const char* solver_name(SolverKind k) {
    switch (k) {
        case SolverKind::Fns: return "fns";
        case SolverKind::Jacobi: return "jacobi";
        case SolverKind::Chebyshev: return "chebyshev";
        case SolverKind::Cg: return "cg";
        case SolverKind::Gmres: return "gmres";
        case SolverKind::BicgstabL: return "bicgstabl";
        case SolverKind::DstDirect: return "dst-direct";
    }
    return "?";
}

inline SolverKind solver_from_name(const std::string& name) {
    if (name == "fns") return SolverKind::Fns;
    if (name == "jacobi") return SolverKind::Jacobi;
    if (name == "chebyshev") return SolverKind::Chebyshev;
    if (name == "cg") return SolverKind::Cg;
    if (name == "gmres") return SolverKind::Gmres;
    if (name == "bicgstabl") return SolverKind::BicgstabL;
    if (name == "dst-direct") return SolverKind::DstDirect;
    throw std::invalid_argument("unknown solver: " + name);
}

inline Family family_from_name(const std::string& name) {
    if (name == "poisson") return Family::Poisson;
    if (name == "anisotropic") return Family::Anisotropic;
    if (name == "convdiff") return Family::ConvectionDiffusion;
    if (name == "helmholtz") return Family::Helmholtz;
    throw std::invalid_argument("unknown problem family: " + name);
}

/** Stationary-smoother parameters as they appear in configs and CLI flags. */
struct SmootherParams {
    std::string type = "jacobi";  // jacobi | chebyshev | conv
    double omega = 2.0 / 3.0;
    int sweeps = 5;
    int m = 10;
    double alpha = 3.0;
};

struct RunSpec {
    std::string name;
    ProblemSpec problem;
    std::uint64_t seed = 0;  ///< right-hand-side seed stream
    SmootherParams smoother;
    SolverKind solver = SolverKind::Fns;
    int restart = 30;  ///< gmres
    int ell = 1;       ///< bicgstabl
    std::string checkpoint;
    std::optional<TrainConfig> training;
    double tol = 1e-6;
    int maxit = 10000;
    int num_rhs = 10;
};

struct ExperimentConfig {
    std::string output_dir = "bench_out";
    std::vector<RunSpec> runs;
};

// ---------------------------------------------------------------------------
// Config parsing (strict: unknown keys are rejected)

namespace detail {

inline void require_keys(const nlohmann::json& obj, const std::vector<std::string>& allowed,
                         const std::string& context) {
    if (!obj.is_object()) throw std::invalid_argument("config: " + context + " must be an object");
    for (const auto& item : obj.items()) {
        bool ok = false;
        for (const auto& key : allowed)
            if (item.key() == key) {
                ok = true;
                break;
            }
        if (!ok)
            throw std::invalid_argument("config: unknown key '" + item.key() + "' in " + context);
    }
}

inline std::uint64_t seed_from_json(const nlohmann::json& j, const std::string& context) {
    if (j.is_number_unsigned()) return j.get<std::uint64_t>();
    if (j.is_number_integer()) {
        const auto v = j.get<std::int64_t>();
        if (v < 0) throw std::invalid_argument("config: negative seed in " + context);
        return static_cast<std::uint64_t>(v);
    }
    if (j.is_string()) return std::stoull(j.get<std::string>());
    throw std::invalid_argument("config: seed must be an integer or string in " + context);
}

}  // namespace detail

inline ProblemSpec parse_problem(const nlohmann::json& j, std::uint64_t* seed_out = nullptr) {
    detail::require_keys(j, {"family", "n", "xi", "theta", "epsilon", "kappa", "seed"}, "problem");
    if (!j.contains("family")) throw std::invalid_argument("config: problem.family is required");
    ProblemSpec p;
    p.family = family_from_name(j["family"].get<std::string>());
    if (j.contains("n")) p.n = j["n"].get<int>();
    if (j.contains("xi")) p.xi = j["xi"].get<double>();
    if (j.contains("theta")) p.theta = j["theta"].get<double>();
    if (j.contains("epsilon")) p.epsilon = j["epsilon"].get<double>();
    if (j.contains("kappa")) p.kappa = j["kappa"].get<double>();
    if (seed_out != nullptr && j.contains("seed"))
        *seed_out = detail::seed_from_json(j["seed"], "problem");
    p.validate();
    return p;
}

inline SmootherParams parse_smoother_params(const nlohmann::json& j) {
    detail::require_keys(j, {"type", "omega", "sweeps", "m", "alpha"}, "smoother");
    SmootherParams sp;
    if (j.contains("type")) sp.type = j["type"].get<std::string>();
    if (sp.type != "jacobi" && sp.type != "chebyshev" && sp.type != "conv")
        throw std::invalid_argument("config: unknown smoother type: " + sp.type);
    if (j.contains("omega")) sp.omega = j["omega"].get<double>();
    if (j.contains("sweeps")) sp.sweeps = j["sweeps"].get<int>();
    if (j.contains("m")) sp.m = j["m"].get<int>();
    if (j.contains("alpha")) sp.alpha = j["alpha"].get<double>();
    return sp;
}

inline TrainConfig parse_train_config(const nlohmann::json& j) {
    detail::require_keys(j,
                         {"epochs", "batch_size", "learning_rate", "k", "k_ramp", "grad_clip",
                          "init_scale", "seed", "train_smoother"},
                         "training");
    TrainConfig cfg;
    if (j.contains("epochs")) cfg.epochs = j["epochs"].get<int>();
    if (j.contains("batch_size")) cfg.batch_size = j["batch_size"].get<int>();
    if (j.contains("learning_rate")) cfg.learning_rate = j["learning_rate"].get<double>();
    if (j.contains("k") && j.contains("k_ramp"))
        throw std::invalid_argument("config: training.k and training.k_ramp are exclusive");
    if (j.contains("k")) cfg.k_schedule = KSchedule::fixed(j["k"].get<int>());
    if (j.contains("k_ramp")) {
        const auto& ramp = j["k_ramp"];
        if (!ramp.is_array() || ramp.size() != 2)
            throw std::invalid_argument("config: training.k_ramp must be [start, end]");
        cfg.k_schedule = KSchedule::ramp(ramp[0].get<int>(), ramp[1].get<int>());
    }
    if (j.contains("grad_clip") && !j["grad_clip"].is_null())
        cfg.grad_clip = j["grad_clip"].get<double>();
    if (j.contains("init_scale")) cfg.init_scale = j["init_scale"].get<double>();
    if (j.contains("seed")) cfg.seed = detail::seed_from_json(j["seed"], "training");
    if (j.contains("train_smoother")) cfg.train_smoother = j["train_smoother"].get<bool>();
    cfg.validate();
    return cfg;
}

inline RunSpec parse_run(const nlohmann::json& j, int index) {
    detail::require_keys(j,
                         {"name", "problem", "smoother", "solver", "restart", "ell", "checkpoint",
                          "training", "tol", "maxit", "num_rhs", "seed"},
                         "runs[" + std::to_string(index) + "]");
    RunSpec run;
    run.name = j.contains("name") ? j["name"].get<std::string>()
                                  : ("run" + std::to_string(index));
    if (!j.contains("problem"))
        throw std::invalid_argument("config: runs[" + std::to_string(index) + "].problem missing");
    std::uint64_t problem_seed = 0;
    run.problem = parse_problem(j["problem"], &problem_seed);
    run.seed = problem_seed;
    if (j.contains("seed")) run.seed = detail::seed_from_json(j["seed"], "run");
    if (j.contains("smoother")) run.smoother = parse_smoother_params(j["smoother"]);
    if (j.contains("solver")) run.solver = solver_from_name(j["solver"].get<std::string>());
    if (j.contains("restart")) run.restart = j["restart"].get<int>();
    if (j.contains("ell")) run.ell = j["ell"].get<int>();
    if (j.contains("checkpoint")) run.checkpoint = j["checkpoint"].get<std::string>();
    if (j.contains("training")) run.training = parse_train_config(j["training"]);
    if (j.contains("tol")) run.tol = j["tol"].get<double>();
    if (j.contains("maxit")) run.maxit = j["maxit"].get<int>();
    if (j.contains("num_rhs")) run.num_rhs = j["num_rhs"].get<int>();
    if (!(run.tol > 0.0)) throw std::invalid_argument("config: tol must be > 0");
    if (run.maxit < 1) throw std::invalid_argument("config: maxit must be >= 1");
    if (run.num_rhs < 1) throw std::invalid_argument("config: num_rhs must be >= 1");
    return run;
}

inline ExperimentConfig parse_experiment_config(const nlohmann::json& j) {
    detail::require_keys(j, {"output_dir", "runs"}, "config");
    ExperimentConfig cfg;
    if (j.contains("output_dir")) cfg.output_dir = j["output_dir"].get<std::string>();
    if (!j.contains("runs") || !j["runs"].is_array())
        throw std::invalid_argument("config: runs array is required");
    int idx = 0;
    for (const auto& run : j["runs"]) cfg.runs.push_back(parse_run(run, idx++));
    return cfg;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
    auto in = detail::open_in(path);
    nlohmann::json j;
    in >> j;
    return parse_experiment_config(j);
}

// ---------------------------------------------------------------------------
// Execution

/** Builds the stationary smoother described by params for a stencil; conv
 * smoothers only exist inside checkpoints. */
inline SmootherSpec make_smoother(const SmootherParams& sp, const Stencil3x3& s, int n) {
    if (sp.type == "jacobi") return WeightedJacobi{sp.omega, sp.sweeps};
    if (sp.type == "chebyshev") return make_chebyshev(s, n, sp.m, sp.alpha);
    throw std::invalid_argument("smoother type '" + sp.type +
                                "' requires a trained checkpoint");
}

struct RunResult {
    std::string name;
    bool failed = false;
    std::string message;
    EvalSummary summary;
    double mean_wall_ms = 0.0;
};

inline std::pair<Grid, IterationTrace> dispatch_solver(const RunSpec& run, const Stencil3x3& s,
                                                       const SmootherSpec& smoother,
                                                       const SpectralFilter& filter,
                                                       const Grid& f) {
    switch (run.solver) {
        case SolverKind::Fns: return fns_solve(s, smoother, filter, f, run.tol, run.maxit);
        case SolverKind::Jacobi:
        case SolverKind::Chebyshev: return stationary_solve(s, smoother, f, run.tol, run.maxit);
        case SolverKind::Cg: return cg(s, f, run.tol, run.maxit);
        case SolverKind::Gmres: return gmres(s, f, run.restart, run.tol, run.maxit);
        case SolverKind::BicgstabL: return bicgstab_l(s, f, run.ell, run.tol, run.maxit);
        case SolverKind::DstDirect: {
            Grid u(f.n);
            if (run.problem.family == Family::Poisson) {
                u = fast_poisson_solve(f);
            } else if (run.problem.family == Family::Helmholtz) {
                u = sine_correct(f, helmholtz_inverse_sine_filter(run.problem.kappa, f.n));
            } else {
                throw std::invalid_argument("dst-direct supports poisson and helmholtz only");
            }
            IterationTrace trace;
            const double nf = norm2(f);
            const double res = nf == 0.0 ? 0.0 : norm2(f - stencil_apply(s, u)) / nf;
            trace.residuals = {1.0, res};
            trace.matvecs = {0, 1};
            trace.iterations = 1;
            trace.converged = res <= run.tol;
            return {std::move(u), std::move(trace)};
        }
    }
    throw std::logic_error("dispatch_solver: unknown solver");
}

/** Executes one run: resolves the smoother/filter (loading or training a
 * checkpoint when asked), solves num_rhs seeded right-hand sides, writes the
 * first solve's residual history, and returns the iteration statistics. */
inline RunResult execute_run(const RunSpec& run, const std::string& run_dir) {
    RunResult result;
    result.name = run.name;
    std::filesystem::create_directories(run_dir);

    const Stencil3x3 s = build_stencil(run.problem);
    SmootherSpec smoother = WeightedJacobi{};
    SpectralFilter filter = SpectralFilter::zeros(run.problem.n);

    if (!run.checkpoint.empty()) {
        const Checkpoint ck = read_checkpoint(run.checkpoint);
        if (ck.problem.n != run.problem.n || ck.problem.family != run.problem.family)
            throw std::runtime_error("checkpoint does not match the run's problem");
        smoother = ck.smoother;
        filter = ck.filter;
    } else if (run.training) {
        SmootherSpec initial = run.smoother.type == "conv"
                                   ? SmootherSpec{LearnedConv{}}
                                   : make_smoother(run.smoother, s, run.problem.n);
        TrainResult trained = train(run.problem, initial, *run.training);
        smoother = trained.checkpoint.smoother;
        filter = trained.checkpoint.filter;
        write_checkpoint(run_dir + "/checkpoint.bin", trained.checkpoint);
        write_loss_csv(run_dir + "/loss.csv", trained.history);
    } else if (run.solver == SolverKind::Fns) {
        throw std::runtime_error("fns solver needs a checkpoint or a training section");
    } else if (run.solver == SolverKind::Jacobi || run.solver == SolverKind::Chebyshev) {
        smoother = make_smoother(run.smoother, s, run.problem.n);
    }

    EvalSummary summary;
    summary.num_rhs = run.num_rhs;
    summary.iterations.assign(run.num_rhs, 0);
    std::vector<double> wall_ms(run.num_rhs, 0.0);
    std::vector<long long> matvecs(run.num_rhs, 0);
    std::vector<int> converged(run.num_rhs, 0);
    std::vector<IterationTrace> first_trace(1);

    for (int i = 0; i < run.num_rhs; ++i) {
        const Grid f = sample_rhs(run.problem.n, derive_seed(run.seed, kEvalStream, i));
        const auto t0 = std::chrono::steady_clock::now();
        auto [u, trace] = dispatch_solver(run, s, smoother, filter, f);
        const auto t1 = std::chrono::steady_clock::now();
        wall_ms[i] = std::chrono::duration<double, std::milli>(t1 - t0).count();
        summary.iterations[i] = trace.converged ? trace.iterations : run.maxit;
        converged[i] = trace.converged ? 1 : 0;
        matvecs[i] = trace.matvecs.back();
        if (i == 0) first_trace[0] = std::move(trace);
    }
    write_trace_csv(run_dir + "/trace_rhs0.csv", first_trace[0], /*include_matvecs=*/true);

    double mean = 0.0, mv = 0.0, wall = 0.0;
    for (int i = 0; i < run.num_rhs; ++i) {
        mean += summary.iterations[i];
        mv += static_cast<double>(matvecs[i]);
        wall += wall_ms[i];
        if (converged[i] == 0) ++summary.nonconverged;
    }
    mean /= run.num_rhs;
    double var = 0.0;
    for (int it : summary.iterations) var += (it - mean) * (it - mean);
    var /= run.num_rhs;
    summary.mean_iterations = mean;
    summary.std_iterations = std::sqrt(var);
    summary.mean_matvecs = mv / run.num_rhs;
    result.summary = summary;
    result.mean_wall_ms = wall / run.num_rhs;
    return result;
}

/** Runs the whole experiment matrix in a worker pool (capped by FNS_THREADS)
 * and writes results.csv in config order. The trailing mean_wall_ms column is
 * the only one excluded from byte-reproducibility. */
inline std::vector<RunResult> run_benchmark(const ExperimentConfig& cfg) {
    std::filesystem::create_directories(cfg.output_dir);
    std::vector<RunResult> results(cfg.runs.size());

    parallel_for(static_cast<int>(cfg.runs.size()), [&](int i) {
        const std::string run_dir =
            cfg.output_dir + "/" + std::to_string(i) + "_" + cfg.runs[i].name;
        try {
            results[i] = execute_run(cfg.runs[i], run_dir);
        } catch (const std::exception& e) {
            results[i].name = cfg.runs[i].name;
            results[i].failed = true;
            results[i].message = e.what();
        }
    });

    auto out = detail::open_out(cfg.output_dir + "/results.csv");
    out << "name,family,n,xi,theta,epsilon,kappa,solver,tol,maxit,num_rhs,seed,"
           "mean_iters,std_iters,nonconverged,mean_matvecs,status,mean_wall_ms\n";
    for (std::size_t i = 0; i < cfg.runs.size(); ++i) {
        const RunSpec& run = cfg.runs[i];
        const RunResult& res = results[i];
        out << run.name << ',' << family_name(run.problem.family) << ',' << run.problem.n << ','
            << fmt17(run.problem.xi) << ',' << fmt17(run.problem.theta) << ','
            << fmt17(run.problem.epsilon) << ',' << fmt17(run.problem.kappa) << ','
            << solver_name(run.solver) << ',' << fmt17(run.tol) << ',' << run.maxit << ','
            << run.num_rhs << ',' << run.seed << ',';
        if (res.failed) {
            std::string msg = res.message;
            for (char& ch : msg)
                if (ch == ',' || ch == '\n') ch = ';';
            out << ",,,,ERROR:" << msg << ",\n";
        } else {
            out << fmt17(res.summary.mean_iterations) << ',' << fmt17(res.summary.std_iterations)
                << ',' << res.summary.nonconverged << ',' << fmt17(res.summary.mean_matvecs)
                << ",OK," << fmt17(res.mean_wall_ms) << '\n';
        }
    }
    return results;
}

}  // namespace fns

#endif  // FNS_BENCH_HPP
