// Command-line harness for the solver workbench: frequency-analysis maps,
// filter training, single solves with any method, experiment matrices, and
// checkpoint inspection. Exit codes: 0 success, 1 runtime error, 2 usage
// error. Non-convergence of a solve is data, not an error.

#include <chrono>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "fns/bench.hpp"
#include "fns/io.hpp"
#include "fns/lfa.hpp"

namespace {

struct ProblemFlags {
    std::string family = "poisson";
    int n = 64;
    double xi = 1.0;
    double theta = 0.0;
    double epsilon = 1.0;
    double kappa = 0.0;
};

void add_problem_flags(CLI::App* cmd, ProblemFlags* pf, bool required) {
    auto* opt = cmd->add_option("--problem", pf->family,
                                "problem family: poisson|anisotropic|convdiff|helmholtz");
    if (required) opt->required();
    cmd->add_option("--n", pf->n, "mesh divisions per side (grid is (n-1)^2)");
    cmd->add_option("--xi", pf->xi, "anisotropic strength in (0,1]");
    cmd->add_option("--theta", pf->theta, "anisotropic direction in [0,pi]");
    cmd->add_option("--epsilon", pf->epsilon, "diffusion coefficient (> 0)");
    cmd->add_option("--kappa", pf->kappa, "Helmholtz wavenumber (>= 0)");
}

fns::ProblemSpec to_problem(const ProblemFlags& pf) {
    fns::ProblemSpec p;
    p.family = fns::family_from_name(pf.family);
    p.n = pf.n;
    p.xi = pf.xi;
    p.theta = pf.theta;
    p.epsilon = pf.epsilon;
    p.kappa = pf.kappa;
    p.validate();
    return p;
}

struct SmootherFlags {
    std::string type = "jacobi";
    double omega = 2.0 / 3.0;
    int sweeps = 5;
    int m = 10;
    double alpha = 3.0;
};

void add_smoother_flags(CLI::App* cmd, SmootherFlags* sf) {
    cmd->add_option("--smoother", sf->type, "smoother: jacobi|chebyshev|conv");
    cmd->add_option("--omega", sf->omega, "Jacobi weight in (0,1]");
    cmd->add_option("--sweeps", sf->sweeps, "Jacobi sweeps per smoother call");
    cmd->add_option("--m", sf->m, "Chebyshev polynomial order");
    cmd->add_option("--alpha", sf->alpha, "Chebyshev spectral-interval ratio (> 1)");
}

fns::SmootherParams to_smoother_params(const SmootherFlags& sf) {
    fns::SmootherParams sp;
    sp.type = sf.type;
    sp.omega = sf.omega;
    sp.sweeps = sf.sweeps;
    sp.m = sf.m;
    sp.alpha = sf.alpha;
    return sp;
}

// ---------------------------------------------------------------------------

struct LfaOptions {
    ProblemFlags problem;
    SmootherFlags smoother;
    int resolution = 128;
    std::string out = "lfa_map";
};

int cmd_lfa(const LfaOptions& opt) {
    const fns::ProblemSpec problem = to_problem(opt.problem);
    const fns::Stencil3x3 s = fns::build_stencil(problem);

    fns::FactorParams params = fns::JacobiFactorParams{opt.smoother.omega, opt.smoother.sweeps};
    if (opt.smoother.type == "chebyshev") {
        const double lmax = fns::power_method(s, problem.n).lambda_max;
        params = fns::ChebyshevFactorParams{
            fns::chebyshev_taus(lmax, opt.smoother.alpha, opt.smoother.m)};
    } else if (opt.smoother.type != "jacobi") {
        throw std::invalid_argument("lfa supports jacobi and chebyshev smoothers");
    }

    const fns::FactorMap map = fns::factor_map(s, params, opt.resolution);
    fns::write_factor_map_csv(opt.out + ".csv", map);
    fns::write_factor_map_pgm(opt.out + ".pgm", map);
    std::printf("mu_low=%s mu_high=%s fraction_above_one=%s\n", fns::fmt17(map.mu_low).c_str(),
                fns::fmt17(map.mu_high).c_str(), fns::fmt17(map.fraction_above_one).c_str());
    return 0;
}

struct TrainOptions {
    ProblemFlags problem;
    SmootherFlags smoother;
    int epochs = 200;
    int batch = 100;
    double lr = 1e-4;
    int k = 10;
    std::vector<int> k_ramp;
    std::optional<double> grad_clip;
    double init_scale = 1e-2;
    std::uint64_t seed = 0;
    bool train_smoother = false;
    std::string checkpoint = "checkpoint.bin";
    std::string loss_csv;
};

int cmd_train(const TrainOptions& opt) {
    const fns::ProblemSpec problem = to_problem(opt.problem);
    const fns::Stencil3x3 s = fns::build_stencil(problem);

    fns::TrainConfig cfg;
    cfg.epochs = opt.epochs;
    cfg.batch_size = opt.batch;
    cfg.learning_rate = opt.lr;
    cfg.k_schedule = fns::KSchedule::fixed(opt.k);
    if (!opt.k_ramp.empty()) {
        if (opt.k_ramp.size() != 2) throw std::invalid_argument("--k-ramp needs two values");
        cfg.k_schedule = fns::KSchedule::ramp(opt.k_ramp[0], opt.k_ramp[1]);
    }
    cfg.grad_clip = opt.grad_clip;
    cfg.init_scale = opt.init_scale;
    cfg.seed = opt.seed;
    cfg.train_smoother = opt.train_smoother || opt.smoother.type == "conv";

    fns::SmootherSpec initial =
        opt.smoother.type == "conv"
            ? fns::SmootherSpec{fns::LearnedConv{}}
            : fns::make_smoother(to_smoother_params(opt.smoother), s, problem.n);

    const fns::TrainResult result = fns::train(problem, initial, cfg);
    fns::write_checkpoint(opt.checkpoint, result.checkpoint);
    const std::string loss_path = opt.loss_csv.empty() ? opt.checkpoint + ".loss.csv" : opt.loss_csv;
    fns::write_loss_csv(loss_path, result.history);
    std::printf("checkpoint=%s final_loss=%s\n", opt.checkpoint.c_str(),
                fns::fmt17(result.checkpoint.final_loss).c_str());
    return 0;
}

struct SolveOptions {
    std::string method = "fns";
    ProblemFlags problem;
    SmootherFlags smoother;
    std::string checkpoint;
    double tol = 1e-6;
    int maxit = 10000;
    std::uint64_t seed = 1;
    int restart = 30;
    int ell = 1;
    std::string trace;
};

int cmd_solve(const SolveOptions& opt) {
    fns::RunSpec run;
    run.solver = fns::solver_from_name(opt.method);
    run.tol = opt.tol;
    run.maxit = opt.maxit;
    run.restart = opt.restart;
    run.ell = opt.ell;
    run.smoother = to_smoother_params(opt.smoother);

    fns::SmootherSpec smoother = fns::WeightedJacobi{};
    fns::SpectralFilter filter;
    if (run.solver == fns::SolverKind::Fns) {
        if (opt.checkpoint.empty() || !std::filesystem::exists(opt.checkpoint)) {
            std::fprintf(stderr, "checkpoint not found: %s\n", opt.checkpoint.c_str());
            return 1;
        }
        const fns::Checkpoint ck = fns::read_checkpoint(opt.checkpoint);
        run.problem = ck.problem;
        smoother = ck.smoother;
        filter = ck.filter;
    } else {
        run.problem = to_problem(opt.problem);
        filter = fns::SpectralFilter::zeros(run.problem.n);
        const fns::Stencil3x3 s = fns::build_stencil(run.problem);
        if (run.solver == fns::SolverKind::Jacobi || run.solver == fns::SolverKind::Chebyshev) {
            fns::SmootherParams sp = run.smoother;
            sp.type = run.solver == fns::SolverKind::Jacobi ? "jacobi" : "chebyshev";
            smoother = fns::make_smoother(sp, s, run.problem.n);
        }
    }

    const fns::Stencil3x3 s = fns::build_stencil(run.problem);
    const fns::Grid f = fns::sample_rhs(run.problem.n, opt.seed);
    const auto t0 = std::chrono::steady_clock::now();
    auto [u, trace] = fns::dispatch_solver(run, s, smoother, filter, f);
    const auto t1 = std::chrono::steady_clock::now();
    const double wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();

    if (!opt.trace.empty()) fns::write_trace_csv(opt.trace, trace, /*include_matvecs=*/true);
    const char* status = trace.converged ? "CONVERGED" : (trace.diverged ? "DIVERGED" : "MAXITER");
    std::printf("status=%s iterations=%d final_residual=%s matvecs=%lld wall_ms=%.3f\n", status,
                trace.iterations, fns::fmt17(trace.residuals.back()).c_str(),
                trace.matvecs.back(), wall_ms);
    return 0;
}

struct BenchOptions {
    std::string config;
    std::string out;
};

int cmd_bench(const BenchOptions& opt) {
    fns::ExperimentConfig cfg = fns::load_experiment_config(opt.config);
    if (!opt.out.empty()) cfg.output_dir = opt.out;
    const auto results = fns::run_benchmark(cfg);
    int failed = 0;
    for (const auto& r : results)
        if (r.failed) ++failed;
    std::printf("results=%s/results.csv runs=%zu errors=%d\n", cfg.output_dir.c_str(),
                results.size(), failed);
    return 0;
}

struct InspectOptions {
    std::string checkpoint;
};

int cmd_inspect(const InspectOptions& opt) {
    if (!std::filesystem::exists(opt.checkpoint)) {
        std::fprintf(stderr, "checkpoint not found: %s\n", opt.checkpoint.c_str());
        return 1;
    }
    const fns::Checkpoint ck = fns::read_checkpoint(opt.checkpoint);
    std::printf("family=%s n=%d xi=%s theta=%s epsilon=%s kappa=%s\n",
                fns::family_name(ck.problem.family), ck.problem.n, fns::fmt17(ck.problem.xi).c_str(),
                fns::fmt17(ck.problem.theta).c_str(), fns::fmt17(ck.problem.epsilon).c_str(),
                fns::fmt17(ck.problem.kappa).c_str());
    std::visit(
        [](const auto& sm) {
            using T = std::decay_t<decltype(sm)>;
            if constexpr (std::is_same_v<T, fns::WeightedJacobi>) {
                std::printf("smoother=jacobi omega=%s sweeps=%d\n", fns::fmt17(sm.omega).c_str(),
                            sm.sweeps);
            } else if constexpr (std::is_same_v<T, fns::Chebyshev>) {
                std::printf("smoother=chebyshev m=%d alpha=%s lambda_max=%s\n", sm.m,
                            fns::fmt17(sm.alpha).c_str(), fns::fmt17(sm.lambda_max).c_str());
            } else {
                std::printf("smoother=conv planes=%d\n", fns::LearnedConv::kPlanes);
            }
        },
        ck.smoother);
    std::printf("filter_bins=%zu final_loss=%s epochs=%d seed=%llu\n", ck.filter.size(),
                fns::fmt17(ck.final_loss).c_str(), ck.epochs,
                static_cast<unsigned long long>(ck.seed));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"structured-grid solver workbench: stationary smoothers with "
                 "frequency-space correction, analysis tools and Krylov baselines"};
    app.require_subcommand(1);

    LfaOptions lfa_opt;
    auto* lfa = app.add_subcommand("lfa", "write a convergence-factor map (CSV + PGM)");
    add_problem_flags(lfa, &lfa_opt.problem, /*required=*/true);
    add_smoother_flags(lfa, &lfa_opt.smoother);
    lfa->add_option("--resolution", lfa_opt.resolution, "frequency-grid resolution (>= 8)");
    lfa->add_option("--out", lfa_opt.out, "output path prefix");

    TrainOptions train_opt;
    auto* train = app.add_subcommand("train", "train a spectral filter for one problem");
    add_problem_flags(train, &train_opt.problem, /*required=*/true);
    add_smoother_flags(train, &train_opt.smoother);
    train->add_option("--epochs", train_opt.epochs);
    train->add_option("--batch", train_opt.batch);
    train->add_option("--lr", train_opt.lr);
    train->add_option("--k", train_opt.k, "fixed unroll depth K");
    train->add_option("--k-ramp", train_opt.k_ramp, "linear K ramp: start end")->expected(2);
    double clip_value = 0.0;
    auto* clip_opt = train->add_option("--grad-clip", clip_value, "max global gradient norm");
    train->add_option("--init-scale", train_opt.init_scale);
    train->add_option("--seed", train_opt.seed);
    train->add_flag("--train-smoother", train_opt.train_smoother,
                    "jointly train LearnedConv kernels");
    train->add_option("--checkpoint", train_opt.checkpoint, "output checkpoint path")->required();
    train->add_option("--loss-csv", train_opt.loss_csv, "per-epoch loss CSV path");

    SolveOptions solve_opt;
    auto* solve = app.add_subcommand("solve", "solve one random right-hand side");
    solve->add_option("--method", solve_opt.method,
                      "fns|jacobi|chebyshev|cg|gmres|bicgstabl|dst-direct");
    add_problem_flags(solve, &solve_opt.problem, /*required=*/false);
    add_smoother_flags(solve, &solve_opt.smoother);
    solve->add_option("--checkpoint", solve_opt.checkpoint, "trained checkpoint (fns method)");
    solve->add_option("--tol", solve_opt.tol);
    solve->add_option("--maxit", solve_opt.maxit);
    solve->add_option("--seed", solve_opt.seed, "right-hand-side seed");
    solve->add_option("--restart", solve_opt.restart, "gmres restart length");
    solve->add_option("--ell", solve_opt.ell, "bicgstab(l) polynomial degree");
    solve->add_option("--trace", solve_opt.trace, "residual-history CSV path");

    BenchOptions bench_opt;
    auto* bench = app.add_subcommand("bench", "run an experiment-matrix config");
    bench->add_option("--config", bench_opt.config, "JSON experiment config")->required();
    bench->add_option("--out", bench_opt.out, "output directory (overrides config)");

    InspectOptions inspect_opt;
    auto* inspect = app.add_subcommand("inspect-checkpoint", "print checkpoint contents");
    inspect->add_option("--checkpoint", inspect_opt.checkpoint)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (app.got_subcommand(lfa)) return cmd_lfa(lfa_opt);
        if (app.got_subcommand(train)) {
            if (clip_opt->count() > 0) train_opt.grad_clip = clip_value;
            return cmd_train(train_opt);
        }
        if (app.got_subcommand(solve)) return cmd_solve(solve_opt);
        if (app.got_subcommand(bench)) return cmd_bench(bench_opt);
        if (app.got_subcommand(inspect)) return cmd_inspect(inspect_opt);
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 2;
}
