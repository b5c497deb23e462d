#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#ifndef FNS_CLI_PATH
#error "FNS_CLI_PATH must point at the built CLI binary"
#endif

namespace {

struct CommandResult {
    int exit_code = -1;
    std::string output;  // stdout + stderr
};

CommandResult run_cli(const std::string& args) {
    const std::string cmd = std::string(FNS_CLI_PATH) + " " + args + " 2>&1";
    std::array<char, 4096> buf{};
    CommandResult result;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    while (std::fgets(buf.data(), buf.size(), pipe) != nullptr) result.output += buf.data();
    const int status = pclose(pipe);
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

std::filesystem::path temp_dir() {
    const auto dir = std::filesystem::temp_directory_path() / "fns_cli_tests";
    std::filesystem::create_directories(dir);
    return dir;
}

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

double parse_field(const std::string& text, const std::string& key) {
    const auto pos = text.find(key + "=");
    REQUIRE(pos != std::string::npos);
    return std::stod(text.substr(pos + key.size() + 1));
}

}  // namespace

TEST_CASE("missing subcommand or required flag is a usage error", "[cli]") {
    CHECK(run_cli("").exit_code == 2);
    const auto res = run_cli("lfa");
    CHECK(res.exit_code == 2);
    CHECK(res.output.find("--problem") != std::string::npos);
    CHECK(run_cli("definitely-not-a-command").exit_code == 2);
}

TEST_CASE("lfa reports the damped-Jacobi smoothing factor", "[cli]") {
    const auto out = (temp_dir() / "poisson_jacobi").string();
    const auto res = run_cli("lfa --problem poisson --n 64 --smoother jacobi --omega 0.6667 "
                             "--sweeps 1 --resolution 128 --out " + out);
    REQUIRE(res.exit_code == 0);
    CHECK(std::abs(parse_field(res.output, "mu_high") - 2.0 / 3.0) < 1e-3);
    CHECK(std::filesystem::exists(out + ".csv"));
    CHECK(std::filesystem::exists(out + ".pgm"));
}

TEST_CASE("lfa flags the divergent convection-dominated Jacobi", "[cli]") {
    const auto out = (temp_dir() / "convdiff_jacobi").string();
    const auto res = run_cli("lfa --problem convdiff --epsilon 1e-6 --n 64 --smoother jacobi "
                             "--omega 0.8 --sweeps 1 --resolution 128 --out " + out);
    REQUIRE(res.exit_code == 0);
    CHECK(parse_field(res.output, "fraction_above_one") > 0.5);
}

TEST_CASE("train writes a deterministic checkpoint and loss history", "[cli]") {
    const auto ck1 = (temp_dir() / "ck1.bin").string();
    const auto ck2 = (temp_dir() / "ck2.bin").string();
    const std::string flags = "train --problem poisson --n 8 --smoother jacobi --omega 0.6667 "
                              "--sweeps 2 --epochs 3 --batch 2 --k 2 --lr 0.01 --seed 7 ";
    REQUIRE(run_cli(flags + "--checkpoint " + ck1).exit_code == 0);
    REQUIRE(run_cli(flags + "--checkpoint " + ck2).exit_code == 0);
    CHECK(slurp(ck1) == slurp(ck2));

    const std::string loss_csv = slurp(ck1 + ".loss.csv");
    CHECK(loss_csv.rfind("epoch,k,loss\n", 0) == 0);
    CHECK(std::count(loss_csv.begin(), loss_csv.end(), '\n') == 4);  // header + 3 epochs

    const auto inspect = run_cli("inspect-checkpoint --checkpoint " + ck1);
    CHECK(inspect.exit_code == 0);
    CHECK(inspect.output.find("family=poisson") != std::string::npos);
    CHECK(inspect.output.find("smoother=jacobi") != std::string::npos);
}

TEST_CASE("train with lr=0 keeps the loss constant", "[cli]") {
    const auto ck = (temp_dir() / "ck_lr0.bin").string();
    const auto res = run_cli("train --problem poisson --n 8 --smoother jacobi --epochs 3 "
                             "--batch 2 --k 2 --lr 0 --seed 3 --checkpoint " + ck);
    REQUIRE(res.exit_code == 0);
    std::ifstream in(ck + ".loss.csv");
    std::string header, first, last, line;
    std::getline(in, header);
    std::getline(in, first);
    while (std::getline(in, line))
        if (!line.empty()) last = line;
    CHECK(first.substr(first.rfind(',')) == last.substr(last.rfind(',')));
}

TEST_CASE("solve with the direct sine-transform method", "[cli]") {
    const auto trace = (temp_dir() / "dst_trace.csv").string();
    const auto res =
        run_cli("solve --method dst-direct --problem poisson --n 64 --seed 1 --trace " + trace);
    REQUIRE(res.exit_code == 0);
    CHECK(res.output.find("status=CONVERGED") != std::string::npos);
    CHECK(parse_field(res.output, "final_residual") < 1e-10);
    CHECK(slurp(trace).rfind("step,matvecs,relative_residual\n", 0) == 0);
}

TEST_CASE("solve reports divergence as data, not as an error", "[cli]") {
    const auto res = run_cli("solve --method jacobi --problem convdiff --epsilon 1e-6 --n 32 "
                             "--omega 0.8 --sweeps 5 --maxit 500 --seed 1");
    REQUIRE(res.exit_code == 0);
    CHECK(res.output.find("status=DIVERGED") != std::string::npos);
}

TEST_CASE("solve with a missing checkpoint fails with exit 1", "[cli]") {
    const auto res = run_cli("solve --method fns --checkpoint /nonexistent/missing.bin");
    CHECK(res.exit_code == 1);
    CHECK(res.output.find("checkpoint not found") != std::string::npos);
}

TEST_CASE("bench runs a config file end to end, reproducibly", "[cli]") {
    const auto dir = temp_dir();
    const auto config_path = dir / "bench.json";
    {
        std::ofstream out(config_path);
        out << R"({
          "output_dir": ")" << (dir / "bench_a").string() << R"(",
          "runs": [
            {"name": "cg16", "problem": {"family": "poisson", "n": 16},
             "solver": "cg", "tol": 1e-8, "maxit": 2000, "num_rhs": 2, "seed": 5},
            {"name": "direct16", "problem": {"family": "poisson", "n": 16},
             "solver": "dst-direct", "tol": 1e-8, "maxit": 10, "num_rhs": 2, "seed": 5}
          ]
        })";
    }
    REQUIRE(run_cli("bench --config " + config_path.string()).exit_code == 0);
    REQUIRE(run_cli("bench --config " + config_path.string() + " --out " +
                    (dir / "bench_b").string())
                .exit_code == 0);

    auto strip_wall = [](const std::string& csv) {
        std::istringstream in(csv);
        std::string line, out;
        while (std::getline(in, line)) {
            const auto pos = line.rfind(',');
            out += line.substr(0, pos) + "\n";
        }
        return out;
    };
    const std::string a = slurp(dir / "bench_a" / "results.csv");
    const std::string b = slurp(dir / "bench_b" / "results.csv");
    CHECK(strip_wall(a) == strip_wall(b));
    CHECK(a.find("cg16") != std::string::npos);
    CHECK(a.find("ERROR") == std::string::npos);

    // residual histories are fully reproducible
    CHECK(slurp(dir / "bench_a" / "0_cg16" / "trace_rhs0.csv") ==
          slurp(dir / "bench_b" / "0_cg16" / "trace_rhs0.csv"));
}

TEST_CASE("bench rejects configs with unknown keys", "[cli]") {
    const auto path = temp_dir() / "bad.json";
    {
        std::ofstream out(path);
        out << R"({"runs": [], "typo_key": 1})";
    }
    const auto res = run_cli("bench --config " + path.string());
    CHECK(res.exit_code == 2);
    CHECK(res.output.find("unknown key") != std::string::npos);
}
