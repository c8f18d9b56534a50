#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "scarcealloc/decision_metrics.hpp"
#include "scarcealloc/emit.hpp"
#include "scarcealloc/errors.hpp"
#include "scarcealloc/seqcare.hpp"

namespace {

namespace fs = std::filesystem;
using namespace scarcealloc;

ExperimentConfig load_or_default(const std::string& config_path,
                                 std::optional<std::uint64_t> seed_override) {
    ExperimentConfig config = config_path.empty() ? parse_config("")
                                                  : load_config(config_path);
    if (seed_override) config.root_seed = *seed_override;
    return config;
}

void ensure_out_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory: " + dir.string());
}

int run_simulate(const std::string& config_path, const std::string& out_dir,
                 std::optional<std::uint64_t> seed, int threads) {
    const ExperimentConfig config = load_or_default(config_path, seed);
    const ExperimentReport report = run_experiment(config, threads);
    const fs::path dir(out_dir);
    ensure_out_dir(dir);
    emit_csv(report, dir / "experiment.csv");
    emit_chart(report, dir / "experiment.svg");
    write_text_file(meta_text(report), dir / "meta.txt");
    std::cout << (dir / "experiment.csv").string() << '\n'
              << (dir / "experiment.svg").string() << '\n'
              << (dir / "meta.txt").string() << '\n';
    return 0;
}

int run_sweep_cmd(const std::string& config_path, const std::string& out_dir,
                  const std::string& ratios_arg, int runs_per_ratio,
                  std::optional<std::uint64_t> seed, int threads) {
    const ExperimentConfig config = load_or_default(config_path, seed);
    std::vector<double> ratios;
    std::stringstream in(ratios_arg);
    std::string item;
    while (std::getline(in, item, ',')) {
        try {
            ratios.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw ValidationError("--ratios: '" + item + "' is not a number");
        }
    }
    const SweepReport report = run_sweep(config, ratios, runs_per_ratio, threads);
    const fs::path dir(out_dir);
    ensure_out_dir(dir);
    emit_csv(report, dir / "sweep.csv");
    emit_chart(report, dir / "sweep.svg");
    write_text_file(meta_text(report), dir / "meta.txt");
    std::cout << (dir / "sweep.csv").string() << '\n'
              << (dir / "sweep.svg").string() << '\n'
              << (dir / "meta.txt").string() << '\n';
    return 0;
}

int run_evi(const std::string& config_path, int samples, const std::string& out_dir,
            std::optional<std::uint64_t> seed) {
    const ExperimentConfig config = load_or_default(config_path, seed);
    const MetricReport report = compute_metric_report(config, samples, config.root_seed);
    std::cout << metrics_csv(report);
    if (!out_dir.empty()) {
        const fs::path dir(out_dir);
        ensure_out_dir(dir);
        emit_csv(report, dir / "metrics.csv");
        std::cout << (dir / "metrics.csv").string() << '\n';
    }
    return 0;
}

int run_seqcare_solve(const std::string& problem_path, int dual_iters, double step,
                      double tolerance) {
    const TabularCMDP cmdp = load_cmdp(problem_path);
    const auto start = load_start_distribution(problem_path, cmdp.base.n_states);

    if (cmdp.budgets.empty()) {
        const auto result = value_iteration(cmdp.base);
        std::cout << "values:";
        for (double v : result.values) std::cout << ' ' << v;
        std::cout << "\npolicy:";
        for (int a : result.policy) std::cout << ' ' << a;
        std::cout << "\niterations: " << result.iterations << '\n';
        return 0;
    }

    DualAscentOptions options;
    options.n_dual_iters = dual_iters;
    options.initial_step = step;
    options.tolerance = tolerance;
    const CmdpSolution solution = solve_cmdp_lagrangian(cmdp, start, options);
    std::cout << "value: " << solution.value << '\n';
    std::cout << "feasible: " << (solution.feasible ? "yes" : "no") << '\n';
    std::cout << "multipliers:";
    for (double mu : solution.multipliers) std::cout << ' ' << mu;
    std::cout << "\nconsumptions (budgets):";
    for (std::size_t j = 0; j < solution.consumptions.size(); ++j)
        std::cout << ' ' << solution.consumptions[j] << " (" << cmdp.budgets[j] << ')';
    std::cout << "\nduality_gap: " << solution.duality_gap << '\n';
    std::cout << "policy mixture:\n";
    for (std::size_t k = 0; k < solution.policies.size(); ++k) {
        if (solution.weights[k] < 1e-12) continue;
        std::cout << "  weight " << solution.weights[k] << ": actions";
        for (int a : solution.policies[k]) std::cout << ' ' << a;
        std::cout << '\n';
    }
    return 0;
}

int run_validate(const std::string& config_path) {
    const ExperimentConfig config = load_or_default(config_path, std::nullopt);
    std::cout << "ok\n" << config_to_string(config);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"scarce-alloc: scarcity-constrained allocation simulator"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "out";
    std::string ratios = "0.05,0.1,0.2,0.4,0.8";
    std::optional<std::uint64_t> seed;
    int threads = 1;
    int samples = 200;
    int runs_per_ratio = 50;
    std::string problem_path;
    int dual_iters = 4000;
    double step = 1.0;
    double tolerance = 1e-3;

    auto* simulate = app.add_subcommand("simulate", "Run the policy-comparison study");
    simulate->add_option("--config", config_path, "Config file (key=value lines)");
    simulate->add_option("--out", out_dir, "Output directory");
    simulate->add_option("--seed", seed, "Override the root seed");
    simulate->add_option("--threads", threads, "Worker threads (identical output)");

    auto* sweep = app.add_subcommand("sweep", "Scarcity sweep over capacity ratios");
    sweep->add_option("--config", config_path, "Config file");
    sweep->add_option("--out", out_dir, "Output directory");
    sweep->add_option("--ratios", ratios, "Comma-separated ratios in (0,1], increasing");
    sweep->add_option("--runs-per-ratio", runs_per_ratio, "Runs per grid point");
    sweep->add_option("--seed", seed, "Override the root seed");
    sweep->add_option("--threads", threads, "Worker threads");

    auto* evi = app.add_subcommand("evi", "Decision-centric metrics (CAU, EVI, AER)");
    evi->add_option("--config", config_path, "Config file");
    evi->add_option("--samples", samples, "Monte Carlo cohorts for the EVI estimate");
    evi->add_option("--out", out_dir, "Optional output directory for metrics.csv")
        ->default_val("");
    evi->add_option("--seed", seed, "Override the root seed");

    auto* seqcare = app.add_subcommand("seqcare", "Sequential-decision solvers");
    auto* solve = seqcare->add_subcommand("solve", "Solve a tabular (C)MDP problem file");
    solve->add_option("--problem", problem_path, "Problem file")->required();
    solve->add_option("--iters", dual_iters, "Dual ascent iterations");
    solve->add_option("--step", step, "Initial dual step size");
    solve->add_option("--tolerance", tolerance, "Budget feasibility tolerance");

    auto* validate = app.add_subcommand("validate", "Parse and validate a config file");
    validate->add_option("--config", config_path, "Config file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);  // prints the message and usage hint
        return 1;
    }

    try {
        if (simulate->parsed()) return run_simulate(config_path, out_dir, seed, threads);
        if (sweep->parsed())
            return run_sweep_cmd(config_path, out_dir, ratios, runs_per_ratio, seed,
                                 threads);
        if (evi->parsed()) return run_evi(config_path, samples, out_dir, seed);
        if (seqcare->parsed()) {
            if (solve->parsed())
                return run_seqcare_solve(problem_path, dual_iters, step, tolerance);
            std::cerr << "seqcare: expected the 'solve' subcommand\n";
            return 1;
        }
        if (validate->parsed()) return run_validate(config_path);
        return 1;
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
