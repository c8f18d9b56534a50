#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "scarcealloc/allocation.hpp"
#include "scarcealloc/config.hpp"

namespace scarcealloc {

/// Everything one seeded run shares across policies: the cohort, the pinned
/// risk estimates, and both utility matrices.
struct RunArtifacts {
    std::vector<Patient> cohort;
    RiskEstimates estimates;
    UtilityMatrix estimated;
    UtilityMatrix true_utilities;
    double fitted_sigma = 0.0;
    std::uint64_t arrival_seed = 0;
    std::uint64_t random_policy_seed = 0;
};

/// Generates the cohort for run `run_index`, fits the noise scale so the
/// recalibrated predictions hit the target AUROC, and builds both matrices.
/// Seeds derive from split_seed(root_seed, run_index); serial and parallel
/// execution agree.
RunArtifacts prepare_run(const ExperimentConfig& config, std::uint64_t root_seed,
                         int run_index);

/// Runs one named policy ("greedy" | "threshold" | "random" | "exact") on the
/// prepared artifacts and scores it against the TRUE utilities.
PolicyOutcome execute_policy(const std::string& policy, const RunArtifacts& artifacts,
                             const ExperimentConfig& config);

struct PolicySummary {
    double mean = 0.0;
    double stddev = 0.0;  // population std; 0 when n_runs == 1
    std::vector<double> run_utilities;
    std::vector<int> run_denials;
};

struct RunRecord {
    int run;
    std::string policy;
    double realized_utility;
    int high_severity_denied;
    double auroc;
};

struct ExperimentReport {
    ExperimentConfig config;
    std::vector<std::string> policies;  // sorted ascending
    std::vector<double> run_aurocs;
    std::map<std::string, PolicySummary> per_policy;

    double mean(const std::string& policy) const;
    /// (mean(a) - mean(b)) / |mean(b)| * 100.
    double relative_gain_pct(const std::string& a, const std::string& b) const;
    /// Rows sorted by (run asc, policy asc) for byte-stable emission.
    std::vector<RunRecord> rows() const;
};

/// Executes config.n_runs seeded runs of every configured policy. Runs are
/// independent; n_threads > 1 executes them in parallel with identical output.
ExperimentReport run_experiment(const ExperimentConfig& config, int n_threads = 1);

struct SweepRatioResult {
    double ratio;
    std::vector<int> capacities;
    std::map<std::string, PolicySummary> per_policy;
    /// Relative advantage of greedy over threshold, percent.
    double advantage_pct;
};

struct SweepReport {
    ExperimentConfig config;
    int runs_per_ratio = 0;
    std::vector<SweepRatioResult> rows;
};

/// For each ratio, scales every capacity to round(ratio * N * (C_j / N))
/// (floored at 1) and reruns the experiment with runs_per_ratio runs.
SweepReport run_sweep(const ExperimentConfig& config, std::span<const double> ratios,
                      int runs_per_ratio, int n_threads = 1);

} // namespace scarcealloc
