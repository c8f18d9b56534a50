#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "scarcealloc/allocation.hpp"
#include "scarcealloc/population.hpp"

namespace scarcealloc {

inline constexpr const char* kSeedEnvVar = "SCARCE_ALLOC_SEED";

struct ExperimentConfig {
    CohortSpec cohort = CohortSpec::defaults();
    double lambda = 0.0015;
    double threshold = 0.6;
    std::vector<std::string> policies = {"greedy", "random", "threshold"};
    int n_runs = 100;
    std::uint64_t root_seed = 20240817;
    double severity_quantile = 0.9;
    double auroc_tolerance = 0.01;
    int recalibration_bins = 10;
    PenaltyMode penalty_mode = PenaltyMode::UnallocatedPatients;

    void validate() const;

    /// Shipped defaults (the §-free description lives in the README): 500
    /// patients, capacities (50, 30), target AUROC 0.85, 100 runs.
    static ExperimentConfig defaults();
};

/// Known policy names: "greedy", "threshold", "random", "exact".
bool is_known_policy(const std::string& name);

/// Parses key=value lines ('#' comments, dotted keys). Unknown keys are
/// rejected with their line number; absent keys keep their defaults. The
/// SCARCE_ALLOC_SEED environment variable seeds root_seed at lowest
/// precedence (an explicit root_seed key wins).
ExperimentConfig parse_config(const std::string& text);

ExperimentConfig load_config(const std::filesystem::path& path);

/// key=value echo of every setting, in the file format parse_config accepts.
std::string config_to_string(const ExperimentConfig& config);

} // namespace scarcealloc
