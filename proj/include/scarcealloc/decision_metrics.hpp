#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "scarcealloc/config.hpp"
#include "scarcealloc/experiment.hpp"

namespace scarcealloc {

/// Finite decision problem for the exact value-of-information formula.
/// action_utilities[a][x] = u(a|x); prior_action_utilities[a] must equal the
/// signal-weighted average of u(a|x) (law of total expectation, checked).
struct DiscreteScenario {
    std::vector<double> signal_probs;
    std::vector<std::vector<double>> action_utilities;
    std::vector<double> prior_action_utilities;

    void validate() const;

    /// Builds a scenario with the priors computed from the conditionals.
    static DiscreteScenario from_conditionals(
        std::vector<double> signal_probs,
        std::vector<std::vector<double>> action_utilities);
};

/// sum_x P(x) max_a u(a|x) - max_a E[u(a)], by enumeration.
double evi_discrete(const DiscreteScenario& scenario);

struct MonteCarloEstimate {
    double value = 0.0;
    double std_error = 0.0;
    int n_samples = 0;
};

/// Allocation-level EVI: informed (exact solve on estimates, scored on true
/// utilities) minus uninformed (exact solve on per-resource population-mean
/// utilities, scored on true utilities), Monte Carlo over cohorts, no lambda
/// penalty. With use_true_estimates the informed side sees the true utilities
/// (perfect information).
MonteCarloEstimate evi_allocation(const ExperimentConfig& config, int n_samples,
                                  std::uint64_t seed, bool use_true_estimates = false);

/// realized / oracle. Throws UndefinedMetricError when oracle <= 0.
double allocation_efficiency_ratio(double realized, double oracle);

struct UtilitySummary {
    double mean = 0.0;
    double stddev = 0.0;  // population std; 0 when n_runs == 1
    int n_runs = 0;
};

/// Mean and std of the named policy's realized utility across seeded runs.
UtilitySummary constraint_adjusted_utility(const std::string& policy,
                                           const ExperimentConfig& config, int n_runs,
                                           std::uint64_t seed);

struct MetricReport {
    double cau_mean = 0.0;
    double cau_std = 0.0;
    double evi = 0.0;
    double evi_stderr = 0.0;
    double aer = 0.0;
    std::map<std::string, UtilitySummary> per_policy;
};

/// The decision-centric metric bundle: constraint-adjusted utility of the
/// greedy policy, allocation-level EVI, and the mean per-run efficiency ratio
/// against the perfect-information oracle.
MetricReport compute_metric_report(const ExperimentConfig& config, int evi_samples,
                                   std::uint64_t seed);

} // namespace scarcealloc
