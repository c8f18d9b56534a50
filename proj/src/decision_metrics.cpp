#include "scarcealloc/decision_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "scarcealloc/errors.hpp"
#include "scarcealloc/random.hpp"

namespace scarcealloc {

namespace {

constexpr double kProbTolerance = 1e-12;
constexpr double kPriorTolerance = 1e-9;

/// Exact-solver allocation scored against the true utilities, no penalty.
double informed_value(const RunArtifacts& artifacts, const ExperimentConfig& config,
                      bool use_true_estimates) {
    const UtilityMatrix& basis =
        use_true_estimates ? artifacts.true_utilities : artifacts.estimated;
    const Allocation alloc = solve_exact(basis, config.cohort.resources,
                                         basis.n_patients());
    return allocation_objective(alloc, artifacts.true_utilities);
}

/// Best allocation when every patient looks identical: exact solve on the
/// per-resource population-mean utilities, scored against the truth.
double uninformed_value(const RunArtifacts& artifacts, const ExperimentConfig& config) {
    const UtilityMatrix& um = artifacts.estimated;
    const int n = um.n_patients();
    const int m = um.n_resources();
    UtilityMatrix prior(n, m, UtilityKind::Estimated);
    for (int j = 0; j < m; ++j) {
        double mean = 0.0;
        for (int i = 0; i < n; ++i) mean += um.at(i, j);
        mean /= static_cast<double>(n);
        for (int i = 0; i < n; ++i) prior.at(i, j) = mean;
    }
    const Allocation alloc = solve_exact(prior, config.cohort.resources, n);
    return allocation_objective(alloc, artifacts.true_utilities);
}

} // namespace

void DiscreteScenario::validate() const {
    if (signal_probs.empty())
        throw ValidationError("scenario: needs at least one signal value");
    if (action_utilities.empty())
        throw ValidationError("scenario: needs at least one action");
    double total = 0.0;
    for (double p : signal_probs) {
        if (!(p >= 0.0)) throw ValidationError("scenario: signal_probs must be >= 0");
        total += p;
    }
    if (std::abs(total - 1.0) > kProbTolerance)
        throw ValidationError("scenario: signal_probs must sum to 1");
    if (prior_action_utilities.size() != action_utilities.size())
        throw ValidationError("scenario: one prior utility per action required");
    for (std::size_t a = 0; a < action_utilities.size(); ++a) {
        if (action_utilities[a].size() != signal_probs.size())
            throw ValidationError("scenario: u(a|x) row length must match signals");
        double expected = 0.0;
        for (std::size_t x = 0; x < signal_probs.size(); ++x)
            expected += signal_probs[x] * action_utilities[a][x];
        if (std::abs(expected - prior_action_utilities[a]) > kPriorTolerance)
            throw ValidationError(
                "scenario: prior utility of action " + std::to_string(a) +
                " violates the law of total expectation");
    }
}

DiscreteScenario DiscreteScenario::from_conditionals(
    std::vector<double> signal_probs, std::vector<std::vector<double>> action_utilities) {
    DiscreteScenario s;
    s.signal_probs = std::move(signal_probs);
    s.action_utilities = std::move(action_utilities);
    s.prior_action_utilities.resize(s.action_utilities.size(), 0.0);
    for (std::size_t a = 0; a < s.action_utilities.size(); ++a)
        for (std::size_t x = 0; x < s.signal_probs.size(); ++x)
            s.prior_action_utilities[a] += s.signal_probs[x] * s.action_utilities[a][x];
    s.validate();
    return s;
}

double evi_discrete(const DiscreteScenario& scenario) {
    scenario.validate();
    double informed = 0.0;
    for (std::size_t x = 0; x < scenario.signal_probs.size(); ++x) {
        double best = -std::numeric_limits<double>::infinity();
        for (const auto& row : scenario.action_utilities)
            best = std::max(best, row[x]);
        informed += scenario.signal_probs[x] * best;
    }
    const double prior = *std::max_element(scenario.prior_action_utilities.begin(),
                                           scenario.prior_action_utilities.end());
    return informed - prior;
}

MonteCarloEstimate evi_allocation(const ExperimentConfig& config, int n_samples,
                                  std::uint64_t seed, bool use_true_estimates) {
    config.validate();
    if (n_samples < 1)
        throw ValidationError("evi_allocation: n_samples must be >= 1");

    std::vector<double> gains(n_samples);
    for (int k = 0; k < n_samples; ++k) {
        const RunArtifacts artifacts = prepare_run(config, seed, k);
        gains[k] = informed_value(artifacts, config, use_true_estimates) -
                   uninformed_value(artifacts, config);
    }
    MonteCarloEstimate estimate;
    estimate.n_samples = n_samples;
    for (double g : gains) estimate.value += g;
    estimate.value /= n_samples;
    if (n_samples > 1) {
        double ss = 0.0;
        for (double g : gains) ss += (g - estimate.value) * (g - estimate.value);
        estimate.std_error = std::sqrt(ss / (n_samples - 1.0) / n_samples);
    }
    return estimate;
}

double allocation_efficiency_ratio(double realized, double oracle) {
    if (!(oracle > 0.0))
        throw UndefinedMetricError(
            "allocation_efficiency_ratio: oracle utility must be > 0");
    return realized / oracle;
}

UtilitySummary constraint_adjusted_utility(const std::string& policy,
                                           const ExperimentConfig& config, int n_runs,
                                           std::uint64_t seed) {
    config.validate();
    if (!is_known_policy(policy))
        throw ValidationError("constraint_adjusted_utility: unknown policy '" + policy +
                              "'");
    if (n_runs < 1)
        throw ValidationError("constraint_adjusted_utility: n_runs must be >= 1");

    UtilitySummary summary;
    summary.n_runs = n_runs;
    std::vector<double> utilities(n_runs);
    for (int r = 0; r < n_runs; ++r) {
        const RunArtifacts artifacts = prepare_run(config, seed, r);
        utilities[r] = execute_policy(policy, artifacts, config).realized_utility;
    }
    for (double u : utilities) summary.mean += u;
    summary.mean /= n_runs;
    double ss = 0.0;
    for (double u : utilities) ss += (u - summary.mean) * (u - summary.mean);
    summary.stddev = std::sqrt(ss / n_runs);
    return summary;
}

MetricReport compute_metric_report(const ExperimentConfig& config, int evi_samples,
                                   std::uint64_t seed) {
    config.validate();
    if (evi_samples < 1)
        throw ValidationError("compute_metric_report: evi_samples must be >= 1");

    MetricReport report;
    for (const auto& policy : config.policies) {
        if (report.per_policy.count(policy)) continue;
        report.per_policy[policy] =
            constraint_adjusted_utility(policy, config, config.n_runs, seed);
    }
    if (!report.per_policy.count("greedy"))
        report.per_policy["greedy"] =
            constraint_adjusted_utility("greedy", config, config.n_runs, seed);
    report.cau_mean = report.per_policy.at("greedy").mean;
    report.cau_std = report.per_policy.at("greedy").stddev;

    const MonteCarloEstimate evi = evi_allocation(config, evi_samples,
                                                  split_seed(seed, 101));
    report.evi = evi.value;
    report.evi_stderr = evi.std_error;
    if (report.evi < -(3.0 * report.evi_stderr + 1e-9))
        throw ValidationError("metric report: EVI fell below the Monte Carlo floor");

    // mean per-run efficiency of greedy against the perfect-information oracle
    double ratio_sum = 0.0;
    for (int r = 0; r < config.n_runs; ++r) {
        const RunArtifacts artifacts = prepare_run(config, seed, r);
        const double realized =
            execute_policy("greedy", artifacts, config).realized_utility;
        const Allocation oracle_alloc =
            solve_exact(artifacts.true_utilities, config.cohort.resources,
                        artifacts.true_utilities.n_patients());
        const double oracle = realized_utility(oracle_alloc, artifacts.true_utilities,
                                               artifacts.cohort, config.lambda,
                                               config.penalty_mode);
        ratio_sum += allocation_efficiency_ratio(realized, oracle);
    }
    report.aer = ratio_sum / config.n_runs;
    if (report.aer > 1.0 + 1e-9)
        throw ValidationError("metric report: efficiency ratio exceeded 1");
    return report;
}

} // namespace scarcealloc
