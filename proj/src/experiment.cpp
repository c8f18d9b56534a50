#include "scarcealloc/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "scarcealloc/errors.hpp"
#include "scarcealloc/random.hpp"

namespace scarcealloc {

namespace {

enum SeedStream : std::uint64_t {
    kCohortStream = 1,
    kNoiseStream = 2,
    kArrivalStream = 3,
    kRandomPolicyStream = 4,
};

double binned_auroc(const std::vector<Patient>& cohort, double sigma, int n_bins,
                    std::uint64_t noise_seed) {
    return predict_risks(cohort, sigma, n_bins, noise_seed).achieved_auroc;
}

/// Fits sigma on raw scores, then refines it so the recalibrated (binned)
/// predictions hit the target too; binning coarsens the ranking and shifts
/// the AUROC by a few thousandths.
double pin_noise_scale(const std::vector<Patient>& cohort, const CohortSpec& spec,
                       double tolerance, int n_bins, std::uint64_t noise_seed) {
    const double inner_tol = tolerance / 2.0;
    const NoiseFit fit =
        fit_noise_scale(cohort, spec.target_auroc, inner_tol, noise_seed);
    if (fit.noiseless_below_target) return fit.sigma;

    double sigma = fit.sigma;
    double achieved = binned_auroc(cohort, sigma, n_bins, noise_seed);
    if (std::abs(achieved - spec.target_auroc) <= inner_tol) return sigma;

    // bracket on the binned metric (nonincreasing in sigma)
    double lo = 0.0;
    double hi = sigma;
    if (achieved > spec.target_auroc) {
        lo = sigma;
        hi = std::max(sigma * 2.0, 1e-3);
        while (binned_auroc(cohort, hi, n_bins, noise_seed) > spec.target_auroc &&
               hi < 160.0)
            hi *= 2.0;
    } else if (binned_auroc(cohort, 0.0, n_bins, noise_seed) <
               spec.target_auroc - inner_tol) {
        return 0.0;  // binning alone caps the achievable AUROC below target
    }

    double best_sigma = sigma;
    double best_gap = std::abs(achieved - spec.target_auroc);
    for (int iter = 0; iter < 40 && best_gap > inner_tol; ++iter) {
        const double mid = 0.5 * (lo + hi);
        const double a = binned_auroc(cohort, mid, n_bins, noise_seed);
        const double gap = std::abs(a - spec.target_auroc);
        if (gap < best_gap) {
            best_gap = gap;
            best_sigma = mid;
        }
        if (a > spec.target_auroc) lo = mid; else hi = mid;
    }
    return best_sigma;
}

PolicySummary summarize(std::vector<double> utilities, std::vector<int> denials) {
    PolicySummary s;
    s.run_utilities = std::move(utilities);
    s.run_denials = std::move(denials);
    const auto n = static_cast<double>(s.run_utilities.size());
    for (double u : s.run_utilities) s.mean += u;
    s.mean /= n;
    double ss = 0.0;
    for (double u : s.run_utilities) ss += (u - s.mean) * (u - s.mean);
    s.stddev = std::sqrt(ss / n);
    return s;
}

struct RunOutput {
    double auroc = 0.0;
    std::vector<double> utilities;  // by policy order
    std::vector<int> denials;
};

} // namespace

RunArtifacts prepare_run(const ExperimentConfig& config, std::uint64_t root_seed,
                         int run_index) {
    const std::uint64_t run_seed = split_seed(root_seed,
                                              static_cast<std::uint64_t>(run_index));
    RunArtifacts artifacts;
    artifacts.arrival_seed = split_seed(run_seed, kArrivalStream);
    artifacts.random_policy_seed = split_seed(run_seed, kRandomPolicyStream);

    artifacts.cohort = generate_cohort(config.cohort, split_seed(run_seed, kCohortStream));
    const std::uint64_t noise_seed = split_seed(run_seed, kNoiseStream);
    artifacts.fitted_sigma = pin_noise_scale(artifacts.cohort, config.cohort,
                                             config.auroc_tolerance,
                                             config.recalibration_bins, noise_seed);
    artifacts.estimates = predict_risks(artifacts.cohort, artifacts.fitted_sigma,
                                        config.recalibration_bins, noise_seed);

    std::vector<double> true_risks(artifacts.cohort.size());
    for (std::size_t i = 0; i < artifacts.cohort.size(); ++i)
        true_risks[i] = artifacts.cohort[i].baseline_risk;
    artifacts.estimated = utility_matrix(artifacts.cohort, config.cohort.resources,
                                         artifacts.estimates.predicted_risk,
                                         UtilityKind::Estimated);
    artifacts.true_utilities = utility_matrix(artifacts.cohort, config.cohort.resources,
                                              true_risks, UtilityKind::True);
    return artifacts;
}

PolicyOutcome execute_policy(const std::string& policy, const RunArtifacts& artifacts,
                             const ExperimentConfig& config) {
    const auto& resources = config.cohort.resources;
    PolicyOutcome outcome;
    outcome.policy_name = policy;
    if (policy == "greedy") {
        outcome.allocation = policy_utility_greedy(artifacts.estimated, resources);
    } else if (policy == "threshold") {
        Rng rng(artifacts.arrival_seed);
        const auto arrival = rng.permutation(static_cast<int>(artifacts.cohort.size()));
        outcome.allocation = policy_risk_threshold(artifacts.estimates.predicted_risk,
                                                   resources, config.threshold, arrival);
    } else if (policy == "random") {
        outcome.allocation = policy_random(static_cast<int>(artifacts.cohort.size()),
                                           resources, artifacts.random_policy_seed);
    } else if (policy == "exact") {
        outcome.allocation = solve_exact(artifacts.estimated, resources,
                                         artifacts.estimated.n_patients());
    } else {
        throw ValidationError("unknown policy name '" + policy + "'");
    }
    outcome.realized_utility = realized_utility(outcome.allocation,
                                                artifacts.true_utilities,
                                                artifacts.cohort, config.lambda,
                                                config.penalty_mode);
    outcome.n_high_severity_denied = high_severity_denials(outcome.allocation,
                                                           artifacts.cohort,
                                                           config.severity_quantile);
    return outcome;
}

double ExperimentReport::mean(const std::string& policy) const {
    const auto it = per_policy.find(policy);
    if (it == per_policy.end())
        throw ValidationError("report has no policy '" + policy + "'");
    return it->second.mean;
}

double ExperimentReport::relative_gain_pct(const std::string& a,
                                           const std::string& b) const {
    const double mb = mean(b);
    if (mb == 0.0)
        throw UndefinedMetricError("relative gain undefined: mean(" + b + ") is 0");
    return (mean(a) - mb) / std::abs(mb) * 100.0;
}

std::vector<RunRecord> ExperimentReport::rows() const {
    std::vector<RunRecord> out;
    const int n_runs = static_cast<int>(run_aurocs.size());
    out.reserve(static_cast<std::size_t>(n_runs) * policies.size());
    for (int r = 0; r < n_runs; ++r)
        for (const auto& p : policies) {
            const PolicySummary& s = per_policy.at(p);
            out.push_back({r, p, s.run_utilities[r], s.run_denials[r], run_aurocs[r]});
        }
    return out;
}

ExperimentReport run_experiment(const ExperimentConfig& config, int n_threads) {
    config.validate();
    if (n_threads < 1) throw ValidationError("n_threads must be >= 1");

    std::vector<std::string> policies = config.policies;
    std::sort(policies.begin(), policies.end());
    policies.erase(std::unique(policies.begin(), policies.end()), policies.end());

    const int n_runs = config.n_runs;
    std::vector<RunOutput> outputs(n_runs);
    std::vector<std::string> failures(n_runs);

    auto worker = [&](int begin, int end) {
        for (int r = begin; r < end; ++r) {
            try {
                const RunArtifacts artifacts = prepare_run(config, config.root_seed, r);
                RunOutput& out = outputs[r];
                out.auroc = artifacts.estimates.achieved_auroc;
                for (const auto& p : policies) {
                    const PolicyOutcome outcome = execute_policy(p, artifacts, config);
                    out.utilities.push_back(outcome.realized_utility);
                    out.denials.push_back(outcome.n_high_severity_denied);
                }
            } catch (const std::exception& e) {
                failures[r] = e.what();
            }
        }
    };

    if (n_threads == 1 || n_runs == 1) {
        worker(0, n_runs);
    } else {
        const int threads = std::min(n_threads, n_runs);
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (int t = 0; t < threads; ++t) {
            const int begin = n_runs * t / threads;
            const int end = n_runs * (t + 1) / threads;
            pool.emplace_back(worker, begin, end);
        }
        for (auto& th : pool) th.join();
    }

    for (int r = 0; r < n_runs; ++r)
        if (!failures[r].empty())
            throw Error("run " + std::to_string(r) + ": " + failures[r]);

    ExperimentReport report;
    report.config = config;
    report.policies = policies;
    report.run_aurocs.resize(n_runs);
    for (int r = 0; r < n_runs; ++r) report.run_aurocs[r] = outputs[r].auroc;
    for (std::size_t p = 0; p < policies.size(); ++p) {
        std::vector<double> utilities(n_runs);
        std::vector<int> denials(n_runs);
        for (int r = 0; r < n_runs; ++r) {
            utilities[r] = outputs[r].utilities[p];
            denials[r] = outputs[r].denials[p];
        }
        report.per_policy[policies[p]] = summarize(std::move(utilities),
                                                   std::move(denials));
    }
    return report;
}

SweepReport run_sweep(const ExperimentConfig& config, std::span<const double> ratios,
                      int runs_per_ratio, int n_threads) {
    config.validate();
    if (ratios.empty()) throw ValidationError("run_sweep: ratios must not be empty");
    for (std::size_t i = 0; i < ratios.size(); ++i) {
        if (!(ratios[i] > 0.0) || ratios[i] > 1.0)
            throw ValidationError("run_sweep: ratios must lie in (0, 1]");
        if (i > 0 && !(ratios[i] > ratios[i - 1]))
            throw ValidationError("run_sweep: ratios must be strictly increasing");
    }
    if (runs_per_ratio < 1)
        throw ValidationError("run_sweep: runs_per_ratio must be >= 1");
    const auto has = [&](const char* name) {
        return std::find(config.policies.begin(), config.policies.end(), name) !=
               config.policies.end();
    };
    if (!has("greedy") || !has("threshold"))
        throw ValidationError("run_sweep: needs both 'greedy' and 'threshold' policies");

    const double n = config.cohort.n_patients;
    SweepReport sweep;
    sweep.config = config;
    sweep.runs_per_ratio = runs_per_ratio;
    for (const double ratio : ratios) {
        ExperimentConfig scaled = config;
        scaled.n_runs = runs_per_ratio;
        SweepRatioResult row;
        row.ratio = ratio;
        for (auto& resource : scaled.cohort.resources) {
            const double base_share = resource.capacity / n;
            resource.capacity = std::max<long long>(
                1, std::llround(ratio * n * base_share));
            row.capacities.push_back(resource.capacity);
        }
        ExperimentReport report = run_experiment(scaled, n_threads);
        row.advantage_pct = report.relative_gain_pct("greedy", "threshold");
        row.per_policy = std::move(report.per_policy);
        sweep.rows.push_back(std::move(row));
    }
    return sweep;
}

} // namespace scarcealloc
