#include <doctest.h>

#include <cmath>

#include "scarcealloc/decision_metrics.hpp"
#include "scarcealloc/errors.hpp"
#include "scarcealloc/random.hpp"

using namespace scarcealloc;

namespace {

/// Small, fast config for Monte Carlo paths.
ExperimentConfig small_config() {
    ExperimentConfig config;
    config.cohort.n_patients = 80;
    config.cohort.resources = {
        {0, "imaging", 8, 0.3},
        {1, "monitored_bed", 5, 0.5},
    };
    config.n_runs = 10;
    return config;
}

DiscreteScenario random_scenario(Rng& rng) {
    const int n_signals = 1 + static_cast<int>(rng.uniform_below(5));
    const int n_actions = 1 + static_cast<int>(rng.uniform_below(4));
    std::vector<double> probs(n_signals);
    double total = 0.0;
    for (auto& p : probs) {
        p = -std::log(1.0 - rng.uniform());
        total += p;
    }
    for (auto& p : probs) p /= total;
    double sum = 0.0;
    for (double p : probs) sum += p;
    probs.back() += 1.0 - sum;
    std::vector<std::vector<double>> utilities(n_actions,
                                               std::vector<double>(n_signals));
    for (auto& row : utilities)
        for (auto& u : row) u = rng.uniform() * 10.0 - 5.0;
    return DiscreteScenario::from_conditionals(std::move(probs), std::move(utilities));
}

} // namespace

TEST_CASE("evi_discrete worked examples") {
    SUBCASE("signal-independent utilities have zero information value") {
        const auto s = DiscreteScenario::from_conditionals(
            {0.3, 0.7}, {{2.0, 2.0}, {1.0, 1.0}});
        CHECK(evi_discrete(s) == doctest::Approx(0.0));
    }

    SUBCASE("fully revealing binary signal is worth 0.5") {
        // two actions, each best under one signal: informed 1, prior 0.5
        const auto s = DiscreteScenario::from_conditionals(
            {0.5, 0.5}, {{1.0, 0.0}, {0.0, 1.0}});
        CHECK(evi_discrete(s) == doctest::Approx(0.5).epsilon(1e-15));
    }

    SUBCASE("a single action leaves nothing to improve") {
        const auto s = DiscreteScenario::from_conditionals(
            {0.25, 0.75}, {{3.0, -1.0}});
        CHECK(evi_discrete(s) == doctest::Approx(0.0));
    }
}

TEST_CASE("evi_discrete is nonnegative on random scenarios") {
    Rng rng(31);
    for (int trial = 0; trial < 500; ++trial)
        CHECK(evi_discrete(random_scenario(rng)) >= -1e-12);
}

TEST_CASE("scenario invariants are enforced") {
    DiscreteScenario bad;
    bad.signal_probs = {0.6, 0.6};
    bad.action_utilities = {{1.0, 0.0}};
    bad.prior_action_utilities = {0.6};
    CHECK_THROWS_AS(evi_discrete(bad), ValidationError);

    DiscreteScenario wrong_prior;
    wrong_prior.signal_probs = {0.5, 0.5};
    wrong_prior.action_utilities = {{1.0, 0.0}};
    wrong_prior.prior_action_utilities = {0.9};  // should be 0.5
    CHECK_THROWS_AS(evi_discrete(wrong_prior), ValidationError);
}

TEST_CASE("evi_allocation: zero capacities give exactly zero") {
    ExperimentConfig config = small_config();
    for (auto& r : config.cohort.resources) r.capacity = 0;
    const auto estimate = evi_allocation(config, 5, 42);
    CHECK(estimate.value == 0.0);
    CHECK(estimate.std_error == 0.0);
}

TEST_CASE("evi_allocation: non-binding capacities give zero within noise") {
    ExperimentConfig config = small_config();
    for (auto& r : config.cohort.resources) r.capacity = config.cohort.n_patients;
    const auto estimate = evi_allocation(config, 20, 42);
    CHECK(std::abs(estimate.value) <= 3.0 * estimate.std_error + 1e-9);
}

TEST_CASE("evi_allocation: perfect estimates bound noisy estimates") {
    const ExperimentConfig config = small_config();
    const auto noisy = evi_allocation(config, 40, 7, false);
    const auto perfect = evi_allocation(config, 40, 7, true);
    CHECK(noisy.value > 0.0);
    CHECK(perfect.value >=
          noisy.value - 3.0 * (noisy.std_error + perfect.std_error));
}

TEST_CASE("allocation_efficiency_ratio") {
    CHECK(allocation_efficiency_ratio(4.0, 4.0) == doctest::Approx(1.0));
    CHECK(allocation_efficiency_ratio(0.0, 4.0) == doctest::Approx(0.0));
    CHECK(allocation_efficiency_ratio(-1.0, 4.0) == doctest::Approx(-0.25));
    CHECK_THROWS_AS(allocation_efficiency_ratio(1.0, 0.0), UndefinedMetricError);
    CHECK_THROWS_AS(allocation_efficiency_ratio(1.0, -2.0), UndefinedMetricError);
}

TEST_CASE("efficiency of greedy against the oracle lies in (0, 1]") {
    const ExperimentConfig config = small_config();
    for (int r = 0; r < 5; ++r) {
        const auto artifacts = prepare_run(config, 99, r);
        const double realized =
            execute_policy("greedy", artifacts, config).realized_utility;
        const auto oracle_alloc = solve_exact(artifacts.true_utilities,
                                              config.cohort.resources,
                                              config.cohort.n_patients);
        const double oracle = realized_utility(oracle_alloc, artifacts.true_utilities,
                                               artifacts.cohort, config.lambda);
        const double ratio = allocation_efficiency_ratio(realized, oracle);
        CHECK(ratio > 0.0);
        CHECK(ratio <= 1.0 + 1e-9);
    }
}

TEST_CASE("exact-on-true scores ratio exactly 1 against itself") {
    const ExperimentConfig config = small_config();
    const auto artifacts = prepare_run(config, 5, 0);
    const auto oracle_alloc = solve_exact(artifacts.true_utilities,
                                          config.cohort.resources,
                                          config.cohort.n_patients);
    const double oracle = realized_utility(oracle_alloc, artifacts.true_utilities,
                                           artifacts.cohort, config.lambda);
    CHECK(allocation_efficiency_ratio(oracle, oracle) == doctest::Approx(1.0));
}

TEST_CASE("constraint_adjusted_utility") {
    const ExperimentConfig config = small_config();

    SUBCASE("single run reports zero std") {
        const auto summary = constraint_adjusted_utility("greedy", config, 1, 3);
        CHECK(summary.n_runs == 1);
        CHECK(summary.stddev == 0.0);
    }

    SUBCASE("unknown policy rejected") {
        CHECK_THROWS_AS(constraint_adjusted_utility("triage", config, 2, 3),
                        ValidationError);
    }

    SUBCASE("deterministic in the seed") {
        const auto a = constraint_adjusted_utility("random", config, 5, 11);
        const auto b = constraint_adjusted_utility("random", config, 5, 11);
        CHECK(a.mean == b.mean);
        CHECK(a.stddev == b.stddev);
    }

    SUBCASE("greedy beats random on average") {
        const auto greedy = constraint_adjusted_utility("greedy", config, 20, 13);
        const auto random_summary =
            constraint_adjusted_utility("random", config, 20, 13);
        CHECK(greedy.mean > random_summary.mean);
    }
}

TEST_CASE("metric report bundles the decision-centric metrics") {
    ExperimentConfig config = small_config();
    config.n_runs = 8;
    const auto report = compute_metric_report(config, 10, 17);
    CHECK(report.cau_mean > 0.0);
    CHECK(report.cau_std >= 0.0);
    CHECK(report.evi >= -(3.0 * report.evi_stderr + 1e-9));
    CHECK(report.aer > 0.0);
    CHECK(report.aer <= 1.0 + 1e-9);
    CHECK(report.per_policy.count("greedy") == 1);
}
