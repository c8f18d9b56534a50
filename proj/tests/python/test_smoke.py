"""Smoke tests for the Python bindings over the C++ core."""

import math

import pytest

import scarcealloc as sa


def test_cohort_generation_is_deterministic():
    spec = sa.CohortSpec.defaults()
    a = sa.generate_cohort(spec, 7)
    b = sa.generate_cohort(spec, 7)
    assert len(a) == 500
    assert [p.baseline_risk for p in a] == [p.baseline_risk for p in b]
    assert all(0.0 <= p.baseline_risk <= 1.0 for p in a)
    assert all(p.severity_weight > 0.0 for p in a)


def test_auroc_anchors():
    assert sa.auroc([0.9, 0.8, 0.3, 0.2], [1, 1, 0, 0]) == pytest.approx(1.0)
    assert sa.auroc([0.9, 0.2, 0.8, 0.3], [1, 0, 0, 1]) == pytest.approx(0.75)
    with pytest.raises(ValueError):
        sa.auroc([0.1, 0.2], [1, 1])


def test_risk_pipeline_reaches_target_auroc():
    spec = sa.CohortSpec.defaults()
    cohort = sa.generate_cohort(spec, 3)
    fit = sa.fit_noise_scale(cohort, 0.85, 0.01, 5)
    assert not fit.noiseless_below_target
    est = sa.predict_risks(cohort, fit.sigma, 10, 5)
    assert len(est.predicted_risk) == 500
    assert abs(est.achieved_auroc - 0.85) < 0.02


def test_policies_and_realized_utility():
    config = sa.ExperimentConfig.defaults()
    config.cohort.n_patients = 60
    config.cohort.resources = [
        sa.Resource(0, "imaging", 6, 0.3),
        sa.Resource(1, "bed", 4, 0.5),
    ]
    artifacts = sa.prepare_run(config, 11, 0)
    greedy = sa.execute_policy("greedy", artifacts, config)
    random_outcome = sa.execute_policy("random", artifacts, config)
    assert sa.validate_allocation(greedy.allocation, config.cohort.resources).ok()
    assert greedy.realized_utility >= random_outcome.realized_utility


def test_exact_solver_matches_greedy_objective():
    um = sa.UtilityMatrix(5, 2, sa.UtilityKind.Estimated)
    values = [[5.0, 1.0], [4.0, 2.0], [3.0, 0.5], [2.5, 0.1], [0.5, 3.5]]
    for i, row in enumerate(values):
        for j, v in enumerate(row):
            um.set(i, j, v)
    resources = [sa.Resource(0, "a", 2, 0.5), sa.Resource(1, "b", 1, 0.5)]
    exact = sa.solve_exact(um, resources)
    greedy = sa.policy_utility_greedy(um, resources)
    assert sa.allocation_objective(exact, um) == pytest.approx(
        sa.allocation_objective(greedy, um)
    )


def test_evi_discrete_fully_revealing_signal():
    scenario = sa.DiscreteScenario.from_conditionals(
        [0.5, 0.5], [[1.0, 0.0], [0.0, 1.0]]
    )
    assert sa.evi_discrete(scenario) == pytest.approx(0.5)


def test_value_iteration_geometric_series():
    mdp = sa.TabularMDP()
    mdp.n_states = 1
    mdp.n_actions = 1
    mdp.discount = 0.9
    mdp.transition = [1.0]
    mdp.reward = [1.0]
    result = sa.value_iteration(mdp, 1e-9)
    assert result.values[0] == pytest.approx(10.0, abs=1e-8)


def test_belief_update_bayes_example():
    pomdp = sa.make_triage_pomdp(0.8)
    posterior = sa.belief_update(pomdp, sa.Belief([0.5, 0.5]), 0, 1)
    assert posterior.probs[1] == pytest.approx(0.8)
    with pytest.raises(ValueError):
        sa.belief_update(sa.make_triage_pomdp(1.0), sa.Belief([1.0, 0.0]), 0, 1)


def test_cmdp_solver_respects_budget():
    cmdp = sa.make_ward_cmdp(6.0)
    options = sa.DualAscentOptions()
    options.n_dual_iters = 2000
    options.initial_step = 0.3
    solution = sa.solve_cmdp_lagrangian(cmdp, [0.6, 0.3, 0.1], options)
    assert solution.feasible
    assert solution.consumptions[0] <= 6.0 + 1e-3
    assert math.isfinite(solution.value)


def test_experiment_report_and_csv():
    config = sa.ExperimentConfig.defaults()
    config.cohort.n_patients = 80
    config.cohort.resources = [
        sa.Resource(0, "imaging", 8, 0.3),
        sa.Resource(1, "bed", 5, 0.5),
    ]
    config.n_runs = 5
    report = sa.run_experiment(config)
    assert report.mean("greedy") > report.mean("random")
    csv = sa.experiment_csv(report)
    assert csv.startswith("run,policy,realized_utility,high_severity_denied,auroc\n")
    assert csv.count("\n") == 1 + 5 * 3
    assert sa.run_experiment(config, 3) is not None
    assert sa.experiment_csv(sa.run_experiment(config, 3)) == csv


def test_config_parsing_round_trip():
    config = sa.parse_config("cohort.n_patients=42\nlambda=0.25\n")
    assert config.cohort.n_patients == 42
    assert config.lambda_ == pytest.approx(0.25)
    parsed = sa.parse_config(sa.config_to_string(config))
    assert parsed.cohort.n_patients == 42
    with pytest.raises(ValueError):
        sa.parse_config("mystery_key=1\n")
