#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "scarcealloc/decision_metrics.hpp"
#include "scarcealloc/emit.hpp"
#include "scarcealloc/errors.hpp"
#include "scarcealloc/experiment.hpp"
#include "scarcealloc/seqcare.hpp"

namespace py = pybind11;
using namespace scarcealloc;

namespace {

std::vector<std::vector<double>> matrix_rows(const UtilityMatrix& um) {
    std::vector<std::vector<double>> rows(um.n_patients(),
                                          std::vector<double>(um.n_resources()));
    for (int i = 0; i < um.n_patients(); ++i)
        for (int j = 0; j < um.n_resources(); ++j) rows[i][j] = um.at(i, j);
    return rows;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Scarcity-constrained allocation simulator (C++ core)";

    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<UndefinedMetricError>(m, "UndefinedMetricError",
                                                 PyExc_ValueError);
    py::register_exception<ImpossibleObservationError>(m, "ImpossibleObservationError",
                                                       PyExc_ValueError);
    py::register_exception<InfeasibleBudgetError>(m, "InfeasibleBudgetError",
                                                  PyExc_ValueError);
    py::register_exception<Error>(m, "Error", PyExc_RuntimeError);

    // population ------------------------------------------------------------
    py::class_<Patient>(m, "Patient")
        .def(py::init<>())
        .def_readwrite("id", &Patient::id)
        .def_readwrite("severity_weight", &Patient::severity_weight)
        .def_readwrite("baseline_risk", &Patient::baseline_risk)
        .def_readwrite("raw_score", &Patient::raw_score)
        .def_readwrite("outcome", &Patient::outcome);

    py::class_<Resource>(m, "Resource")
        .def(py::init<>())
        .def(py::init([](int id, const std::string& name, int capacity, double rho) {
                 return Resource{id, name, capacity, rho};
             }),
             py::arg("id"), py::arg("name"), py::arg("capacity"),
             py::arg("risk_reduction_factor"))
        .def_readwrite("id", &Resource::id)
        .def_readwrite("name", &Resource::name)
        .def_readwrite("capacity", &Resource::capacity)
        .def_readwrite("risk_reduction_factor", &Resource::risk_reduction_factor);

    py::class_<CohortSpec>(m, "CohortSpec")
        .def(py::init<>())
        .def_static("defaults", &CohortSpec::defaults)
        .def_readwrite("n_patients", &CohortSpec::n_patients)
        .def_readwrite("severity_shape", &CohortSpec::severity_shape)
        .def_readwrite("severity_scale", &CohortSpec::severity_scale)
        .def_readwrite("risk_alpha", &CohortSpec::risk_alpha)
        .def_readwrite("risk_beta", &CohortSpec::risk_beta)
        .def_readwrite("resources", &CohortSpec::resources)
        .def_readwrite("target_auroc", &CohortSpec::target_auroc)
        .def("validate", &CohortSpec::validate);

    py::class_<RiskEstimates>(m, "RiskEstimates")
        .def_readonly("predicted_risk", &RiskEstimates::predicted_risk)
        .def_readonly("noise_sigma", &RiskEstimates::noise_sigma)
        .def_readonly("achieved_auroc", &RiskEstimates::achieved_auroc);

    py::class_<NoiseFit>(m, "NoiseFit")
        .def_readonly("sigma", &NoiseFit::sigma)
        .def_readonly("achieved_auroc", &NoiseFit::achieved_auroc)
        .def_readonly("noiseless_below_target", &NoiseFit::noiseless_below_target)
        .def_readonly("trace", &NoiseFit::trace);

    m.def("generate_cohort", &generate_cohort, py::arg("spec"), py::arg("seed"));
    m.def("auroc",
          [](const std::vector<double>& scores, const std::vector<int>& outcomes) {
              return auroc(scores, outcomes);
          },
          py::arg("scores"), py::arg("outcomes"));
    m.def("fit_noise_scale", &fit_noise_scale, py::arg("cohort"),
          py::arg("target_auroc"), py::arg("tolerance"), py::arg("seed"));
    m.def("predict_risks", &predict_risks, py::arg("cohort"), py::arg("sigma"),
          py::arg("n_bins"), py::arg("seed"));
    m.def("calibration_error",
          [](const std::vector<double>& predictions, const std::vector<int>& outcomes,
             int n_bins) { return calibration_error(predictions, outcomes, n_bins); },
          py::arg("predictions"), py::arg("outcomes"), py::arg("n_bins"));

    // allocation ------------------------------------------------------------
    py::enum_<UtilityKind>(m, "UtilityKind")
        .value("Estimated", UtilityKind::Estimated)
        .value("True", UtilityKind::True);

    py::enum_<PenaltyMode>(m, "PenaltyMode")
        .value("UnallocatedPatients", PenaltyMode::UnallocatedPatients)
        .value("PerResourceShortfall", PenaltyMode::PerResourceShortfall);

    py::class_<UtilityMatrix>(m, "UtilityMatrix")
        .def(py::init<int, int, UtilityKind>(), py::arg("n_patients"),
             py::arg("n_resources"), py::arg("kind"))
        .def("at", py::overload_cast<int, int>(&UtilityMatrix::at, py::const_),
             py::arg("patient"), py::arg("resource"))
        .def("set",
             [](UtilityMatrix& um, int i, int j, double v) { um.at(i, j) = v; },
             py::arg("patient"), py::arg("resource"), py::arg("value"))
        .def_property_readonly("n_patients", &UtilityMatrix::n_patients)
        .def_property_readonly("n_resources", &UtilityMatrix::n_resources)
        .def_property_readonly("kind", &UtilityMatrix::kind)
        .def("rows", &matrix_rows);

    py::class_<Allocation>(m, "Allocation")
        .def(py::init<>())
        .def_readwrite("assignments", &Allocation::assignments)
        .def_readwrite("capacities", &Allocation::capacities)
        .def_readwrite("capped", &Allocation::capped);

    py::class_<CapacityViolation>(m, "CapacityViolation")
        .def_readonly("resource_id", &CapacityViolation::resource_id)
        .def_readonly("assigned", &CapacityViolation::assigned)
        .def_readonly("capacity", &CapacityViolation::capacity);

    py::class_<DuplicatePair>(m, "DuplicatePair")
        .def_readonly("patient_id", &DuplicatePair::patient_id)
        .def_readonly("resource_id", &DuplicatePair::resource_id);

    py::class_<AllocationReport>(m, "AllocationReport")
        .def_readonly("capacity_violations", &AllocationReport::capacity_violations)
        .def_readonly("duplicates", &AllocationReport::duplicates)
        .def("ok", &AllocationReport::ok)
        .def("describe", &AllocationReport::describe);

    m.def("utility_matrix",
          [](const std::vector<Patient>& cohort, const std::vector<Resource>& resources,
             const std::vector<double>& risks, UtilityKind kind) {
              return utility_matrix(cohort, resources, risks, kind);
          },
          py::arg("cohort"), py::arg("resources"), py::arg("risks"), py::arg("kind"));
    m.def("policy_risk_threshold",
          [](const std::vector<double>& risks, const std::vector<Resource>& resources,
             double threshold, const std::vector<int>& arrival_order) {
              return policy_risk_threshold(risks, resources, threshold, arrival_order);
          },
          py::arg("risks"), py::arg("resources"), py::arg("threshold"),
          py::arg("arrival_order"));
    m.def("policy_utility_greedy", &policy_utility_greedy, py::arg("um"),
          py::arg("resources"));
    m.def("policy_random", &policy_random, py::arg("n_patients"), py::arg("resources"),
          py::arg("seed"));
    m.def("solve_exact", &solve_exact, py::arg("um"), py::arg("resources"),
          py::arg("size_limit") = 20);
    m.def("allocation_objective", &allocation_objective, py::arg("allocation"),
          py::arg("um"));
    m.def("realized_utility", &realized_utility, py::arg("allocation"),
          py::arg("true_um"), py::arg("cohort"), py::arg("lambda"),
          py::arg("mode") = PenaltyMode::UnallocatedPatients);
    m.def("validate_allocation", &validate_allocation, py::arg("allocation"),
          py::arg("resources"));
    m.def("high_severity_denials", &high_severity_denials, py::arg("allocation"),
          py::arg("cohort"), py::arg("quantile"));

    // decision metrics -------------------------------------------------------
    py::class_<DiscreteScenario>(m, "DiscreteScenario")
        .def(py::init<>())
        .def_static("from_conditionals", &DiscreteScenario::from_conditionals,
                    py::arg("signal_probs"), py::arg("action_utilities"))
        .def_readwrite("signal_probs", &DiscreteScenario::signal_probs)
        .def_readwrite("action_utilities", &DiscreteScenario::action_utilities)
        .def_readwrite("prior_action_utilities",
                       &DiscreteScenario::prior_action_utilities)
        .def("validate", &DiscreteScenario::validate);

    py::class_<MonteCarloEstimate>(m, "MonteCarloEstimate")
        .def_readonly("value", &MonteCarloEstimate::value)
        .def_readonly("std_error", &MonteCarloEstimate::std_error)
        .def_readonly("n_samples", &MonteCarloEstimate::n_samples);

    py::class_<UtilitySummary>(m, "UtilitySummary")
        .def_readonly("mean", &UtilitySummary::mean)
        .def_readonly("stddev", &UtilitySummary::stddev)
        .def_readonly("n_runs", &UtilitySummary::n_runs);

    py::class_<MetricReport>(m, "MetricReport")
        .def_readonly("cau_mean", &MetricReport::cau_mean)
        .def_readonly("cau_std", &MetricReport::cau_std)
        .def_readonly("evi", &MetricReport::evi)
        .def_readonly("evi_stderr", &MetricReport::evi_stderr)
        .def_readonly("aer", &MetricReport::aer)
        .def_readonly("per_policy", &MetricReport::per_policy);

    m.def("evi_discrete", &evi_discrete, py::arg("scenario"));
    m.def("evi_allocation", &evi_allocation, py::arg("config"), py::arg("n_samples"),
          py::arg("seed"), py::arg("use_true_estimates") = false);
    m.def("allocation_efficiency_ratio", &allocation_efficiency_ratio,
          py::arg("realized"), py::arg("oracle"));
    m.def("constraint_adjusted_utility", &constraint_adjusted_utility,
          py::arg("policy"), py::arg("config"), py::arg("n_runs"), py::arg("seed"));
    m.def("compute_metric_report", &compute_metric_report, py::arg("config"),
          py::arg("evi_samples"), py::arg("seed"));

    // seqcare ---------------------------------------------------------------
    py::class_<TabularMDP>(m, "TabularMDP")
        .def(py::init<>())
        .def_readwrite("n_states", &TabularMDP::n_states)
        .def_readwrite("n_actions", &TabularMDP::n_actions)
        .def_readwrite("transition", &TabularMDP::transition)
        .def_readwrite("reward", &TabularMDP::reward)
        .def_readwrite("discount", &TabularMDP::discount)
        .def("validate", &TabularMDP::validate);

    py::class_<TabularCMDP>(m, "TabularCMDP")
        .def(py::init<>())
        .def_readwrite("base", &TabularCMDP::base)
        .def_readwrite("consumptions", &TabularCMDP::consumptions)
        .def_readwrite("budgets", &TabularCMDP::budgets)
        .def("validate", &TabularCMDP::validate);

    py::class_<Belief>(m, "Belief")
        .def(py::init<>())
        .def(py::init([](std::vector<double> probs) {
                 Belief b;
                 b.probs = std::move(probs);
                 return b;
             }),
             py::arg("probs"))
        .def_readwrite("probs", &Belief::probs)
        .def("validate", &Belief::validate);

    py::class_<TabularPOMDP>(m, "TabularPOMDP")
        .def(py::init<>())
        .def_readwrite("base", &TabularPOMDP::base)
        .def_readwrite("n_observations", &TabularPOMDP::n_observations)
        .def_readwrite("observation", &TabularPOMDP::observation)
        .def("validate", &TabularPOMDP::validate);

    py::class_<ValueIterationResult>(m, "ValueIterationResult")
        .def_readonly("values", &ValueIterationResult::values)
        .def_readonly("policy", &ValueIterationResult::policy)
        .def_readonly("residuals", &ValueIterationResult::residuals)
        .def_readonly("iterations", &ValueIterationResult::iterations);

    py::class_<DualAscentOptions>(m, "DualAscentOptions")
        .def(py::init<>())
        .def_readwrite("n_dual_iters", &DualAscentOptions::n_dual_iters)
        .def_readwrite("initial_step", &DualAscentOptions::initial_step)
        .def_readwrite("tolerance", &DualAscentOptions::tolerance)
        .def_readwrite("inner_tolerance", &DualAscentOptions::inner_tolerance)
        .def_readwrite("trace_stride", &DualAscentOptions::trace_stride);

    py::class_<CmdpSolution>(m, "CmdpSolution")
        .def_readonly("policies", &CmdpSolution::policies)
        .def_readonly("weights", &CmdpSolution::weights)
        .def_readonly("multipliers", &CmdpSolution::multipliers)
        .def_readonly("value", &CmdpSolution::value)
        .def_readonly("consumptions", &CmdpSolution::consumptions)
        .def_readonly("feasible", &CmdpSolution::feasible)
        .def_readonly("duality_gap", &CmdpSolution::duality_gap)
        .def_readonly("multiplier_trace", &CmdpSolution::multiplier_trace);

    m.def("value_iteration", &value_iteration, py::arg("mdp"),
          py::arg("tolerance") = 1e-9, py::arg("max_iters") = 1000000);
    m.def("policy_evaluation",
          [](const TabularMDP& mdp, const std::vector<int>& policy, double tolerance) {
              return policy_evaluation(mdp, policy, tolerance);
          },
          py::arg("mdp"), py::arg("policy"), py::arg("tolerance") = 1e-10);
    m.def("discounted_consumption",
          [](const TabularCMDP& cmdp, const std::vector<int>& policy, int resource,
             const std::vector<double>& start, double tolerance) {
              return discounted_consumption(cmdp, policy, resource, start, tolerance);
          },
          py::arg("cmdp"), py::arg("policy"), py::arg("resource"), py::arg("start"),
          py::arg("tolerance") = 1e-10);
    m.def("solve_cmdp_lagrangian",
          [](const TabularCMDP& cmdp, const std::vector<double>& start,
             const DualAscentOptions& options) {
              return solve_cmdp_lagrangian(cmdp, start, options);
          },
          py::arg("cmdp"), py::arg("start"),
          py::arg("options") = DualAscentOptions{});
    m.def("belief_update", &belief_update, py::arg("pomdp"), py::arg("belief"),
          py::arg("action"), py::arg("observation"));
    m.def("test_information_value", &test_information_value, py::arg("pomdp"),
          py::arg("prior"), py::arg("test_action"), py::arg("terminal_utilities"),
          py::arg("cost"));
    m.def("make_triage_pomdp", &make_triage_pomdp, py::arg("test_accuracy"));
    m.def("triage_terminal_utilities", &triage_terminal_utilities);
    m.def("make_ward_cmdp", &make_ward_cmdp, py::arg("budget"));
    m.def("load_cmdp", &load_cmdp, py::arg("path"));
    m.def("load_start_distribution", &load_start_distribution, py::arg("path"),
          py::arg("n_states"));

    // harness ---------------------------------------------------------------
    py::class_<ExperimentConfig>(m, "ExperimentConfig")
        .def(py::init<>())
        .def_static("defaults", &ExperimentConfig::defaults)
        .def_readwrite("cohort", &ExperimentConfig::cohort)
        .def_readwrite("lambda_", &ExperimentConfig::lambda)
        .def_readwrite("threshold", &ExperimentConfig::threshold)
        .def_readwrite("policies", &ExperimentConfig::policies)
        .def_readwrite("n_runs", &ExperimentConfig::n_runs)
        .def_readwrite("root_seed", &ExperimentConfig::root_seed)
        .def_readwrite("severity_quantile", &ExperimentConfig::severity_quantile)
        .def_readwrite("auroc_tolerance", &ExperimentConfig::auroc_tolerance)
        .def_readwrite("recalibration_bins", &ExperimentConfig::recalibration_bins)
        .def_readwrite("penalty_mode", &ExperimentConfig::penalty_mode)
        .def("validate", &ExperimentConfig::validate);

    py::class_<RunArtifacts>(m, "RunArtifacts")
        .def_readonly("cohort", &RunArtifacts::cohort)
        .def_readonly("estimates", &RunArtifacts::estimates)
        .def_readonly("estimated", &RunArtifacts::estimated)
        .def_readonly("true_utilities", &RunArtifacts::true_utilities)
        .def_readonly("fitted_sigma", &RunArtifacts::fitted_sigma);

    py::class_<PolicyOutcome>(m, "PolicyOutcome")
        .def_readonly("allocation", &PolicyOutcome::allocation)
        .def_readonly("realized_utility", &PolicyOutcome::realized_utility)
        .def_readonly("n_high_severity_denied", &PolicyOutcome::n_high_severity_denied)
        .def_readonly("policy_name", &PolicyOutcome::policy_name);

    py::class_<PolicySummary>(m, "PolicySummary")
        .def_readonly("mean", &PolicySummary::mean)
        .def_readonly("stddev", &PolicySummary::stddev)
        .def_readonly("run_utilities", &PolicySummary::run_utilities)
        .def_readonly("run_denials", &PolicySummary::run_denials);

    py::class_<ExperimentReport>(m, "ExperimentReport")
        .def_readonly("policies", &ExperimentReport::policies)
        .def_readonly("run_aurocs", &ExperimentReport::run_aurocs)
        .def_readonly("per_policy", &ExperimentReport::per_policy)
        .def("mean", &ExperimentReport::mean, py::arg("policy"))
        .def("relative_gain_pct", &ExperimentReport::relative_gain_pct, py::arg("a"),
             py::arg("b"));

    py::class_<SweepRatioResult>(m, "SweepRatioResult")
        .def_readonly("ratio", &SweepRatioResult::ratio)
        .def_readonly("capacities", &SweepRatioResult::capacities)
        .def_readonly("per_policy", &SweepRatioResult::per_policy)
        .def_readonly("advantage_pct", &SweepRatioResult::advantage_pct);

    py::class_<SweepReport>(m, "SweepReport")
        .def_readonly("runs_per_ratio", &SweepReport::runs_per_ratio)
        .def_readonly("rows", &SweepReport::rows);

    m.def("parse_config", &parse_config, py::arg("text"));
    m.def("load_config", &load_config, py::arg("path"));
    m.def("config_to_string", &config_to_string, py::arg("config"));
    m.def("prepare_run", &prepare_run, py::arg("config"), py::arg("root_seed"),
          py::arg("run_index"));
    m.def("execute_policy", &execute_policy, py::arg("policy"), py::arg("artifacts"),
          py::arg("config"));
    m.def("run_experiment", &run_experiment, py::arg("config"),
          py::arg("n_threads") = 1);
    m.def("run_sweep",
          [](const ExperimentConfig& config, const std::vector<double>& ratios,
             int runs_per_ratio, int n_threads) {
              return run_sweep(config, ratios, runs_per_ratio, n_threads);
          },
          py::arg("config"), py::arg("ratios"), py::arg("runs_per_ratio"),
          py::arg("n_threads") = 1);
    m.def("experiment_csv", &experiment_csv, py::arg("report"));
    m.def("sweep_csv", &sweep_csv, py::arg("report"));
    m.def("metrics_csv", &metrics_csv, py::arg("report"));
    m.def("experiment_chart_svg", &experiment_chart_svg, py::arg("report"));
    m.def("sweep_chart_svg", &sweep_chart_svg, py::arg("report"));
    m.def("emit_csv",
          py::overload_cast<const ExperimentReport&, const std::filesystem::path&>(
              &emit_csv),
          py::arg("report"), py::arg("path"));
    m.def("emit_sweep_csv",
          py::overload_cast<const SweepReport&, const std::filesystem::path&>(&emit_csv),
          py::arg("report"), py::arg("path"));
    m.def("emit_chart",
          py::overload_cast<const ExperimentReport&, const std::filesystem::path&>(
              &emit_chart),
          py::arg("report"), py::arg("path"));
    m.def("emit_sweep_chart",
          py::overload_cast<const SweepReport&, const std::filesystem::path&>(
              &emit_chart),
          py::arg("report"), py::arg("path"));
    m.def("meta_text",
          py::overload_cast<const ExperimentReport&>(&meta_text), py::arg("report"));

    m.attr("__version__") = SCARCEALLOC_VERSION;
}
