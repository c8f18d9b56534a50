#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace scarcealloc {

/// Dense tabular MDP. transition is laid out [s][a][s'], reward [s][a].
struct TabularMDP {
    int n_states = 0;
    int n_actions = 0;
    std::vector<double> transition;
    std::vector<double> reward;
    double discount = 0.9;

    double t(int s, int a, int s2) const {
        return transition[(static_cast<std::size_t>(s) * n_actions + a) * n_states + s2];
    }
    double& t(int s, int a, int s2) {
        return transition[(static_cast<std::size_t>(s) * n_actions + a) * n_states + s2];
    }
    double r(int s, int a) const {
        return reward[static_cast<std::size_t>(s) * n_actions + a];
    }
    double& r(int s, int a) {
        return reward[static_cast<std::size_t>(s) * n_actions + a];
    }

    void validate() const;
};

/// MDP plus expected-discounted-consumption constraints
/// E[sum gamma^t g_j(s_t,a_t)] <= budget_j.
struct TabularCMDP {
    TabularMDP base;
    /// One [s][a] table per constrained resource, entries >= 0.
    std::vector<std::vector<double>> consumptions;
    std::vector<double> budgets;

    double g(int j, int s, int a) const {
        return consumptions[j][static_cast<std::size_t>(s) * base.n_actions + a];
    }

    void validate() const;
};

struct Belief {
    std::vector<double> probs;

    void validate() const;
};

/// MDP plus an observation model O(o|s',a), laid out [s'][a][o].
struct TabularPOMDP {
    TabularMDP base;
    int n_observations = 0;
    std::vector<double> observation;

    double o(int s2, int a, int obs) const {
        return observation[(static_cast<std::size_t>(s2) * base.n_actions + a) *
                               n_observations + obs];
    }
    double& o(int s2, int a, int obs) {
        return observation[(static_cast<std::size_t>(s2) * base.n_actions + a) *
                               n_observations + obs];
    }

    void validate() const;
};

struct ValueIterationResult {
    std::vector<double> values;
    std::vector<int> policy;
    /// max-norm difference per sweep (for the contraction property).
    std::vector<double> residuals;
    int iterations = 0;
};

/// Bellman-optimal values within `tolerance` in max norm; stops when the sweep
/// residual falls below tolerance*(1-gamma)/(2*gamma). Ties in the greedy
/// policy break to the lowest action index.
ValueIterationResult value_iteration(const TabularMDP& mdp, double tolerance = 1e-9,
                                     int max_iters = 1000000);

/// Fixed point of the policy Bellman operator within tolerance (iterative).
std::vector<double> policy_evaluation(const TabularMDP& mdp, std::span<const int> policy,
                                      double tolerance = 1e-10, int max_iters = 1000000);

/// Expected discounted cumulative consumption of resource j under the policy,
/// from the start distribution.
double discounted_consumption(const TabularCMDP& cmdp, std::span<const int> policy,
                              int resource, std::span<const double> start,
                              double tolerance = 1e-10);

struct DualAscentOptions {
    int n_dual_iters = 4000;
    /// Step schedule alpha_k = initial_step / sqrt(k+1): positive, diminishing.
    double initial_step = 1.0;
    /// Budget slack within which the mixture is declared feasible.
    double tolerance = 1e-3;
    double inner_tolerance = 1e-9;
    /// Keep at most this many evenly spaced multiplier snapshots.
    int trace_stride = 1;
};

struct CmdpSolution {
    /// Distinct deterministic policies visited by the inner loop.
    std::vector<std::vector<int>> policies;
    /// Time-average weight of each policy (sums to 1).
    std::vector<double> weights;
    std::vector<double> multipliers;
    /// Mixture value and per-resource consumption at the start distribution.
    double value = 0.0;
    std::vector<double> consumptions;
    bool feasible = false;
    /// Best dual bound minus mixture value (>= 0 up to solver error).
    double duality_gap = 0.0;
    std::vector<std::vector<double>> multiplier_trace;
};

/// Lagrangian dual ascent: value iteration on R - sum_j mu_j g_j, projected
/// subgradient updates on mu, time-averaged policy mixture as output.
CmdpSolution solve_cmdp_lagrangian(const TabularCMDP& cmdp, std::span<const double> start,
                                   const DualAscentOptions& options = {});

/// Exact Bayes filter step: b'(s') ~ O(o|s',a) * sum_s T(s'|s,a) b(s).
Belief belief_update(const TabularPOMDP& pomdp, const Belief& belief, int action,
                     int observation);

/// Expected utility of test-then-act minus act-on-prior minus the test cost,
/// enumerated over observations. terminal_utilities is [action][state].
double test_information_value(const TabularPOMDP& pomdp, const Belief& prior,
                              int test_action,
                              const std::vector<std::vector<double>>& terminal_utilities,
                              double cost);

/// Toy two-state fixture (stable/deteriorating; actions test/treat/withhold)
/// with identity transitions and a test of the given accuracy.
TabularPOMDP make_triage_pomdp(double test_accuracy);

/// Terminal utilities matching make_triage_pomdp: treat pays +1 on
/// deteriorating / -1 on stable, withhold pays 0, test is not terminal.
std::vector<std::vector<double>> triage_terminal_utilities();

/// Three-state ward fixture with one intensive-care consumption constraint.
TabularCMDP make_ward_cmdp(double budget);

/// Parses the documented plain-text problem format. Files without consumption
/// blocks load as unconstrained problems (empty budgets).
TabularCMDP load_cmdp(const std::filesystem::path& path);

/// Start distribution from the file's optional `start` block (uniform when
/// absent).
std::vector<double> load_start_distribution(const std::filesystem::path& path,
                                            int n_states);

} // namespace scarcealloc
