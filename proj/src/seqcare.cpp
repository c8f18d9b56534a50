#include "scarcealloc/seqcare.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "scarcealloc/errors.hpp"

namespace scarcealloc {

namespace {

constexpr double kRowSumTolerance = 1e-12;

void check_distribution_row(std::span<const double> row, const std::string& what) {
    double sum = 0.0;
    for (double p : row) {
        if (!(p >= 0.0))
            throw ValidationError(what + ": entries must be >= 0");
        sum += p;
    }
    if (std::abs(sum - 1.0) > kRowSumTolerance)
        throw ValidationError(what + ": row sums to " + std::to_string(sum) +
                              ", expected 1");
}

void check_start(std::span<const double> start, int n_states) {
    if (static_cast<int>(start.size()) != n_states)
        throw ValidationError("start distribution length != n_states");
    check_distribution_row(start, "start distribution");
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

/// One Bellman-optimality sweep; returns the max-norm change and fills the
/// greedy policy (ties to the lowest action index).
double bellman_sweep(const TabularMDP& mdp, std::span<const double> reward,
                     std::vector<double>& values, std::vector<int>& policy) {
    double residual = 0.0;
    for (int s = 0; s < mdp.n_states; ++s) {
        double best = -std::numeric_limits<double>::infinity();
        int best_action = 0;
        for (int a = 0; a < mdp.n_actions; ++a) {
            double q = reward[static_cast<std::size_t>(s) * mdp.n_actions + a];
            double future = 0.0;
            for (int s2 = 0; s2 < mdp.n_states; ++s2)
                future += mdp.t(s, a, s2) * values[s2];
            q += mdp.discount * future;
            if (q > best) {
                best = q;
                best_action = a;
            }
        }
        residual = std::max(residual, std::abs(best - values[s]));
        values[s] = best;
        policy[s] = best_action;
    }
    return residual;
}

ValueIterationResult value_iteration_on(const TabularMDP& mdp,
                                        std::span<const double> reward,
                                        double tolerance, int max_iters,
                                        std::vector<double> initial) {
    if (!(tolerance > 0.0))
        throw ValidationError("value_iteration: tolerance must be > 0");
    ValueIterationResult result;
    result.values = std::move(initial);
    result.values.resize(mdp.n_states, 0.0);
    result.policy.assign(mdp.n_states, 0);
    const double gamma = mdp.discount;
    const double stop = tolerance * (1.0 - gamma) / (2.0 * gamma);
    for (int k = 0; k < max_iters; ++k) {
        const double residual = bellman_sweep(mdp, reward, result.values, result.policy);
        result.residuals.push_back(residual);
        result.iterations = k + 1;
        if (residual <= stop) return result;
    }
    throw ConvergenceError("value_iteration: no convergence in " +
                               std::to_string(max_iters) + " iterations",
                           result.residuals.back());
}

std::vector<double> policy_evaluation_on(const TabularMDP& mdp,
                                         std::span<const int> policy,
                                         std::span<const double> reward,
                                         double tolerance, int max_iters) {
    if (static_cast<int>(policy.size()) != mdp.n_states)
        throw ValidationError("policy_evaluation: policy length != n_states");
    for (int a : policy)
        if (a < 0 || a >= mdp.n_actions)
            throw ValidationError("policy_evaluation: invalid action in policy");
    if (!(tolerance > 0.0))
        throw ValidationError("policy_evaluation: tolerance must be > 0");

    std::vector<double> values(mdp.n_states, 0.0);
    const double gamma = mdp.discount;
    const double stop = tolerance * (1.0 - gamma) / gamma;
    for (int k = 0; k < max_iters; ++k) {
        double residual = 0.0;
        for (int s = 0; s < mdp.n_states; ++s) {
            const int a = policy[s];
            double v = reward[static_cast<std::size_t>(s) * mdp.n_actions + a];
            double future = 0.0;
            for (int s2 = 0; s2 < mdp.n_states; ++s2)
                future += mdp.t(s, a, s2) * values[s2];
            v += gamma * future;
            residual = std::max(residual, std::abs(v - values[s]));
            values[s] = v;
        }
        if (residual <= stop) return values;
    }
    throw ConvergenceError("policy_evaluation: no convergence in " +
                               std::to_string(max_iters) + " iterations",
                           0.0);
}

} // namespace

void TabularMDP::validate() const {
    if (n_states < 1 || n_actions < 1)
        throw ValidationError("mdp: n_states and n_actions must be >= 1");
    if (!(discount > 0.0) || !(discount < 1.0))
        throw ValidationError("mdp: discount must be in (0, 1)");
    if (transition.size() != static_cast<std::size_t>(n_states) * n_actions * n_states)
        throw ValidationError("mdp: transition table has the wrong size");
    if (reward.size() != static_cast<std::size_t>(n_states) * n_actions)
        throw ValidationError("mdp: reward table has the wrong size");
    for (double r : reward)
        if (!std::isfinite(r)) throw ValidationError("mdp: rewards must be finite");
    for (int s = 0; s < n_states; ++s)
        for (int a = 0; a < n_actions; ++a) {
            const std::size_t base = (static_cast<std::size_t>(s) * n_actions + a) *
                                     n_states;
            check_distribution_row({transition.data() + base,
                                    static_cast<std::size_t>(n_states)},
                                   "mdp transition (s=" + std::to_string(s) +
                                       ", a=" + std::to_string(a) + ")");
        }
}

void TabularCMDP::validate() const {
    base.validate();
    if (consumptions.size() != budgets.size())
        throw ValidationError("cmdp: consumptions and budgets lengths differ");
    for (std::size_t j = 0; j < consumptions.size(); ++j) {
        if (consumptions[j].size() !=
            static_cast<std::size_t>(base.n_states) * base.n_actions)
            throw ValidationError("cmdp: consumption table " + std::to_string(j) +
                                  " has the wrong size");
        for (double g : consumptions[j])
            if (!(g >= 0.0))
                throw ValidationError("cmdp: consumption entries must be >= 0");
        if (!(budgets[j] >= 0.0))
            throw ValidationError("cmdp: budgets must be >= 0");
    }
}

void Belief::validate() const {
    if (probs.empty()) throw ValidationError("belief: empty");
    check_distribution_row(probs, "belief");
}

void TabularPOMDP::validate() const {
    base.validate();
    if (n_observations < 1)
        throw ValidationError("pomdp: n_observations must be >= 1");
    if (observation.size() !=
        static_cast<std::size_t>(base.n_states) * base.n_actions * n_observations)
        throw ValidationError("pomdp: observation table has the wrong size");
    for (int s2 = 0; s2 < base.n_states; ++s2)
        for (int a = 0; a < base.n_actions; ++a) {
            const std::size_t base_idx =
                (static_cast<std::size_t>(s2) * base.n_actions + a) * n_observations;
            check_distribution_row({observation.data() + base_idx,
                                    static_cast<std::size_t>(n_observations)},
                                   "pomdp observation (s'=" + std::to_string(s2) +
                                       ", a=" + std::to_string(a) + ")");
        }
}

ValueIterationResult value_iteration(const TabularMDP& mdp, double tolerance,
                                     int max_iters) {
    mdp.validate();
    return value_iteration_on(mdp, mdp.reward, tolerance, max_iters,
                              std::vector<double>(mdp.n_states, 0.0));
}

std::vector<double> policy_evaluation(const TabularMDP& mdp, std::span<const int> policy,
                                      double tolerance, int max_iters) {
    mdp.validate();
    return policy_evaluation_on(mdp, policy, mdp.reward, tolerance, max_iters);
}

double discounted_consumption(const TabularCMDP& cmdp, std::span<const int> policy,
                              int resource, std::span<const double> start,
                              double tolerance) {
    cmdp.validate();
    if (resource < 0 || resource >= static_cast<int>(cmdp.consumptions.size()))
        throw ValidationError("discounted_consumption: invalid resource index");
    check_start(start, cmdp.base.n_states);
    const auto values = policy_evaluation_on(cmdp.base, policy,
                                             cmdp.consumptions[resource], tolerance,
                                             1000000);
    return dot(start, values);
}

CmdpSolution solve_cmdp_lagrangian(const TabularCMDP& cmdp, std::span<const double> start,
                                   const DualAscentOptions& options) {
    cmdp.validate();
    check_start(start, cmdp.base.n_states);
    if (options.n_dual_iters < 1)
        throw ValidationError("solve_cmdp_lagrangian: n_dual_iters must be >= 1");
    if (!(options.initial_step > 0.0))
        throw ValidationError("solve_cmdp_lagrangian: initial_step must be > 0");

    const int n_res = static_cast<int>(cmdp.budgets.size());
    const std::size_t table = static_cast<std::size_t>(cmdp.base.n_states) *
                              cmdp.base.n_actions;

    // feasibility probe: minimum attainable consumption per resource
    for (int j = 0; j < n_res; ++j) {
        std::vector<double> neg(table);
        for (std::size_t k = 0; k < table; ++k) neg[k] = -cmdp.consumptions[j][k];
        const auto vi = value_iteration_on(cmdp.base, neg, options.inner_tolerance,
                                           1000000,
                                           std::vector<double>(cmdp.base.n_states, 0.0));
        const double min_consumption = -dot(start, vi.values);
        if (min_consumption > cmdp.budgets[j] + options.tolerance)
            throw InfeasibleBudgetError(
                "solve_cmdp_lagrangian: resource " + std::to_string(j) +
                " needs at least " + std::to_string(min_consumption) +
                " but the budget is " + std::to_string(cmdp.budgets[j]));
    }

    struct PolicyStats {
        std::size_t index;
        double value;
        std::vector<double> consumption;
    };
    std::map<std::vector<int>, PolicyStats> visited;

    CmdpSolution solution;
    std::vector<double> mu(n_res, 0.0);
    std::vector<double> mod_reward(table);
    std::vector<double> warm(cmdp.base.n_states, 0.0);
    double best_dual = std::numeric_limits<double>::infinity();

    for (int k = 0; k < options.n_dual_iters; ++k) {
        for (std::size_t idx = 0; idx < table; ++idx) {
            double r = cmdp.base.reward[idx];
            for (int j = 0; j < n_res; ++j) r -= mu[j] * cmdp.consumptions[j][idx];
            mod_reward[idx] = r;
        }
        auto vi = value_iteration_on(cmdp.base, mod_reward, options.inner_tolerance,
                                     1000000, warm);
        warm = vi.values;

        auto [it, inserted] = visited.try_emplace(vi.policy);
        if (inserted) {
            PolicyStats stats;
            stats.index = solution.policies.size();
            const auto values = policy_evaluation_on(cmdp.base, vi.policy,
                                                     cmdp.base.reward,
                                                     options.inner_tolerance, 1000000);
            stats.value = dot(start, values);
            stats.consumption.resize(n_res);
            for (int j = 0; j < n_res; ++j) {
                const auto cons = policy_evaluation_on(cmdp.base, vi.policy,
                                                       cmdp.consumptions[j],
                                                       options.inner_tolerance, 1000000);
                stats.consumption[j] = dot(start, cons);
            }
            it->second = std::move(stats);
            solution.policies.push_back(vi.policy);
            solution.weights.push_back(0.0);
        }
        const PolicyStats& stats = it->second;
        solution.weights[stats.index] += 1.0;

        // dual bound q(mu) = V_mu(start) + mu . budgets
        double dual = dot(start, vi.values);
        for (int j = 0; j < n_res; ++j) dual += mu[j] * cmdp.budgets[j];
        best_dual = std::min(best_dual, dual);

        const double step = options.initial_step / std::sqrt(static_cast<double>(k) + 1.0);
        for (int j = 0; j < n_res; ++j)
            mu[j] = std::max(0.0, mu[j] + step * (stats.consumption[j] - cmdp.budgets[j]));

        if (options.trace_stride > 0 && k % options.trace_stride == 0)
            solution.multiplier_trace.push_back(mu);
    }

    const double total = static_cast<double>(options.n_dual_iters);
    solution.consumptions.assign(n_res, 0.0);
    solution.value = 0.0;
    for (const auto& [policy, stats] : visited) {
        const double w = solution.weights[stats.index] / total;
        solution.weights[stats.index] = w;
        solution.value += w * stats.value;
        for (int j = 0; j < n_res; ++j)
            solution.consumptions[j] += w * stats.consumption[j];
    }
    solution.multipliers = mu;
    solution.feasible = true;
    for (int j = 0; j < n_res; ++j)
        if (solution.consumptions[j] > cmdp.budgets[j] + options.tolerance)
            solution.feasible = false;
    solution.duality_gap = best_dual - solution.value;
    return solution;
}

Belief belief_update(const TabularPOMDP& pomdp, const Belief& belief, int action,
                     int observation) {
    pomdp.validate();
    belief.validate();
    if (static_cast<int>(belief.probs.size()) != pomdp.base.n_states)
        throw ValidationError("belief_update: belief length != n_states");
    if (action < 0 || action >= pomdp.base.n_actions)
        throw ValidationError("belief_update: invalid action index");
    if (observation < 0 || observation >= pomdp.n_observations)
        throw ValidationError("belief_update: invalid observation index");

    Belief posterior;
    posterior.probs.assign(pomdp.base.n_states, 0.0);
    double normalizer = 0.0;
    for (int s2 = 0; s2 < pomdp.base.n_states; ++s2) {
        double propagated = 0.0;
        for (int s = 0; s < pomdp.base.n_states; ++s)
            propagated += pomdp.base.t(s, action, s2) * belief.probs[s];
        const double mass = pomdp.o(s2, action, observation) * propagated;
        posterior.probs[s2] = mass;
        normalizer += mass;
    }
    if (normalizer <= 0.0)
        throw ImpossibleObservationError(
            "belief_update: observation " + std::to_string(observation) +
            " has probability 0 under the current belief");
    for (double& p : posterior.probs) p /= normalizer;
    return posterior;
}

double test_information_value(const TabularPOMDP& pomdp, const Belief& prior,
                              int test_action,
                              const std::vector<std::vector<double>>& terminal_utilities,
                              double cost) {
    pomdp.validate();
    prior.validate();
    if (test_action < 0 || test_action >= pomdp.base.n_actions)
        throw ValidationError("test_information_value: invalid test action");
    if (terminal_utilities.size() != static_cast<std::size_t>(pomdp.base.n_actions))
        throw ValidationError("test_information_value: utilities must cover every action");
    for (const auto& row : terminal_utilities)
        if (row.size() != static_cast<std::size_t>(pomdp.base.n_states))
            throw ValidationError("test_information_value: utility row length != n_states");
    if (pomdp.base.n_actions < 2)
        throw ValidationError("test_information_value: needs a terminal action besides "
                              "the test");

    auto best_utility = [&](std::span<const double> belief) {
        double best = -std::numeric_limits<double>::infinity();
        for (int a = 0; a < pomdp.base.n_actions; ++a) {
            if (a == test_action) continue;
            best = std::max(best, dot(belief, terminal_utilities[a]));
        }
        return best;
    };

    const double prior_value = best_utility(prior.probs);

    // propagate through the test action's transitions once
    std::vector<double> propagated(pomdp.base.n_states, 0.0);
    for (int s2 = 0; s2 < pomdp.base.n_states; ++s2)
        for (int s = 0; s < pomdp.base.n_states; ++s)
            propagated[s2] += pomdp.base.t(s, test_action, s2) * prior.probs[s];

    double posterior_value = 0.0;
    for (int obs = 0; obs < pomdp.n_observations; ++obs) {
        double p_obs = 0.0;
        for (int s2 = 0; s2 < pomdp.base.n_states; ++s2)
            p_obs += pomdp.o(s2, test_action, obs) * propagated[s2];
        if (p_obs <= 0.0) continue;
        const Belief posterior = belief_update(pomdp, prior, test_action, obs);
        posterior_value += p_obs * best_utility(posterior.probs);
    }
    return posterior_value - prior_value - cost;
}

TabularPOMDP make_triage_pomdp(double test_accuracy) {
    if (!(test_accuracy >= 0.0) || test_accuracy > 1.0)
        throw ValidationError("make_triage_pomdp: accuracy must be in [0, 1]");
    TabularPOMDP pomdp;
    pomdp.base.n_states = 2;   // 0 = stable, 1 = deteriorating
    pomdp.base.n_actions = 3;  // 0 = test, 1 = treat, 2 = withhold
    pomdp.base.discount = 0.9;
    pomdp.base.transition.assign(2 * 3 * 2, 0.0);
    for (int s = 0; s < 2; ++s)
        for (int a = 0; a < 3; ++a) pomdp.base.t(s, a, s) = 1.0;
    pomdp.base.reward = {
        0.0, -1.0, 0.0,  // stable: test, treat, withhold
        0.0, 1.0, 0.0,   // deteriorating
    };
    pomdp.n_observations = 2;  // 0 = negative, 1 = positive
    pomdp.observation.assign(2 * 3 * 2, 0.5);
    pomdp.o(0, 0, 0) = test_accuracy;
    pomdp.o(0, 0, 1) = 1.0 - test_accuracy;
    pomdp.o(1, 0, 0) = 1.0 - test_accuracy;
    pomdp.o(1, 0, 1) = test_accuracy;
    return pomdp;
}

std::vector<std::vector<double>> triage_terminal_utilities() {
    return {
        {0.0, 0.0},    // test (excluded from the max)
        {-1.0, 1.0},   // treat
        {0.0, 0.0},    // withhold
    };
}

TabularCMDP make_ward_cmdp(double budget) {
    TabularCMDP cmdp;
    cmdp.base.n_states = 3;   // 0 = stable, 1 = unstable, 2 = critical
    cmdp.base.n_actions = 2;  // 0 = standard care, 1 = intensive care
    cmdp.base.discount = 0.95;
    cmdp.base.transition = {
        // stable: standard, intensive
        0.92, 0.07, 0.01, 0.97, 0.025, 0.005,
        // unstable
        0.10, 0.70, 0.20, 0.40, 0.55, 0.05,
        // critical
        0.02, 0.18, 0.80, 0.10, 0.40, 0.50,
    };
    cmdp.base.reward = {
        1.0, 0.98,
        0.4, 0.38,
        -1.0, -1.02,
    };
    cmdp.consumptions = {{0.0, 1.0, 0.0, 1.0, 0.0, 1.0}};
    cmdp.budgets = {budget};
    return cmdp;
}

namespace {

struct Line {
    int number;
    std::string text;
};

std::vector<Line> content_lines(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open problem file: " + path.string());
    std::vector<Line> lines;
    std::string raw;
    int number = 0;
    while (std::getline(in, raw)) {
        ++number;
        if (const auto hash = raw.find('#'); hash != std::string::npos)
            raw.erase(hash);
        std::istringstream probe(raw);
        std::string token;
        if (probe >> token) lines.push_back({number, raw});
    }
    return lines;
}

std::vector<double> parse_row(const Line& line, int expected,
                              const std::string& what) {
    std::istringstream in(line.text);
    std::vector<double> row;
    double v;
    while (in >> v) row.push_back(v);
    if (static_cast<int>(row.size()) != expected)
        throw ConfigError(what + ": expected " + std::to_string(expected) +
                              " values, found " + std::to_string(row.size()),
                          line.number);
    return row;
}

} // namespace

TabularCMDP load_cmdp(const std::filesystem::path& path) {
    const auto lines = content_lines(path);
    if (lines.empty()) throw ConfigError("empty problem file", 0);

    TabularCMDP cmdp;
    {
        std::istringstream header(lines[0].text);
        double gamma;
        if (!(header >> cmdp.base.n_states >> cmdp.base.n_actions >> gamma))
            throw ConfigError("header must be '<states> <actions> <gamma>'",
                              lines[0].number);
        std::string extra;
        if (header >> extra)
            throw ConfigError("unexpected token after the header values",
                              lines[0].number);
        cmdp.base.discount = gamma;
    }
    if (cmdp.base.n_states < 1 || cmdp.base.n_actions < 1)
        throw ConfigError("states and actions must be >= 1", lines[0].number);

    const int S = cmdp.base.n_states;
    const int A = cmdp.base.n_actions;
    cmdp.base.transition.assign(static_cast<std::size_t>(S) * A * S, 0.0);
    cmdp.base.reward.assign(static_cast<std::size_t>(S) * A, 0.0);
    std::vector<char> transition_seen(A, 0);
    bool reward_seen = false;

    std::size_t pos = 1;
    auto take_rows = [&](int count, int width, const std::string& what) {
        std::vector<std::vector<double>> rows;
        for (int r = 0; r < count; ++r) {
            if (pos >= lines.size())
                throw ConfigError(what + ": missing row " + std::to_string(r + 1),
                                  lines.back().number);
            rows.push_back(parse_row(lines[pos], width, what));
            ++pos;
        }
        return rows;
    };

    while (pos < lines.size()) {
        const Line& line = lines[pos];
        std::istringstream in(line.text);
        std::string keyword;
        in >> keyword;
        if (keyword == "transition") {
            int action;
            if (!(in >> action) || action < 0 || action >= A)
                throw ConfigError("transition block needs an action in [0, " +
                                      std::to_string(A - 1) + "]",
                                  line.number);
            ++pos;
            const auto rows = take_rows(S, S, "transition " + std::to_string(action));
            for (int s = 0; s < S; ++s)
                for (int s2 = 0; s2 < S; ++s2) cmdp.base.t(s, action, s2) = rows[s][s2];
            transition_seen[action] = 1;
        } else if (keyword == "reward") {
            ++pos;
            const auto rows = take_rows(S, A, "reward");
            for (int s = 0; s < S; ++s)
                for (int a = 0; a < A; ++a) cmdp.base.r(s, a) = rows[s][a];
            reward_seen = true;
        } else if (keyword == "consumption") {
            double budget;
            if (!(in >> budget))
                throw ConfigError("consumption block needs a budget value", line.number);
            ++pos;
            const auto rows = take_rows(S, A, "consumption");
            std::vector<double> table(static_cast<std::size_t>(S) * A);
            for (int s = 0; s < S; ++s)
                for (int a = 0; a < A; ++a)
                    table[static_cast<std::size_t>(s) * A + a] = rows[s][a];
            cmdp.consumptions.push_back(std::move(table));
            cmdp.budgets.push_back(budget);
        } else if (keyword == "start") {
            ++pos;
            take_rows(1, S, "start");  // validated by load_start_distribution
        } else {
            throw ConfigError("unknown block keyword '" + keyword + "'", line.number);
        }
    }

    for (int a = 0; a < A; ++a)
        if (!transition_seen[a])
            throw ConfigError("missing transition block for action " + std::to_string(a),
                              lines.back().number);
    if (!reward_seen)
        throw ConfigError("missing reward block", lines.back().number);
    cmdp.validate();
    return cmdp;
}

std::vector<double> load_start_distribution(const std::filesystem::path& path,
                                            int n_states) {
    const auto lines = content_lines(path);
    for (std::size_t pos = 0; pos < lines.size(); ++pos) {
        std::istringstream in(lines[pos].text);
        std::string keyword;
        in >> keyword;
        if (keyword != "start") continue;
        if (pos + 1 >= lines.size())
            throw ConfigError("start block missing its row", lines[pos].number);
        auto row = parse_row(lines[pos + 1], n_states, "start");
        check_distribution_row(row, "start distribution");
        return row;
    }
    return std::vector<double>(n_states, 1.0 / n_states);
}

} // namespace scarcealloc
