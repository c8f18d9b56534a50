#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "oracles.hpp"
#include "scarcealloc/errors.hpp"
#include "scarcealloc/random.hpp"
#include "scarcealloc/seqcare.hpp"

using namespace scarcealloc;

namespace {

TabularMDP single_state_mdp(double reward, double gamma) {
    TabularMDP mdp;
    mdp.n_states = 1;
    mdp.n_actions = 1;
    mdp.discount = gamma;
    mdp.transition = {1.0};
    mdp.reward = {reward};
    return mdp;
}

TabularMDP random_mdp(Rng& rng, int n_states, int n_actions, double gamma) {
    TabularMDP mdp;
    mdp.n_states = n_states;
    mdp.n_actions = n_actions;
    mdp.discount = gamma;
    mdp.transition.assign(static_cast<std::size_t>(n_states) * n_actions * n_states, 0.0);
    mdp.reward.resize(static_cast<std::size_t>(n_states) * n_actions);
    for (int s = 0; s < n_states; ++s)
        for (int a = 0; a < n_actions; ++a) {
            double total = 0.0;
            std::vector<double> row(n_states);
            for (int s2 = 0; s2 < n_states; ++s2) {
                row[s2] = -std::log(1.0 - rng.uniform());
                total += row[s2];
            }
            for (int s2 = 0; s2 < n_states; ++s2) mdp.t(s, a, s2) = row[s2] / total;
            // renormalize exactly so validation's 1e-12 row-sum check passes
            double sum = 0.0;
            for (int s2 = 0; s2 < n_states; ++s2) sum += mdp.t(s, a, s2);
            mdp.t(s, a, n_states - 1) += 1.0 - sum;
            mdp.r(s, a) = rng.uniform() * 2.0 - 1.0;
        }
    return mdp;
}

} // namespace

TEST_CASE("value iteration on the one-state geometric series") {
    const auto result = value_iteration(single_state_mdp(1.0, 0.9), 1e-9);
    REQUIRE(result.values.size() == 1);
    CHECK(std::abs(result.values[0] - 10.0) <= 1e-9);
    CHECK(result.policy[0] == 0);
}

TEST_CASE("value iteration on a zero-reward MDP is identically zero") {
    Rng rng(3);
    auto mdp = random_mdp(rng, 3, 2, 0.95);
    std::fill(mdp.reward.begin(), mdp.reward.end(), 0.0);
    const auto result = value_iteration(mdp, 1e-10);
    for (double v : result.values) CHECK(std::abs(v) <= 1e-10);
}

TEST_CASE("two-state deterministic chain matches policy enumeration") {
    TabularMDP mdp;
    mdp.n_states = 2;
    mdp.n_actions = 2;
    mdp.discount = 0.9;
    mdp.transition.assign(8, 0.0);
    // action 0 stays, action 1 switches
    mdp.t(0, 0, 0) = 1.0;
    mdp.t(0, 1, 1) = 1.0;
    mdp.t(1, 0, 1) = 1.0;
    mdp.t(1, 1, 0) = 1.0;
    mdp.reward = {0.2, 0.0, 1.0, 0.3};
    const auto result = value_iteration(mdp, 1e-9);
    const auto expected = oracles::optimal_values_brute_force(mdp);
    for (int s = 0; s < 2; ++s)
        CHECK(result.values[s] == doctest::Approx(expected[s]).epsilon(1e-8));
}

TEST_CASE("value iteration matches brute force on random instances") {
    Rng rng(7);
    for (int trial = 0; trial < 40; ++trial) {
        const int n_states = 2 + static_cast<int>(rng.uniform_below(3));
        const int n_actions = 1 + static_cast<int>(rng.uniform_below(3));
        const auto mdp = random_mdp(rng, n_states, n_actions, 0.85);
        const auto result = value_iteration(mdp, 1e-8);
        const auto expected = oracles::optimal_values_brute_force(mdp);
        for (int s = 0; s < n_states; ++s)
            CHECK(std::abs(result.values[s] - expected[s]) <= 1e-6);
        // the returned policy itself is optimal
        const auto policy_value = oracles::policy_values_linear_solve(mdp, result.policy);
        for (int s = 0; s < n_states; ++s)
            CHECK(std::abs(policy_value[s] - expected[s]) <= 1e-6);
    }
}

TEST_CASE("value iteration residuals contract at rate gamma") {
    Rng rng(11);
    const auto mdp = random_mdp(rng, 4, 3, 0.92);
    const auto result = value_iteration(mdp, 1e-10);
    for (std::size_t k = 1; k < result.residuals.size(); ++k)
        CHECK(result.residuals[k] <=
              mdp.discount * result.residuals[k - 1] + 1e-12);
}

TEST_CASE("value iteration raises on iteration exhaustion") {
    try {
        value_iteration(single_state_mdp(1.0, 0.999), 1e-12, 3);
        FAIL("expected ConvergenceError");
    } catch (const ConvergenceError& e) {
        CHECK(e.residual > 0.0);
    }
}

TEST_CASE("policy evaluation: absorbing state closed form") {
    const auto mdp = single_state_mdp(0.7, 0.8);
    const std::vector<int> policy{0};
    const auto values = policy_evaluation(mdp, policy, 1e-10);
    CHECK(values[0] == doctest::Approx(0.7 / 0.2).epsilon(1e-8));
}

TEST_CASE("policy evaluation agrees with value iteration's returned pair") {
    Rng rng(13);
    const auto mdp = random_mdp(rng, 4, 2, 0.9);
    const double tolerance = 1e-8;
    const auto vi = value_iteration(mdp, tolerance);
    const auto values = policy_evaluation(mdp, vi.policy, tolerance);
    for (int s = 0; s < mdp.n_states; ++s)
        CHECK(std::abs(values[s] - vi.values[s]) <= 2.0 * tolerance);
}

TEST_CASE("policy evaluation matches the exact linear solve on a 3-state chain") {
    TabularMDP mdp;
    mdp.n_states = 3;
    mdp.n_actions = 1;
    mdp.discount = 0.9;
    mdp.transition.assign(9, 0.0);
    mdp.t(0, 0, 1) = 1.0;
    mdp.t(1, 0, 2) = 1.0;
    mdp.t(2, 0, 2) = 1.0;
    mdp.reward = {1.0, 2.0, 0.5};
    const std::vector<int> policy{0, 0, 0};
    const auto iterative = policy_evaluation(mdp, policy, 1e-11);
    const auto exact = oracles::policy_values_linear_solve(mdp, policy);
    for (int s = 0; s < 3; ++s)
        CHECK(iterative[s] == doctest::Approx(exact[s]).epsilon(1e-9));
}

TEST_CASE("discounted consumption") {
    auto cmdp = make_ward_cmdp(6.0);
    const std::vector<double> start{0.6, 0.3, 0.1};

    SUBCASE("zero consumption table gives zero") {
        TabularCMDP zero = cmdp;
        std::fill(zero.consumptions[0].begin(), zero.consumptions[0].end(), 0.0);
        CHECK(discounted_consumption(zero, std::vector<int>{1, 1, 1}, 0, start) ==
              doctest::Approx(0.0));
    }

    SUBCASE("constant consumption gives 1/(1-gamma)") {
        TabularCMDP ones = cmdp;
        std::fill(ones.consumptions[0].begin(), ones.consumptions[0].end(), 1.0);
        CHECK(discounted_consumption(ones, std::vector<int>{0, 0, 0}, 0, start) ==
              doctest::Approx(1.0 / 0.05).epsilon(1e-7));
    }

    SUBCASE("matches the linear-system solution on a 2-state instance") {
        TabularCMDP small;
        small.base.n_states = 2;
        small.base.n_actions = 1;
        small.base.discount = 0.9;
        small.base.transition = {0.5, 0.5, 0.2, 0.8};
        small.base.reward = {0.0, 0.0};
        small.consumptions = {{1.0, 3.0}};
        small.budgets = {100.0};
        const std::vector<int> policy{0, 0};
        TabularMDP consumption_mdp = small.base;
        consumption_mdp.reward = small.consumptions[0];
        const auto exact = oracles::policy_values_linear_solve(consumption_mdp, policy);
        const std::vector<double> uniform{0.5, 0.5};
        CHECK(discounted_consumption(small, policy, 0, uniform) ==
              doctest::Approx(0.5 * (exact[0] + exact[1])).epsilon(1e-8));
    }
}

TEST_CASE("CMDP dual ascent on the ward fixture") {
    const auto cmdp = make_ward_cmdp(6.0);
    const std::vector<double> start{0.6, 0.3, 0.1};
    DualAscentOptions options;
    options.n_dual_iters = 60000;
    options.initial_step = 0.3;
    options.tolerance = 1e-3;
    const auto solution = solve_cmdp_lagrangian(cmdp, start, options);

    CHECK(solution.feasible);
    CHECK(solution.consumptions[0] <= 6.0 + 1e-3);
    CHECK(solution.multipliers[0] >= 0.0);

    const double optimum = oracles::cmdp_mixture_optimum_brute_force(cmdp, start);
    CHECK(std::abs(solution.value - optimum) <= 1e-3);

    double weight_sum = 0.0;
    for (double w : solution.weights) weight_sum += w;
    CHECK(weight_sum == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(solution.duality_gap >= -1e-6);

    // approximate complementary slackness on the binding constraint
    CHECK(solution.multipliers[0] *
              std::max(0.0, cmdp.budgets[0] - solution.consumptions[0]) <= 1e-2);
}

TEST_CASE("CMDP with non-binding budgets equals unconstrained value iteration") {
    auto cmdp = make_ward_cmdp(1000.0);
    const std::vector<double> start{1.0 / 3, 1.0 / 3, 1.0 / 3};
    DualAscentOptions options;
    options.n_dual_iters = 200;
    const auto solution = solve_cmdp_lagrangian(cmdp, start, options);
    const auto vi = value_iteration(cmdp.base, 1e-10);
    double vi_value = 0.0;
    for (int s = 0; s < 3; ++s) vi_value += start[s] * vi.values[s];
    CHECK(solution.feasible);
    CHECK(solution.value == doctest::Approx(vi_value).epsilon(1e-7));
    CHECK(solution.multipliers[0] == 0.0);
    REQUIRE(solution.policies.size() == 1);
    CHECK(solution.policies[0] == vi.policy);
}

TEST_CASE("CMDP with zero consumption reduces to the unconstrained solution") {
    auto cmdp = make_ward_cmdp(0.5);
    std::fill(cmdp.consumptions[0].begin(), cmdp.consumptions[0].end(), 0.0);
    const std::vector<double> start{1.0, 0.0, 0.0};
    const auto solution = solve_cmdp_lagrangian(cmdp, start);
    const auto vi = value_iteration(cmdp.base, 1e-10);
    CHECK(solution.value == doctest::Approx(vi.values[0]).epsilon(1e-7));
    CHECK(solution.feasible);
}

TEST_CASE("CMDP infeasible budgets raise") {
    auto cmdp = make_ward_cmdp(0.5);
    // every action consumes, so no policy stays under 0.5 in discounted total
    for (auto& g : cmdp.consumptions[0]) g = std::max(g, 1.0);
    const std::vector<double> start{1.0 / 3, 1.0 / 3, 1.0 / 3};
    CHECK_THROWS_AS(solve_cmdp_lagrangian(cmdp, start), InfeasibleBudgetError);
}

TEST_CASE("belief update collapses under perfect observations") {
    const auto pomdp = make_triage_pomdp(1.0);
    Belief prior{{0.5, 0.5}};
    const auto posterior = belief_update(pomdp, prior, 0, 1);
    CHECK(posterior.probs[0] == doctest::Approx(0.0));
    CHECK(posterior.probs[1] == doctest::Approx(1.0));
}

TEST_CASE("belief update reproduces the 0.8/0.4 Bayes example") {
    auto pomdp = make_triage_pomdp(0.9);
    // O(o=1 | state 0) = 0.8, O(o=1 | state 1) = 0.4
    pomdp.o(0, 0, 1) = 0.8;
    pomdp.o(0, 0, 0) = 0.2;
    pomdp.o(1, 0, 1) = 0.4;
    pomdp.o(1, 0, 0) = 0.6;
    Belief prior{{0.5, 0.5}};
    const auto posterior = belief_update(pomdp, prior, 0, 1);
    CHECK(posterior.probs[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(posterior.probs[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("uninformative observations leave the propagated prior") {
    const auto pomdp = make_triage_pomdp(0.5);
    Belief prior{{0.3, 0.7}};
    const auto posterior = belief_update(pomdp, prior, 0, 1);
    CHECK(posterior.probs[0] == doctest::Approx(0.3));
    CHECK(posterior.probs[1] == doctest::Approx(0.7));
}

TEST_CASE("impossible observations raise the defined error") {
    const auto pomdp = make_triage_pomdp(1.0);
    Belief certain{{1.0, 0.0}};
    // a perfectly accurate positive reading contradicts a certainly-stable state
    CHECK_THROWS_AS(belief_update(pomdp, certain, 0, 1), ImpossibleObservationError);
}

TEST_CASE("belief updates preserve the simplex on random instances") {
    Rng rng(19);
    for (int trial = 0; trial < 200; ++trial) {
        TabularPOMDP pomdp;
        pomdp.base = random_mdp(rng, 3, 2, 0.9);
        pomdp.n_observations = 2;
        pomdp.observation.assign(3 * 2 * 2, 0.0);
        for (int s2 = 0; s2 < 3; ++s2)
            for (int a = 0; a < 2; ++a) {
                const double p = rng.uniform();
                pomdp.o(s2, a, 0) = p;
                pomdp.o(s2, a, 1) = 1.0 - p;
            }
        Belief belief{{0.0, 0.0, 0.0}};
        double total = 0.0;
        for (auto& b : belief.probs) {
            b = -std::log(1.0 - rng.uniform());
            total += b;
        }
        for (auto& b : belief.probs) b /= total;
        double sum = 0.0;
        for (double b : belief.probs) sum += b;
        belief.probs[2] += 1.0 - sum;

        const int action = static_cast<int>(rng.uniform_below(2));
        const int obs = static_cast<int>(rng.uniform_below(2));
        try {
            const auto posterior = belief_update(pomdp, belief, action, obs);
            double post_sum = 0.0;
            for (double p : posterior.probs) {
                CHECK(p >= 0.0);
                post_sum += p;
            }
            CHECK(std::abs(post_sum - 1.0) <= 1e-12);
        } catch (const ImpossibleObservationError&) {
            // acceptable outcome for degenerate draws
        }
    }
}

TEST_CASE("test_information_value on the toy environment") {
    const auto utilities = triage_terminal_utilities();

    SUBCASE("perfect free test on an even prior is worth 0.5") {
        const auto pomdp = make_triage_pomdp(1.0);
        Belief prior{{0.5, 0.5}};
        CHECK(test_information_value(pomdp, prior, 0, utilities, 0.0) ==
              doctest::Approx(0.5));
    }

    SUBCASE("uninformative test is worth exactly -cost") {
        const auto pomdp = make_triage_pomdp(0.5);
        Belief prior{{0.4, 0.6}};
        CHECK(test_information_value(pomdp, prior, 0, utilities, 0.07) ==
              doctest::Approx(-0.07));
    }

    SUBCASE("point-mass prior learns nothing") {
        const auto pomdp = make_triage_pomdp(0.95);
        Belief prior{{0.0, 1.0}};
        CHECK(test_information_value(pomdp, prior, 0, utilities, 0.02) ==
              doctest::Approx(-0.02));
    }

    SUBCASE("information never hurts beyond its cost") {
        Rng rng(23);
        for (int trial = 0; trial < 100; ++trial) {
            const auto pomdp = make_triage_pomdp(rng.uniform());
            const double p = rng.uniform();
            Belief prior{{p, 1.0 - p}};
            const double cost = rng.uniform() * 0.2;
            CHECK(test_information_value(pomdp, prior, 0, utilities, cost) >=
                  -cost - 1e-12);
        }
    }
}

TEST_CASE("problem files round-trip through the documented format") {
    namespace fs = std::filesystem;
    const fs::path path = fs::temp_directory_path() / "scarcealloc_test_ward.cmdp";
    {
        std::ofstream out(path);
        out << "# header: states actions gamma\n"
            << "2 2 0.9\n"
            << "transition 0\n1 0\n0 1\n"
            << "transition 1\n0 1\n1 0\n"
            << "reward\n1 0\n0 1\n"
            << "consumption 2.5\n0 1\n0 1\n"
            << "start\n0.25 0.75\n";
    }
    const auto cmdp = load_cmdp(path);
    CHECK(cmdp.base.n_states == 2);
    CHECK(cmdp.base.n_actions == 2);
    CHECK(cmdp.base.discount == doctest::Approx(0.9));
    CHECK(cmdp.base.t(0, 1, 1) == doctest::Approx(1.0));
    CHECK(cmdp.base.r(1, 1) == doctest::Approx(1.0));
    REQUIRE(cmdp.budgets.size() == 1);
    CHECK(cmdp.budgets[0] == doctest::Approx(2.5));
    const auto start = load_start_distribution(path, 2);
    CHECK(start[0] == doctest::Approx(0.25));
    fs::remove(path);
}

TEST_CASE("problem file errors carry line numbers") {
    namespace fs = std::filesystem;
    const fs::path path = fs::temp_directory_path() / "scarcealloc_test_bad.cmdp";
    {
        std::ofstream out(path);
        out << "2 1 0.9\n"
            << "transition 0\n1 0\n0.5 0.4\n"  // bad row sum on line 4
            << "reward\n1\n1\n";
    }
    CHECK_THROWS_AS(load_cmdp(path), ValidationError);
    {
        std::ofstream out(path);
        out << "2 1 0.9\n"
            << "mystery 0\n";
    }
    try {
        load_cmdp(path);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.line == 2);
    }
    fs::remove(path);
}
