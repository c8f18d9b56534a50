#include "scarcealloc/allocation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "scarcealloc/errors.hpp"
#include "scarcealloc/random.hpp"

namespace scarcealloc {

namespace {

std::vector<int> capacities_of(const std::vector<Resource>& resources) {
    std::vector<int> caps(resources.size());
    for (std::size_t j = 0; j < resources.size(); ++j) caps[j] = resources[j].capacity;
    return caps;
}

void check_resources(const std::vector<Resource>& resources) {
    for (const auto& r : resources) r.validate();
}

std::vector<char> served_mask(const Allocation& alloc, std::size_t n_patients) {
    std::vector<char> served(n_patients, 0);
    for (const auto& [i, j] : alloc.assignments) {
        if (i < 0 || static_cast<std::size_t>(i) >= n_patients)
            throw ValidationError("allocation references patient " + std::to_string(i) +
                                  " outside the cohort");
        served[i] = 1;
    }
    return served;
}

} // namespace

UtilityMatrix::UtilityMatrix(int n_patients, int n_resources, UtilityKind kind)
    : n_patients_(n_patients), n_resources_(n_resources), kind_(kind),
      values_(static_cast<std::size_t>(n_patients) * n_resources, 0.0) {
    if (n_patients < 0 || n_resources < 0)
        throw ValidationError("utility matrix dimensions must be nonnegative");
}

void UtilityMatrix::validate() const {
    for (double v : values_)
        if (!(v >= 0.0) || !std::isfinite(v))
            throw ValidationError("utility matrix entries must be finite and >= 0");
}

UtilityMatrix utility_matrix(const std::vector<Patient>& cohort,
                             const std::vector<Resource>& resources,
                             std::span<const double> risks, UtilityKind kind) {
    if (risks.size() != cohort.size())
        throw ValidationError("utility_matrix: risks length != cohort size");
    check_resources(resources);
    UtilityMatrix um(static_cast<int>(cohort.size()), static_cast<int>(resources.size()),
                     kind);
    for (std::size_t i = 0; i < cohort.size(); ++i) {
        if (!(risks[i] >= 0.0) || risks[i] > 1.0)
            throw ValidationError("utility_matrix: risk out of [0,1] at patient " +
                                  std::to_string(i));
        for (std::size_t j = 0; j < resources.size(); ++j)
            um.at(static_cast<int>(i), static_cast<int>(j)) =
                cohort[i].severity_weight * resources[j].risk_reduction_factor * risks[i];
    }
    return um;
}

Allocation policy_risk_threshold(std::span<const double> risks,
                                 const std::vector<Resource>& resources,
                                 double threshold, std::span<const int> arrival_order) {
    if (threshold < 0.0 || threshold > 1.0)
        throw ValidationError("policy_risk_threshold: threshold must be in [0,1]");
    check_resources(resources);
    const std::size_t n = risks.size();
    if (arrival_order.size() != n)
        throw ValidationError("policy_risk_threshold: arrival_order length != cohort size");
    std::vector<char> seen(n, 0);
    for (int i : arrival_order) {
        if (i < 0 || static_cast<std::size_t>(i) >= n || seen[i])
            throw ValidationError("policy_risk_threshold: arrival_order is not a permutation");
        seen[i] = 1;
    }

    Allocation alloc;
    alloc.capacities = capacities_of(resources);
    std::vector<int> remaining = alloc.capacities;
    int open = 0;
    for (int c : remaining) open += c;
    for (int i : arrival_order) {
        if (open == 0) break;
        if (!(risks[i] > threshold)) continue;
        for (std::size_t j = 0; j < resources.size(); ++j) {
            if (remaining[j] == 0) continue;
            --remaining[j];
            --open;
            alloc.assignments.emplace_back(i, static_cast<int>(j));
        }
    }
    return alloc;
}

Allocation policy_utility_greedy(const UtilityMatrix& um,
                                 const std::vector<Resource>& resources) {
    if (um.n_resources() != static_cast<int>(resources.size()))
        throw ValidationError("policy_utility_greedy: matrix/resource count mismatch");
    check_resources(resources);
    um.validate();

    struct Entry {
        double utility;
        int patient;
        int resource;
    };
    std::vector<Entry> entries;
    entries.reserve(static_cast<std::size_t>(um.n_patients()) * um.n_resources());
    for (int i = 0; i < um.n_patients(); ++i)
        for (int j = 0; j < um.n_resources(); ++j)
            entries.push_back({um.at(i, j), i, j});
    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
        if (a.utility != b.utility) return a.utility > b.utility;
        if (a.patient != b.patient) return a.patient < b.patient;
        return a.resource < b.resource;
    });

    Allocation alloc;
    alloc.capacities = capacities_of(resources);
    std::vector<int> remaining = alloc.capacities;
    for (const Entry& e : entries) {
        if (remaining[e.resource] == 0) continue;
        --remaining[e.resource];
        alloc.assignments.emplace_back(e.patient, e.resource);
    }
    return alloc;
}

Allocation policy_random(int n_patients, const std::vector<Resource>& resources,
                         std::uint64_t seed) {
    if (n_patients < 1)
        throw ValidationError("policy_random: n_patients must be >= 1");
    check_resources(resources);
    Allocation alloc;
    alloc.capacities = capacities_of(resources);
    Rng rng(seed);
    for (std::size_t j = 0; j < resources.size(); ++j) {
        int take = resources[j].capacity;
        if (take > n_patients) {
            take = n_patients;
            alloc.capped = true;
        }
        for (int i : rng.sample_without_replacement(n_patients, take))
            alloc.assignments.emplace_back(i, static_cast<int>(j));
    }
    return alloc;
}

Allocation solve_exact(const UtilityMatrix& um, const std::vector<Resource>& resources,
                       int size_limit) {
    if (um.n_patients() > size_limit)
        throw InstanceTooLargeError("solve_exact: instance has " +
                                    std::to_string(um.n_patients()) +
                                    " patients, size_limit is " + std::to_string(size_limit));
    if (um.n_resources() != static_cast<int>(resources.size()))
        throw ValidationError("solve_exact: matrix/resource count mismatch");
    check_resources(resources);
    um.validate();

    // Constraints bind per resource only, so the optimum is the per-resource
    // top-C_j positive entries. Tests check this against naive enumeration.
    Allocation alloc;
    alloc.capacities = capacities_of(resources);
    std::vector<int> order(um.n_patients());
    for (std::size_t j = 0; j < resources.size(); ++j) {
        std::iota(order.begin(), order.end(), 0);
        const int jj = static_cast<int>(j);
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            if (um.at(a, jj) != um.at(b, jj)) return um.at(a, jj) > um.at(b, jj);
            return a < b;
        });
        int taken = 0;
        for (int i : order) {
            if (taken == resources[j].capacity) break;
            if (!(um.at(i, jj) > 0.0)) break;
            alloc.assignments.emplace_back(i, jj);
            ++taken;
        }
    }
    return alloc;
}

double allocation_objective(const Allocation& alloc, const UtilityMatrix& um) {
    double total = 0.0;
    for (const auto& [i, j] : alloc.assignments) total += um.at(i, j);
    return total;
}

double realized_utility(const Allocation& alloc, const UtilityMatrix& true_um,
                        const std::vector<Patient>& cohort, double lambda,
                        PenaltyMode mode) {
    if (lambda < 0.0)
        throw ValidationError("realized_utility: lambda must be >= 0");
    if (true_um.n_patients() != static_cast<int>(cohort.size()))
        throw ValidationError("realized_utility: matrix/cohort size mismatch");
    std::vector<Resource> resources(true_um.n_resources());
    if (alloc.capacities.size() != resources.size())
        throw ValidationError("realized_utility: allocation/matrix resource count mismatch");
    for (std::size_t j = 0; j < resources.size(); ++j) {
        resources[j].id = static_cast<int>(j);
        resources[j].capacity = alloc.capacities[j];
    }
    if (const auto report = validate_allocation(alloc, resources); !report.ok())
        throw ValidationError("realized_utility: infeasible allocation: " +
                              report.describe());

    double total = allocation_objective(alloc, true_um);
    if (mode == PenaltyMode::UnallocatedPatients) {
        const auto served = served_mask(alloc, cohort.size());
        for (std::size_t i = 0; i < cohort.size(); ++i)
            if (!served[i]) total -= lambda * cohort[i].severity_weight;
    } else {
        double weight_sum = 0.0;
        for (const auto& p : cohort) weight_sum += p.severity_weight;
        double assigned_weight = 0.0;
        for (const auto& [i, j] : alloc.assignments)
            assigned_weight += cohort[i].severity_weight;
        total -= lambda * (weight_sum * static_cast<double>(resources.size()) -
                           assigned_weight);
    }
    return total;
}

AllocationReport validate_allocation(const Allocation& alloc,
                                     const std::vector<Resource>& resources) {
    AllocationReport report;
    std::vector<int> counts(resources.size(), 0);
    std::set<std::pair<int, int>> seen;
    std::set<std::pair<int, int>> reported;
    for (const auto& pair : alloc.assignments) {
        const auto [i, j] = pair;
        if (j < 0 || static_cast<std::size_t>(j) >= resources.size()) {
            report.capacity_violations.push_back({j, 1, 0});
            continue;
        }
        ++counts[j];
        if (!seen.insert(pair).second && reported.insert(pair).second)
            report.duplicates.push_back({i, j});
    }
    for (std::size_t j = 0; j < resources.size(); ++j)
        if (counts[j] > resources[j].capacity)
            report.capacity_violations.push_back(
                {static_cast<int>(j), counts[j], resources[j].capacity});
    return report;
}

std::string AllocationReport::describe() const {
    if (ok()) return "ok";
    std::ostringstream out;
    for (const auto& v : capacity_violations)
        out << "resource " << v.resource_id << " assigned " << v.assigned
            << " > capacity " << v.capacity << "; ";
    for (const auto& d : duplicates)
        out << "duplicate pair (patient " << d.patient_id << ", resource "
            << d.resource_id << "); ";
    return out.str();
}

int high_severity_denials(const Allocation& alloc, const std::vector<Patient>& cohort,
                          double quantile) {
    if (!(quantile > 0.0) || !(quantile < 1.0))
        throw ValidationError("high_severity_denials: quantile must be in (0,1)");
    if (cohort.empty()) return 0;

    std::vector<double> weights(cohort.size());
    for (std::size_t i = 0; i < cohort.size(); ++i) weights[i] = cohort[i].severity_weight;
    std::sort(weights.begin(), weights.end());
    // threshold = k-th smallest weight with k = ceil(q*N); denial counting is
    // strictly above it, so q=0.9 at N=100 flags exactly the top 10
    const auto n = static_cast<double>(cohort.size());
    auto k = static_cast<std::size_t>(std::ceil(quantile * n));
    k = std::min(std::max<std::size_t>(k, 1), cohort.size());
    const double threshold = weights[k - 1];

    const auto served = served_mask(alloc, cohort.size());
    int denied = 0;
    for (std::size_t i = 0; i < cohort.size(); ++i)
        if (!served[i] && cohort[i].severity_weight > threshold) ++denied;
    return denied;
}

} // namespace scarcealloc
