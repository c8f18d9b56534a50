#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "scarcealloc/population.hpp"

namespace scarcealloc {

enum class UtilityKind { Estimated, True };

/// N x M table of nonnegative incremental utilities u_ij (or estimates).
class UtilityMatrix {
public:
    UtilityMatrix() = default;
    UtilityMatrix(int n_patients, int n_resources, UtilityKind kind);

    double at(int patient, int resource) const {
        return values_[static_cast<std::size_t>(patient) * n_resources_ + resource];
    }
    double& at(int patient, int resource) {
        return values_[static_cast<std::size_t>(patient) * n_resources_ + resource];
    }
    int n_patients() const { return n_patients_; }
    int n_resources() const { return n_resources_; }
    UtilityKind kind() const { return kind_; }

    void validate() const;

private:
    int n_patients_ = 0;
    int n_resources_ = 0;
    UtilityKind kind_ = UtilityKind::Estimated;
    std::vector<double> values_;
};

/// u_ij = w_i * rho_j * risk_i, the multiplicative risk-reduction model.
UtilityMatrix utility_matrix(const std::vector<Patient>& cohort,
                             const std::vector<Resource>& resources,
                             std::span<const double> risks, UtilityKind kind);

/// A feasible-by-construction set of (patient, resource) assignments.
struct Allocation {
    std::vector<std::pair<int, int>> assignments;
    std::vector<int> capacities;
    /// Set by policy_random when a capacity exceeded the cohort size.
    bool capped = false;
};

struct CapacityViolation {
    int resource_id;
    int assigned;
    int capacity;
};

struct DuplicatePair {
    int patient_id;
    int resource_id;
};

struct AllocationReport {
    std::vector<CapacityViolation> capacity_violations;
    std::vector<DuplicatePair> duplicates;

    bool ok() const { return capacity_violations.empty() && duplicates.empty(); }
    std::string describe() const;
};

/// Scans patients in arrival order; anyone with risk > threshold takes one
/// unit of every resource that still has capacity.
Allocation policy_risk_threshold(std::span<const double> risks,
                                 const std::vector<Resource>& resources,
                                 double threshold, std::span<const int> arrival_order);

/// Accepts (patient, resource) pairs in order of utility descending
/// (ties: lower patient id, then lower resource id) while capacity remains.
Allocation policy_utility_greedy(const UtilityMatrix& um,
                                 const std::vector<Resource>& resources);

/// Per resource independently, a uniform random subset of C_j patients.
Allocation policy_random(int n_patients, const std::vector<Resource>& resources,
                         std::uint64_t seed);

/// Global maximizer of the allocation objective; per-resource top-C_j
/// selection over positive entries. size_limit guards enumeration test paths.
Allocation solve_exact(const UtilityMatrix& um, const std::vector<Resource>& resources,
                       int size_limit = 20);

/// Sum of matrix entries over the allocation's assignments.
double allocation_objective(const Allocation& alloc, const UtilityMatrix& um);

/// Penalty readings for patients left without resources.
enum class PenaltyMode {
    /// lambda * sum of w_i over patients holding no resource at all (default).
    UnallocatedPatients,
    /// lambda * sum over resources of w_i for every patient not assigned it.
    PerResourceShortfall,
};

/// True utility of the assigned pairs minus the lambda-weighted severity
/// penalty. Throws ValidationError if the allocation is infeasible.
double realized_utility(const Allocation& alloc, const UtilityMatrix& true_um,
                        const std::vector<Patient>& cohort, double lambda,
                        PenaltyMode mode = PenaltyMode::UnallocatedPatients);

AllocationReport validate_allocation(const Allocation& alloc,
                                     const std::vector<Resource>& resources);

/// Count of patients above the cohort's quantile-q severity level that hold
/// no resource.
int high_severity_denials(const Allocation& alloc, const std::vector<Patient>& cohort,
                          double quantile);

struct PolicyOutcome {
    Allocation allocation;
    double realized_utility = 0.0;
    int n_high_severity_denied = 0;
    std::string policy_name;
};

} // namespace scarcealloc
