#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace scarcealloc {

/// One unit of demand. severity_weight w_i > 0 scales utility; baseline_risk
/// p_i is the deterioration probability without any resource; outcome is the
/// realized Bernoulli(p_i) draw; raw_score is the noiseless latent signal
/// logit(p_i) that the simulated risk model observes (plus noise).
struct Patient {
    int id = 0;
    double severity_weight = 1.0;
    double baseline_risk = 0.0;
    double raw_score = 0.0;
    int outcome = 0;
};

/// One unit of supply with capacity C_j and a multiplicative risk-reduction
/// factor rho_j in (0, 1]: allocating cuts the patient's risk by rho_j * p_i.
struct Resource {
    int id = 0;
    std::string name;
    int capacity = 0;
    double risk_reduction_factor = 1.0;

    void validate() const;
};

struct CohortSpec {
    int n_patients = 500;
    double severity_shape = 400.0;
    double severity_scale = 0.005;
    double risk_alpha = 0.9;
    double risk_beta = 0.45;
    std::vector<Resource> resources;
    double target_auroc = 0.85;

    /// The shipped defaults: 500 patients, imaging (C=50, rho=0.3) and
    /// monitored beds (C=30, rho=0.5), target AUROC 0.85.
    static CohortSpec defaults();

    void validate() const;
};

/// Recalibrated risk predictions for one cohort.
struct RiskEstimates {
    std::vector<double> predicted_risk;
    double noise_sigma = 0.0;
    double achieved_auroc = 0.0;
};

/// Result of fitting the score-noise scale to a target AUROC.
struct NoiseFit {
    double sigma = 0.0;
    double achieved_auroc = 0.0;
    /// True when even noiseless scores fall below the target and sigma=0 is
    /// returned as the best achievable.
    bool noiseless_below_target = false;
    /// (sigma, empirical AUROC) for every bisection evaluation, in call order.
    std::vector<std::pair<double, double>> trace;
};

/// logit with p clamped to [1e-6, 1-1e-6].
double logit_clamped(double p);

/// Draws w_i ~ Gamma(shape, scale), p_i ~ Beta(alpha, beta),
/// outcome_i ~ Bernoulli(p_i). Deterministic given seed.
std::vector<Patient> generate_cohort(const CohortSpec& spec, std::uint64_t seed);

/// Mann-Whitney AUROC with ties counted 1/2. Throws UndefinedMetricError when
/// outcomes are all one class.
double auroc(std::span<const double> scores, std::span<const int> outcomes);

/// Bisects on sigma so that scores logit(p_i) + N(0, sigma^2) reach the target
/// empirical AUROC within tolerance, using one fixed noise draw per seed.
NoiseFit fit_noise_scale(const std::vector<Patient>& cohort, double target_auroc,
                         double tolerance, std::uint64_t seed);

/// Noisy scores recalibrated to probabilities by n_bins equal-count bins of
/// observed outcome rates, with adjacent-violator pooling for monotonicity.
RiskEstimates predict_risks(const std::vector<Patient>& cohort, double sigma,
                            int n_bins, std::uint64_t seed);

/// Expected calibration error over n_bins equal-count bins of the predictions.
double calibration_error(std::span<const double> predictions,
                         std::span<const int> outcomes, int n_bins);

} // namespace scarcealloc
