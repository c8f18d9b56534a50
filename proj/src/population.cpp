#include "scarcealloc/population.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "scarcealloc/errors.hpp"
#include "scarcealloc/random.hpp"

namespace scarcealloc {

namespace {

constexpr double kLogitClamp = 1e-6;
constexpr double kSigmaBracketStart = 10.0;
constexpr double kSigmaBracketMax = 160.0;
constexpr int kBisectionIters = 80;

std::vector<double> noise_draws(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> z(n);
    for (auto& v : z) v = rng.normal();
    return z;
}

std::vector<double> noisy_scores(const std::vector<Patient>& cohort, double sigma,
                                 std::span<const double> z) {
    std::vector<double> s(cohort.size());
    for (std::size_t i = 0; i < cohort.size(); ++i)
        s[i] = cohort[i].raw_score + sigma * z[i];
    return s;
}

std::vector<int> outcomes_of(const std::vector<Patient>& cohort) {
    std::vector<int> y(cohort.size());
    for (std::size_t i = 0; i < cohort.size(); ++i) y[i] = cohort[i].outcome;
    return y;
}

/// Adjacent-violator pooling: weighted means merged until nondecreasing.
void pool_adjacent_violators(std::vector<double>& values, std::vector<double>& weights,
                             std::vector<int>& sizes) {
    std::size_t top = 0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        values[top] = values[i];
        weights[top] = weights[i];
        sizes[top] = sizes[i];
        while (top > 0 && values[top - 1] > values[top]) {
            const double w = weights[top - 1] + weights[top];
            values[top - 1] = (values[top - 1] * weights[top - 1] +
                               values[top] * weights[top]) / w;
            weights[top - 1] = w;
            sizes[top - 1] += sizes[top];
            --top;
        }
        ++top;
    }
    values.resize(top);
    weights.resize(top);
    sizes.resize(top);
}

} // namespace

void Resource::validate() const {
    if (capacity < 0)
        throw ValidationError("resource '" + name + "': capacity must be >= 0");
    if (!(risk_reduction_factor > 0.0) || risk_reduction_factor > 1.0)
        throw ValidationError("resource '" + name +
                              "': risk_reduction_factor must be in (0, 1]");
}

CohortSpec CohortSpec::defaults() {
    CohortSpec spec;
    spec.resources = {
        {0, "imaging", 50, 0.3},
        {1, "monitored_bed", 30, 0.5},
    };
    return spec;
}

void CohortSpec::validate() const {
    if (n_patients < 1) throw ValidationError("cohort.n_patients must be >= 1");
    if (severity_shape <= 0.0) throw ValidationError("cohort.severity_shape must be > 0");
    if (severity_scale <= 0.0) throw ValidationError("cohort.severity_scale must be > 0");
    if (risk_alpha <= 0.0) throw ValidationError("cohort.risk_alpha must be > 0");
    if (risk_beta <= 0.0) throw ValidationError("cohort.risk_beta must be > 0");
    if (!(target_auroc > 0.5) || target_auroc > 1.0)
        throw ValidationError("cohort.target_auroc must be in (0.5, 1.0]");
    for (const auto& r : resources) r.validate();
}

double logit_clamped(double p) {
    const double q = std::clamp(p, kLogitClamp, 1.0 - kLogitClamp);
    return std::log(q / (1.0 - q));
}

std::vector<Patient> generate_cohort(const CohortSpec& spec, std::uint64_t seed) {
    spec.validate();
    Rng rng(seed);
    std::vector<Patient> cohort(spec.n_patients);
    for (int i = 0; i < spec.n_patients; ++i) {
        Patient& p = cohort[i];
        p.id = i;
        p.severity_weight = rng.gamma(spec.severity_shape, spec.severity_scale);
        p.baseline_risk = rng.beta(spec.risk_alpha, spec.risk_beta);
        p.raw_score = logit_clamped(p.baseline_risk);
        p.outcome = rng.bernoulli(p.baseline_risk) ? 1 : 0;
    }
    return cohort;
}

double auroc(std::span<const double> scores, std::span<const int> outcomes) {
    if (scores.size() != outcomes.size())
        throw ValidationError("auroc: scores and outcomes must have equal length");
    const std::size_t n = scores.size();
    std::size_t n_pos = 0;
    for (int y : outcomes) {
        if (y != 0 && y != 1) throw ValidationError("auroc: outcomes must be 0 or 1");
        n_pos += static_cast<std::size_t>(y);
    }
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0)
        throw UndefinedMetricError("auroc: undefined when outcomes are all one class");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // rank-sum with average ranks over tied score groups == ties counted 1/2
    double pos_rank_sum = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j + 1);
        for (std::size_t k = i; k <= j; ++k)
            if (outcomes[order[k]] == 1) pos_rank_sum += avg_rank;
        i = j + 1;
    }
    const double np = static_cast<double>(n_pos);
    const double nn = static_cast<double>(n_neg);
    return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

NoiseFit fit_noise_scale(const std::vector<Patient>& cohort, double target_auroc,
                         double tolerance, std::uint64_t seed) {
    if (!(target_auroc > 0.5) || target_auroc > 1.0)
        throw ValidationError("fit_noise_scale: target_auroc must be in (0.5, 1.0]");
    if (tolerance <= 0.0)
        throw ValidationError("fit_noise_scale: tolerance must be > 0");
    if (cohort.empty())
        throw ValidationError("fit_noise_scale: empty cohort");

    const auto z = noise_draws(cohort.size(), seed);
    const auto y = outcomes_of(cohort);

    NoiseFit fit;
    auto evaluate = [&](double sigma) {
        const double a = auroc(noisy_scores(cohort, sigma, z), y);
        fit.trace.emplace_back(sigma, a);
        return a;
    };

    const double a0 = evaluate(0.0);
    if (a0 < target_auroc - tolerance) {
        fit.sigma = 0.0;
        fit.achieved_auroc = a0;
        fit.noiseless_below_target = true;
        return fit;
    }
    if (std::abs(a0 - target_auroc) <= tolerance) {
        fit.sigma = 0.0;
        fit.achieved_auroc = a0;
        return fit;
    }

    double lo = 0.0;
    double hi = kSigmaBracketStart;
    double a_hi = evaluate(hi);
    while (a_hi > target_auroc && hi < kSigmaBracketMax) {
        lo = hi;
        hi *= 2.0;
        a_hi = evaluate(hi);
    }
    if (a_hi > target_auroc + tolerance)
        throw FitFailureError("fit_noise_scale: target AUROC not bracketed at sigma=" +
                                  std::to_string(hi),
                              a_hi);

    double best_sigma = hi;
    double best_auroc = a_hi;
    for (int iter = 0; iter < kBisectionIters; ++iter) {
        const double mid = 0.5 * (lo + hi);
        const double a = evaluate(mid);
        if (std::abs(a - target_auroc) < std::abs(best_auroc - target_auroc)) {
            best_sigma = mid;
            best_auroc = a;
        }
        if (std::abs(a - target_auroc) <= tolerance) {
            fit.sigma = mid;
            fit.achieved_auroc = a;
            return fit;
        }
        if (a > target_auroc) lo = mid; else hi = mid;
    }
    if (std::abs(best_auroc - target_auroc) <= tolerance) {
        fit.sigma = best_sigma;
        fit.achieved_auroc = best_auroc;
        return fit;
    }
    throw FitFailureError("fit_noise_scale: bisection did not reach tolerance", best_auroc);
}

RiskEstimates predict_risks(const std::vector<Patient>& cohort, double sigma,
                            int n_bins, std::uint64_t seed) {
    if (cohort.empty()) throw ValidationError("predict_risks: empty cohort");
    if (sigma < 0.0) throw ValidationError("predict_risks: sigma must be >= 0");
    if (n_bins < 2) throw ValidationError("predict_risks: n_bins must be >= 2");

    const std::size_t n = cohort.size();
    const auto z = noise_draws(n, seed);
    const auto scores = noisy_scores(cohort, sigma, z);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    const int bins = std::min<int>(n_bins, static_cast<int>(n));
    std::vector<double> bin_rate;
    std::vector<double> bin_weight;
    std::vector<int> bin_size;
    std::vector<int> bin_of(n);
    for (int b = 0; b < bins; ++b) {
        const std::size_t begin = n * static_cast<std::size_t>(b) / bins;
        const std::size_t end = n * (static_cast<std::size_t>(b) + 1) / bins;
        if (begin == end) continue;
        double events = 0.0;
        for (std::size_t k = begin; k < end; ++k) {
            bin_of[order[k]] = static_cast<int>(bin_rate.size());
            events += cohort[order[k]].outcome;
        }
        const auto count = static_cast<double>(end - begin);
        bin_rate.push_back(events / count);
        bin_weight.push_back(count);
        bin_size.push_back(static_cast<int>(count));
    }

    // pooling changes the bin count; remap members through cumulative sizes
    std::vector<int> pre_pool_sizes = bin_size;
    pool_adjacent_violators(bin_rate, bin_weight, bin_size);
    std::vector<int> pooled_of(pre_pool_sizes.size());
    {
        std::size_t pooled = 0;
        int remaining = bin_size.empty() ? 0 : bin_size[0];
        for (std::size_t b = 0; b < pre_pool_sizes.size(); ++b) {
            while (remaining == 0 && pooled + 1 < bin_rate.size())
                remaining = bin_size[++pooled];
            pooled_of[b] = static_cast<int>(pooled);
            remaining -= pre_pool_sizes[b];
        }
    }

    RiskEstimates est;
    est.noise_sigma = sigma;
    est.predicted_risk.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        est.predicted_risk[i] = bin_rate[pooled_of[bin_of[i]]];
    try {
        est.achieved_auroc = auroc(est.predicted_risk, outcomes_of(cohort));
    } catch (const UndefinedMetricError&) {
        est.achieved_auroc = std::numeric_limits<double>::quiet_NaN();
    }
    return est;
}

double calibration_error(std::span<const double> predictions,
                         std::span<const int> outcomes, int n_bins) {
    if (predictions.size() != outcomes.size())
        throw ValidationError("calibration_error: length mismatch");
    if (predictions.empty())
        throw ValidationError("calibration_error: empty inputs");
    if (n_bins < 1)
        throw ValidationError("calibration_error: n_bins must be >= 1");

    const std::size_t n = predictions.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return predictions[a] < predictions[b];
    });

    const int bins = std::min<int>(n_bins, static_cast<int>(n));
    double ece = 0.0;
    for (int b = 0; b < bins; ++b) {
        const std::size_t begin = n * static_cast<std::size_t>(b) / bins;
        const std::size_t end = n * (static_cast<std::size_t>(b) + 1) / bins;
        if (begin == end) continue;
        double mean_pred = 0.0;
        double rate = 0.0;
        for (std::size_t k = begin; k < end; ++k) {
            mean_pred += predictions[order[k]];
            rate += outcomes[order[k]];
        }
        const auto count = static_cast<double>(end - begin);
        ece += (count / static_cast<double>(n)) * std::abs(mean_pred / count - rate / count);
    }
    return ece;
}

} // namespace scarcealloc
