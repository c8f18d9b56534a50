#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace scarcealloc {

/// Derives an independent stream seed from (root, index). splitmix64 finalizer;
/// the documented seed-splitting scheme: parallel and serial execution agree.
std::uint64_t split_seed(std::uint64_t root, std::uint64_t index);

/// Deterministic sampler over std::mt19937_64. The distribution algorithms are
/// implemented here (not taken from <random>) so that identical seeds produce
/// bitwise-identical draws on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1), 53-bit resolution.
    double uniform();

    /// Uniform integer in [0, n), rejection-sampled (unbiased). n >= 1.
    std::uint64_t uniform_below(std::uint64_t n);

    /// Standard normal via Box-Muller (one fresh pair per call, no cache).
    double normal();

    double gamma(double shape, double scale);
    double beta(double alpha, double beta);
    bool bernoulli(double p) { return uniform() < p; }

    /// Fisher-Yates permutation of 0..n-1.
    std::vector<int> permutation(int n);

    /// k distinct values from 0..n-1, order random. Requires k <= n.
    std::vector<int> sample_without_replacement(int n, int k);

private:
    std::mt19937_64 engine_;
};

} // namespace scarcealloc
