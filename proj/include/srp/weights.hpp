#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "srp/rng.hpp"

namespace srp {

enum class WeightRegime { constant, asymptotic, logarithmic };

// Cycle-weight sequence alpha_j. Three shapes are supported:
//   constant     alpha_j = alpha
//   asymptotic   alpha_j = alpha except for a finite override list
//   logarithmic  alpha_j = gamma * log j
struct CycleWeightModel {
    WeightRegime regime = WeightRegime::constant;
    double alpha = 0.0;
    double gamma = 0.0;
    std::vector<std::pair<int64_t, double>> overrides; // sorted by j

    static CycleWeightModel constant(double alpha);
    static CycleWeightModel asymptotic(double alpha,
                                       std::vector<std::pair<int64_t, double>> overrides);
    static CycleWeightModel logarithmic(double gamma);

    // theta = e^{-alpha}; defined for the constant and asymptotic regimes.
    double theta() const;

    // Sum of |alpha_j - alpha| over the override list (zero when empty).
    double override_deviation_sum() const;
};

// Maximum override index accepted in the asymptotic regime.
inline constexpr int64_t max_override_index = 10000;

double cycle_weight(const CycleWeightModel& model, int64_t j);

// Table of log h_n for n = 0..n_max, where h_n normalizes the weighted
// permutation measure on n elements and h_0 = 1.
struct WeightTable {
    int64_t n_max = 0;
    std::vector<double> log_h; // size n_max + 1, log_h[0] = 0

    double log_h_at(int64_t n) const;
    double h(int64_t n) const { return std::exp(log_h_at(n)); }
};

WeightTable compute_h(const CycleWeightModel& model, int64_t n_max);

// Exact h_n by summing over integer partitions; refuses n > 9.
double brute_force_h(const CycleWeightModel& model, int64_t n);

struct RegularityReport {
    double kappa_hat = 0.0; // max_n |log h_n| / log n
    double c_hat = 0.0;     // max_{n <= n'} h_n / (h_{n'} s^{n'-n})
    double slope = 0.0;     // least-squares slope of log h_n vs log n on the tail
};

RegularityReport verify_regularity(const CycleWeightModel& model, int64_t n, double s);

// Law of the length of the cycle containing a distinguished element:
// P(l = j) = e^{-alpha_j} h_{n-j} / (n h_n), j = 1..n.
std::vector<double> first_cycle_length_distribution(const CycleWeightModel& model, int64_t n,
                                                    const WeightTable& table);

// Sequential exact sampler for the cycle-length sequence of a weighted
// random permutation: draws the first cycle, then recurses on the rest.
std::vector<int64_t> sample_cycle_lengths(const CycleWeightModel& model, int64_t n,
                                          const WeightTable& table, Rng& rng);

} // namespace srp
