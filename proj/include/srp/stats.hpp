#pragma once

#include <cstdint>
#include <vector>

#include "srp/rng.hpp"
#include "srp/spectrum.hpp"

namespace srp {

// Stick-breaking fragments: X_i = 1 - U^{1/theta} (so P(X_i > s) = (1-s)^theta),
// fragment_i = X_i * prod_{l<i} (1 - X_l). Returns the first m fragments.
std::vector<double> sample_gem(double theta, int64_t m, Rng& rng);

struct PdSumSquares {
    double estimate = 0.0;
    double std_error = 0.0;
    double residual = 0.0; // expected truncated mass (theta/(theta+1))^m_trunc
};

// Monte Carlo estimate of E[sum_i p_i^2] under the size-ordered stick-breaking
// law; approaches 1/(1+theta). The residual should be kept below 1e-6 when the
// estimate is used as an oracle; it is reported, not enforced, so that
// truncation behaviour itself stays testable.
PdSumSquares pd_sum_squares_reference(double theta, int64_t draws, int64_t m_trunc, Rng& rng);

struct CoordinateFit {
    double ks_distance = 0.0;
    double p_value = 0.0;
};

struct PdFitReport {
    std::vector<CoordinateFit> coordinates; // first k size-ordered coordinates
    double sum_squares_empirical = 0.0;
    double sum_squares_empirical_se = 0.0;
    double sum_squares_reference = 0.0;
    double sum_squares_reference_se = 0.0;
};

// Compares the normalized size-ordered cycle lengths l^(i) / (nu_hat N)
// against stick-breaking reference draws: per-coordinate two-sample KS plus
// the sum-of-squares moment. Refuses nu_hat <= 0.
PdFitReport pd_fit_test(const std::vector<CycleSpectrum>& spectra, double nu_hat, double theta,
                        int64_t k);

struct GiantCycleReport {
    std::vector<double> ratios; // largest normalized cycle per sample, ascending
    double mean_ratio = 0.0;
    double p_above = 0.0; // P(l^(1) / (nu_hat N) > threshold)
    double threshold = 0.9;
};

GiantCycleReport giant_cycle_test(const std::vector<CycleSpectrum>& spectra, double nu_hat,
                                  double threshold = 0.9);

} // namespace srp
