#include "srp/stats.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "srp/errors.hpp"
#include "srp/numerics.hpp"

namespace srp {

std::vector<double> sample_gem(double theta, int64_t m, Rng& rng) {
    if (!(theta > 0.0)) throw ConfigError("sample_gem: theta must be positive");
    if (m < 1) throw ConfigError("sample_gem: m must be positive");
    std::vector<double> fragments(static_cast<size_t>(m));
    double remaining = 1.0;
    for (int64_t i = 0; i < m; ++i) {
        const double x = 1.0 - std::pow(rng.u01_pos(), 1.0 / theta);
        fragments[static_cast<size_t>(i)] = x * remaining;
        remaining *= 1.0 - x;
    }
    return fragments;
}

PdSumSquares pd_sum_squares_reference(double theta, int64_t draws, int64_t m_trunc, Rng& rng) {
    if (draws < 2) throw ConfigError("pd_sum_squares_reference: need at least 2 draws");
    std::vector<double> values(static_cast<size_t>(draws));
    for (int64_t d = 0; d < draws; ++d) {
        double s = 0.0;
        for (double p : sample_gem(theta, m_trunc, rng)) s += p * p;
        values[static_cast<size_t>(d)] = s;
    }
    PdSumSquares out;
    out.estimate = mean(values);
    out.std_error = standard_error(values);
    out.residual = std::pow(theta / (theta + 1.0), static_cast<double>(m_trunc));
    return out;
}

namespace {

constexpr uint64_t pd_reference_seed = 0x9d2c5680f4257a1bULL;
constexpr int64_t pd_reference_draws = 20000;
constexpr int64_t pd_reference_trunc = 128;

// Size-ordered stick-breaking reference draws with a fixed internal seed so
// that test outcomes are reproducible.
std::vector<std::vector<double>> pd_reference_samples(double theta) {
    Rng rng(pd_reference_seed);
    std::vector<std::vector<double>> out(static_cast<size_t>(pd_reference_draws));
    for (auto& sample : out) {
        sample = sample_gem(theta, pd_reference_trunc, rng);
        std::sort(sample.begin(), sample.end(), std::greater<double>());
    }
    return out;
}

} // namespace

PdFitReport pd_fit_test(const std::vector<CycleSpectrum>& spectra, double nu_hat, double theta,
                        int64_t k) {
    if (!(nu_hat > 0.0))
        throw ConfigError("pd_fit_test: requires nu_hat > 0 (no long-cycle mass to normalize)");
    if (spectra.empty()) throw ConfigError("pd_fit_test: no spectra");
    if (k < 1) throw ConfigError("pd_fit_test: k must be positive");

    const auto reference = pd_reference_samples(theta);
    PdFitReport report;
    report.coordinates.resize(static_cast<size_t>(k));

    std::vector<double> emp(spectra.size()), ref(reference.size());
    for (int64_t c = 0; c < k; ++c) {
        for (size_t s = 0; s < spectra.size(); ++s) {
            const auto& ls = spectra[s].lengths;
            const double scale = nu_hat * static_cast<double>(spectra[s].total);
            emp[s] = (static_cast<size_t>(c) < ls.size())
                         ? static_cast<double>(ls[static_cast<size_t>(c)]) / scale
                         : 0.0;
        }
        for (size_t s = 0; s < reference.size(); ++s) ref[s] = reference[s][static_cast<size_t>(c)];
        const KSResult ks = two_sample_ks(emp, ref);
        report.coordinates[static_cast<size_t>(c)] = {ks.d, ks.p_value};
    }

    std::vector<double> emp_ss(spectra.size());
    for (size_t s = 0; s < spectra.size(); ++s) {
        const double scale = nu_hat * static_cast<double>(spectra[s].total);
        double sum = 0.0;
        for (int64_t l : spectra[s].lengths) {
            const double x = static_cast<double>(l) / scale;
            sum += x * x;
        }
        emp_ss[s] = sum;
    }
    std::vector<double> ref_ss(reference.size());
    for (size_t s = 0; s < reference.size(); ++s) {
        double sum = 0.0;
        for (double p : reference[s]) sum += p * p;
        ref_ss[s] = sum;
    }
    report.sum_squares_empirical = mean(emp_ss);
    report.sum_squares_empirical_se = standard_error(emp_ss);
    report.sum_squares_reference = mean(ref_ss);
    report.sum_squares_reference_se = standard_error(ref_ss);
    return report;
}

GiantCycleReport giant_cycle_test(const std::vector<CycleSpectrum>& spectra, double nu_hat,
                                  double threshold) {
    if (!(nu_hat > 0.0))
        throw ConfigError("giant_cycle_test: requires nu_hat > 0 (no long-cycle mass to "
                          "normalize)");
    if (spectra.empty()) throw ConfigError("giant_cycle_test: no spectra");
    GiantCycleReport report;
    report.threshold = threshold;
    report.ratios.resize(spectra.size());
    int64_t above = 0;
    double sum = 0.0;
    for (size_t s = 0; s < spectra.size(); ++s) {
        const double r = static_cast<double>(spectra[s].largest()) /
                         (nu_hat * static_cast<double>(spectra[s].total));
        report.ratios[s] = r;
        sum += r;
        if (r > threshold) ++above;
    }
    std::sort(report.ratios.begin(), report.ratios.end());
    report.mean_ratio = sum / static_cast<double>(spectra.size());
    report.p_above = static_cast<double>(above) / static_cast<double>(spectra.size());
    return report;
}

} // namespace srp
