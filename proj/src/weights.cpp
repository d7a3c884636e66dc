#include "srp/weights.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "srp/errors.hpp"
#include "srp/numerics.hpp"

namespace srp {

CycleWeightModel CycleWeightModel::constant(double alpha) {
    CycleWeightModel m;
    m.regime = WeightRegime::constant;
    m.alpha = alpha;
    return m;
}

CycleWeightModel CycleWeightModel::asymptotic(double alpha,
                                              std::vector<std::pair<int64_t, double>> overrides) {
    CycleWeightModel m;
    m.regime = WeightRegime::asymptotic;
    m.alpha = alpha;
    std::sort(overrides.begin(), overrides.end());
    for (size_t i = 0; i < overrides.size(); ++i) {
        const auto& [j, a] = overrides[i];
        if (j < 1) throw ConfigError("weight override index must be >= 1");
        if (j > max_override_index)
            throw ConfigError("weight override index " + std::to_string(j) + " exceeds cap " +
                              std::to_string(max_override_index));
        if (!std::isfinite(a)) throw ConfigError("weight override value must be finite");
        if (i > 0 && overrides[i - 1].first == j)
            throw ConfigError("duplicate weight override for j = " + std::to_string(j));
    }
    m.overrides = std::move(overrides);
    return m;
}

CycleWeightModel CycleWeightModel::logarithmic(double gamma) {
    if (gamma <= 0.0) throw ConfigError("logarithmic weights need gamma > 0");
    CycleWeightModel m;
    m.regime = WeightRegime::logarithmic;
    m.gamma = gamma;
    return m;
}

double CycleWeightModel::theta() const {
    if (regime == WeightRegime::logarithmic)
        throw ConfigError("theta is defined only for constant/asymptotic weights");
    return std::exp(-alpha);
}

double CycleWeightModel::override_deviation_sum() const {
    double s = 0.0;
    for (const auto& [j, a] : overrides) s += std::abs(a - alpha);
    return s;
}

double cycle_weight(const CycleWeightModel& model, int64_t j) {
    if (j < 1) throw ConfigError("cycle_weight: j must be >= 1");
    switch (model.regime) {
    case WeightRegime::constant:
        return model.alpha;
    case WeightRegime::asymptotic: {
        auto it = std::lower_bound(model.overrides.begin(), model.overrides.end(),
                                   std::make_pair(j, -std::numeric_limits<double>::infinity()));
        if (it != model.overrides.end() && it->first == j) return it->second;
        return model.alpha;
    }
    case WeightRegime::logarithmic:
        return model.gamma * std::log(static_cast<double>(j));
    }
    throw ConfigError("cycle_weight: unknown regime");
}

double WeightTable::log_h_at(int64_t n) const {
    if (n < 0 || n > n_max) throw ConfigError("WeightTable: n out of range");
    return log_h[static_cast<size_t>(n)];
}

WeightTable compute_h(const CycleWeightModel& model, int64_t n_max) {
    if (n_max < 0) throw ConfigError("compute_h: n_max must be >= 0");
    WeightTable t;
    t.n_max = n_max;
    t.log_h.assign(static_cast<size_t>(n_max) + 1, 0.0);
    std::vector<double> neg_alpha(static_cast<size_t>(n_max) + 1, 0.0);
    for (int64_t j = 1; j <= n_max; ++j)
        neg_alpha[static_cast<size_t>(j)] = -cycle_weight(model, j);
    for (int64_t n = 1; n <= n_max; ++n) {
        LogAccumulator acc;
        for (int64_t j = 1; j <= n; ++j)
            acc.add(neg_alpha[static_cast<size_t>(j)] + t.log_h[static_cast<size_t>(n - j)]);
        t.log_h[static_cast<size_t>(n)] = acc.value() - std::log(static_cast<double>(n));
    }
    return t;
}

namespace {

// Sum over partitions of `remaining` into parts of size <= max_part,
// carrying the product of per-part factors (e^{-alpha_j}/j)^{r_j} / r_j!.
double partition_sum(const CycleWeightModel& model, int64_t remaining, int64_t max_part) {
    if (remaining == 0) return 1.0;
    double total = 0.0;
    for (int64_t part = std::min(remaining, max_part); part >= 1; --part) {
        const double base = std::exp(-cycle_weight(model, part)) / static_cast<double>(part);
        double factor = 1.0;
        for (int64_t count = 1; count * part <= remaining; ++count) {
            factor *= base / static_cast<double>(count);
            total += factor * partition_sum(model, remaining - count * part, part - 1);
        }
    }
    return total;
}

} // namespace

double brute_force_h(const CycleWeightModel& model, int64_t n) {
    if (n < 0) throw ConfigError("brute_force_h: n must be >= 0");
    if (n > 9)
        throw ConfigError("brute_force_h: n = " + std::to_string(n) +
                          " too large for exhaustive partition enumeration (max 9)");
    return partition_sum(model, n, n);
}

RegularityReport verify_regularity(const CycleWeightModel& model, int64_t n, double s) {
    if (n < 4) throw ConfigError("verify_regularity: need n >= 4");
    if (s <= 1.0) throw ConfigError("verify_regularity: need s > 1");
    const WeightTable t = compute_h(model, n);
    RegularityReport r;
    for (int64_t m = 2; m <= n; ++m) {
        const double k = std::abs(t.log_h[static_cast<size_t>(m)]) /
                         std::log(static_cast<double>(m));
        r.kappa_hat = std::max(r.kappa_hat, k);
    }
    // C(s) bounds h_m / h_{m'} <= C(s) s^{m'-m} for m <= m'; with
    // g_m = log h_m + m log s this is exp(max over m <= m' of g_m - g_{m'}).
    const double ls = std::log(s);
    double best = 0.0;
    double prefix_max = t.log_h[0];
    for (int64_t m = 1; m <= n; ++m) {
        const double g = t.log_h[static_cast<size_t>(m)] + static_cast<double>(m) * ls;
        best = std::max(best, prefix_max - g);
        prefix_max = std::max(prefix_max, g);
    }
    r.c_hat = std::exp(best);
    // Log-log slope over the upper half of the table.
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    int64_t count = 0;
    for (int64_t m = std::max<int64_t>(2, n / 2); m <= n; ++m) {
        const double x = std::log(static_cast<double>(m));
        const double y = t.log_h[static_cast<size_t>(m)];
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++count;
    }
    const double denom = count * sxx - sx * sx;
    r.slope = (denom != 0.0) ? (count * sxy - sx * sy) / denom : 0.0;
    return r;
}

std::vector<double> first_cycle_length_distribution(const CycleWeightModel& model, int64_t n,
                                                    const WeightTable& table) {
    if (n < 1) throw ConfigError("first_cycle_length_distribution: need n >= 1");
    if (table.n_max < n) throw ConfigError("first_cycle_length_distribution: table too small");
    std::vector<double> p(static_cast<size_t>(n));
    const double log_norm = std::log(static_cast<double>(n)) + table.log_h_at(n);
    for (int64_t j = 1; j <= n; ++j)
        p[static_cast<size_t>(j - 1)] =
            std::exp(-cycle_weight(model, j) + table.log_h_at(n - j) - log_norm);
    return p;
}

std::vector<int64_t> sample_cycle_lengths(const CycleWeightModel& model, int64_t n,
                                          const WeightTable& table, Rng& rng) {
    if (n < 0) throw ConfigError("sample_cycle_lengths: need n >= 0");
    if (table.n_max < n) throw ConfigError("sample_cycle_lengths: table too small");
    std::vector<int64_t> lengths;
    int64_t m = n;
    while (m > 0) {
        const double u = rng.u01();
        const double log_norm = std::log(static_cast<double>(m)) + table.log_h_at(m);
        double cdf = 0.0;
        int64_t drawn = m;
        for (int64_t j = 1; j <= m; ++j) {
            cdf += std::exp(-cycle_weight(model, j) + table.log_h_at(m - j) - log_norm);
            if (u < cdf) {
                drawn = j;
                break;
            }
        }
        lengths.push_back(drawn);
        m -= drawn;
    }
    return lengths;
}

} // namespace srp
