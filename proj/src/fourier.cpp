#include "srp/fourier.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <span>
#include <string>

#include "srp/errors.hpp"
#include "srp/numerics.hpp"

namespace srp {

namespace {

double mode_norm2(const std::array<int32_t, 3>& m) {
    double s = 0.0;
    for (int c = 0; c < 3; ++c) s += static_cast<double>(m[c]) * static_cast<double>(m[c]);
    return s;
}

// e^x - 1 - x, accurate near zero
double exp_rem2(double x) {
    if (std::abs(x) < 1e-4) return 0.5 * x * x * (1.0 + x / 3.0 + x * x / 12.0);
    return std::expm1(x) - x;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

} // namespace

double ModeSet::k_norm(int64_t i) const {
    return std::sqrt(mode_norm2(modes[static_cast<size_t>(i)])) / box.L;
}

double ModeSet::min_nonzero_eps() const {
    double m = std::numeric_limits<double>::infinity();
    for (int64_t i = 0; i < size(); ++i)
        if (i != zero_index) m = std::min(m, eps[static_cast<size_t>(i)]);
    return m;
}

std::vector<std::pair<double, double>> ModeSet::grouped_eps(bool include_zero) const {
    std::vector<double> e;
    e.reserve(eps.size());
    for (int64_t i = 0; i < size(); ++i) {
        if (!include_zero && i == zero_index) continue;
        e.push_back(eps[static_cast<size_t>(i)]);
    }
    std::sort(e.begin(), e.end());
    std::vector<std::pair<double, double>> groups;
    for (size_t i = 0; i < e.size();) {
        size_t j = i;
        while (j < e.size() && e[j] == e[i]) ++j;
        groups.emplace_back(static_cast<double>(j - i), e[i]);
        i = j;
    }
    return groups;
}

ModeSet ModeSet::build(const BoxGeometry& box, const JumpKernel& kernel, double eps_cut) {
    if (kernel.d != box.d) throw ConfigError("ModeSet: kernel/box dimension mismatch");
    if (box.d < 1 || box.d > 3) throw ConfigError("ModeSet: dimension must be 1, 2 or 3");
    if (!(box.L > 0.0)) throw ConfigError("ModeSet: box side must be positive");
    if (!(box.k_max > 0.0)) throw ConfigError("ModeSet: k_max must be positive");
    if (!(eps_cut > 0.0)) throw ConfigError("ModeSet: eps_cut must be positive");

    ModeSet ms;
    ms.box = box;
    ms.kernel = kernel;
    ms.eps_cut = eps_cut;
    const double R = box.L * box.k_max;
    const double R2 = R * R;
    const int64_t M = static_cast<int64_t>(std::floor(R));
    const int64_t lo2 = (box.d >= 2) ? -M : 0, hi2 = (box.d >= 2) ? M : 0;
    const int64_t lo3 = (box.d >= 3) ? -M : 0, hi3 = (box.d >= 3) ? M : 0;
    for (int64_t m1 = -M; m1 <= M; ++m1) {
        for (int64_t m2 = lo2; m2 <= hi2; ++m2) {
            for (int64_t m3 = lo3; m3 <= hi3; ++m3) {
                const double n2 = static_cast<double>(m1 * m1 + m2 * m2 + m3 * m3);
                if (n2 > R2) continue;
                const double k[3] = {static_cast<double>(m1) / box.L,
                                     static_cast<double>(m2) / box.L,
                                     static_cast<double>(m3) / box.L};
                const double e =
                    dispersion(kernel, std::span<const double>(k, static_cast<size_t>(box.d)));
                if (e > eps_cut) {
                    ++ms.dropped_count;
                    continue;
                }
                ms.modes.push_back({static_cast<int32_t>(m1), static_cast<int32_t>(m2),
                                    static_cast<int32_t>(m3)});
                ms.eps.push_back(e);
                if (m1 == 0 && m2 == 0 && m3 == 0) ms.zero_index = ms.size() - 1;
            }
        }
    }
    if (ms.zero_index < 0) throw NumericError("ModeSet: zero mode missing");
    ms.dropped_mass_bound = static_cast<double>(ms.dropped_count) * std::exp(-eps_cut);
    return ms;
}

int64_t OccupationState::count_at(int64_t mode_index) const {
    const auto it = std::lower_bound(
        occupied.begin(), occupied.end(), mode_index,
        [](const std::pair<int64_t, int64_t>& a, int64_t b) { return a.first < b; });
    if (it == occupied.end() || it->first != mode_index) return 0;
    return it->second;
}

int64_t OccupationState::zero_mode_count() const {
    if (modes == nullptr) throw ConfigError("OccupationState: no mode set attached");
    return count_at(modes->zero_index);
}

double ModePartitionTables::log_partition() const {
    return log_row(static_cast<int64_t>(order.size()), N);
}

double ModePartitionTables::log_partition_excl_zero(int64_t n) const {
    if (n < 0 || n > N) throw ConfigError("log_partition_excl_zero: n out of range");
    return log_row(static_cast<int64_t>(order.size()) - 1, n);
}

std::vector<double> ModePartitionTables::zero_mode_marginal() const {
    std::vector<double> p(static_cast<size_t>(N + 1));
    const double log_y = log_partition();
    for (int64_t j = 0; j <= N; ++j)
        p[static_cast<size_t>(j)] =
            std::exp(log_h[static_cast<size_t>(j)] + log_partition_excl_zero(N - j) - log_y);
    return p;
}

ModePartitionTables build_tables(const ModeSet& modes, const WeightTable& table, int64_t N,
                                 double ops_budget) {
    if (N < 1) throw ConfigError("build_tables: N must be positive");
    if (table.n_max < N) throw ConfigError("build_tables: weight table does not cover N");
    const int64_t K = modes.size();
    const double ops = static_cast<double>(K) * static_cast<double>(N) * static_cast<double>(N);
    const double mem = static_cast<double>(K + 1) * static_cast<double>(N + 1) * 8.0;
    if (ops > ops_budget)
        throw BudgetError("build_tables: estimated " + format_double(ops) +
                          " log-domain operations (K=" + std::to_string(K) +
                          ", N=" + std::to_string(N) + ") exceed the budget of " +
                          format_double(ops_budget) + "; estimated table memory " +
                          format_double(mem) + " bytes");
    if (mem > 2e9)
        throw BudgetError("build_tables: estimated table memory " + format_double(mem) +
                          " bytes exceeds 2e9");

    ModePartitionTables t;
    t.modes = &modes;
    t.N = N;
    t.log_h.assign(table.log_h.begin(), table.log_h.begin() + N + 1);
    t.order.reserve(static_cast<size_t>(K));
    for (int64_t i = 0; i < K; ++i)
        if (i != modes.zero_index) t.order.push_back(i);
    t.order.push_back(modes.zero_index);

    const size_t row = static_cast<size_t>(N + 1);
    t.z.assign(static_cast<size_t>(K + 1) * row, neg_inf);
    t.z[0] = 0.0;
    const auto convolve = [&](const double* prev, double* next, double e) {
        for (int64_t n = 0; n <= N; ++n) {
            LogAccumulator acc;
            for (int64_t j = 0; j <= n; ++j) {
                const double a = prev[n - j];
                if (a == neg_inf) continue;
                acc.add(-e * static_cast<double>(j) + t.log_h[static_cast<size_t>(j)] + a);
            }
            next[n] = acc.value();
        }
    };
    for (int64_t m = 1; m <= K; ++m) {
        const double e = modes.eps[static_cast<size_t>(t.order[static_cast<size_t>(m - 1)])];
        convolve(&t.z[static_cast<size_t>(m - 1) * row], &t.z[static_cast<size_t>(m) * row], e);
    }

    // identity check: the sum over zero-mode occupancies of h_j times the
    // zero-mode-excluded partition sum must reproduce the full partition sum,
    // the latter evaluated independently with the zero mode processed first
    std::vector<double> roll(row, neg_inf), next(row);
    roll[0] = 0.0;
    convolve(roll.data(), next.data(), 0.0);
    roll.swap(next);
    for (int64_t i = 0; i < K; ++i) {
        if (i == modes.zero_index) continue;
        convolve(roll.data(), next.data(), modes.eps[static_cast<size_t>(i)]);
        roll.swap(next);
    }
    LogAccumulator lhs;
    for (int64_t j = 0; j <= N; ++j)
        lhs.add(t.log_h[static_cast<size_t>(j)] + t.log_partition_excl_zero(N - j));
    t.identity_rel_error = std::abs(std::expm1(lhs.value() - roll[static_cast<size_t>(N)]));
    return t;
}

OccupationState sample_occupations_exact(const ModePartitionTables& tables, Rng& rng) {
    const int64_t K = static_cast<int64_t>(tables.order.size());
    const int64_t N = tables.N;
    const size_t row = static_cast<size_t>(N + 1);
    std::vector<double> w(row);
    std::vector<std::pair<int64_t, int64_t>> occ;
    int64_t rem = N;
    for (int64_t m = K; m >= 1; --m) {
        const int64_t idx = tables.order[static_cast<size_t>(m - 1)];
        const double e = tables.modes->eps[static_cast<size_t>(idx)];
        const double* prev = &tables.z[static_cast<size_t>(m - 1) * row];
        double best = neg_inf;
        for (int64_t n = 0; n <= rem; ++n) {
            const double a = prev[rem - n];
            w[static_cast<size_t>(n)] =
                (a == neg_inf)
                    ? neg_inf
                    : -e * static_cast<double>(n) + tables.log_h[static_cast<size_t>(n)] + a;
            best = std::max(best, w[static_cast<size_t>(n)]);
        }
        double total = 0.0;
        int64_t last_pos = -1;
        for (int64_t n = 0; n <= rem; ++n) {
            double& v = w[static_cast<size_t>(n)];
            v = (v == neg_inf) ? 0.0 : std::exp(v - best);
            total += v;
            if (v > 0.0) last_pos = n;
        }
        const double target = rng.u01() * total;
        double acc = 0.0;
        int64_t take = last_pos;
        for (int64_t n = 0; n <= rem; ++n) {
            acc += w[static_cast<size_t>(n)];
            if (acc > target && w[static_cast<size_t>(n)] > 0.0) {
                take = n;
                break;
            }
        }
        if (take > 0) occ.emplace_back(idx, take);
        rem -= take;
    }
    if (rem != 0) throw NumericError("sample_occupations_exact: counts do not sum to N");
    std::sort(occ.begin(), occ.end());
    OccupationState state;
    state.modes = tables.modes;
    state.occupied = std::move(occ);
    state.total = N;
    state.equilibrated = true;
    return state;
}

OccupationChain::OccupationChain(const ModeSet& modes, const WeightTable& table, int64_t N,
                                 Rng rng)
    : modes_(&modes), total_(N), rng_(rng) {
    if (N < 1) throw ConfigError("OccupationChain: N must be positive");
    if (table.n_max < N) throw ConfigError("OccupationChain: weight table does not cover N");
    log_h_.assign(table.log_h.begin(), table.log_h.begin() + N + 1);
    std::vector<double> w(modes.eps.size());
    double sum = 0.0;
    for (size_t i = 0; i < w.size(); ++i) {
        w[i] = std::exp(-modes.eps[i]);
        sum += w[i];
    }
    w[static_cast<size_t>(modes.zero_index)] += 0.05 * sum;
    proposal_ = AliasTable(w);
    n_.assign(modes.eps.size(), 0);
    n_[static_cast<size_t>(modes.zero_index)] = N;
}

void OccupationChain::step(int64_t steps) {
    const double* eps = modes_->eps.data();
    const double* lh = log_h_.data();
    for (int64_t s = 0; s < steps; ++s) {
        const size_t ka = proposal_.sample(rng_);
        const size_t kb = proposal_.sample(rng_);
        ++steps_;
        if (ka == kb) {
            ++accepted_;
            continue;
        }
        const int64_t na = n_[ka];
        if (na == 0) continue;
        const int64_t nb = n_[kb];
        const double log_ratio = (eps[ka] - eps[kb]) + lh[nb + 1] + lh[na - 1] - lh[nb] - lh[na];
        if (log_ratio >= 0.0 || std::log(rng_.u01_pos()) < log_ratio) {
            --n_[ka];
            ++n_[kb];
            ++accepted_;
        }
    }
}

OccupationState OccupationChain::snapshot() const {
    OccupationState state;
    state.modes = modes_;
    state.total = total_;
    state.equilibrated = steps_ > 0;
    for (size_t i = 0; i < n_.size(); ++i)
        if (n_[i] > 0) state.occupied.emplace_back(static_cast<int64_t>(i), n_[i]);
    return state;
}

double OccupationChain::acceptance_rate() const {
    return steps_ == 0 ? 0.0 : static_cast<double>(accepted_) / static_cast<double>(steps_);
}

OccupationState sample_occupations_mcmc(const ModeSet& modes, const WeightTable& table, int64_t N,
                                        int64_t steps, Rng& rng) {
    if (steps < 0) throw ConfigError("sample_occupations_mcmc: steps must be nonnegative");
    OccupationChain chain(modes, table, N, Rng(rng.next_u64()));
    chain.step(steps);
    return chain.snapshot();
}

std::vector<int64_t> sample_permutation_given_occupations(const OccupationState& state,
                                                          const CycleWeightModel& model,
                                                          const WeightTable& table, Rng& rng) {
    std::vector<int64_t> r(static_cast<size_t>(state.total + 1), 0);
    for (const auto& [idx, n] : state.occupied) {
        (void)idx;
        if (table.n_max < n)
            throw ConfigError("sample_permutation_given_occupations: weight table does not "
                              "cover the largest occupancy");
        for (int64_t len : sample_cycle_lengths(model, n, table, rng)) ++r[static_cast<size_t>(len)];
    }
    return r;
}

namespace {

void enumerate_partitions(int64_t remaining, int64_t max_part, std::vector<int64_t>& r,
                          std::vector<std::vector<int64_t>>& out) {
    if (remaining == 0) {
        out.push_back(r);
        return;
    }
    for (int64_t j = std::min(remaining, max_part); j >= 1; --j) {
        ++r[static_cast<size_t>(j)];
        enumerate_partitions(remaining - j, j, r, out);
        --r[static_cast<size_t>(j)];
    }
}

} // namespace

std::map<std::vector<int64_t>, double> cycle_count_marginal_exact(const ModeSet& modes,
                                                                  const CycleWeightModel& model,
                                                                  int64_t N) {
    if (N < 1) throw ConfigError("cycle_count_marginal_exact: N must be positive");
    if (N > 6)
        throw ConfigError("cycle_count_marginal_exact: refuses N > 6 (partition enumeration)");
    const auto groups = modes.grouped_eps(true);
    std::vector<double> log_S(static_cast<size_t>(N + 1), neg_inf);
    for (int64_t j = 1; j <= N; ++j) {
        LogAccumulator acc;
        for (const auto& [count, e] : groups) acc.add(std::log(count) - static_cast<double>(j) * e);
        log_S[static_cast<size_t>(j)] = acc.value();
    }
    std::vector<std::vector<int64_t>> partitions;
    std::vector<int64_t> scratch(static_cast<size_t>(N + 1), 0);
    enumerate_partitions(N, N, scratch, partitions);

    std::vector<double> log_mass(partitions.size());
    for (size_t p = 0; p < partitions.size(); ++p) {
        double lm = 0.0;
        for (int64_t j = 1; j <= N; ++j) {
            const int64_t rj = partitions[p][static_cast<size_t>(j)];
            if (rj == 0) continue;
            lm += static_cast<double>(rj) * (-cycle_weight(model, j) +
                                             log_S[static_cast<size_t>(j)] -
                                             std::log(static_cast<double>(j))) -
                  std::lgamma(static_cast<double>(rj) + 1.0);
        }
        log_mass[p] = lm;
    }
    const double log_norm = log_sum_exp(log_mass);
    std::map<std::vector<int64_t>, double> out;
    for (size_t p = 0; p < partitions.size(); ++p)
        out[partitions[p]] = std::exp(log_mass[p] - log_norm);
    return out;
}

namespace {

// log S_j = log sum_k e^{-j eps(k)} for j = 1..N from grouped dispersions
std::vector<double> log_power_sums(const std::vector<std::pair<double, double>>& groups,
                                   int64_t N) {
    std::vector<double> log_S(static_cast<size_t>(N + 1), neg_inf);
    for (int64_t j = 1; j <= N; ++j) {
        LogAccumulator acc;
        for (const auto& [count, e] : groups) {
            const double a = std::log(count) - static_cast<double>(j) * e;
            if (a < -745.0) continue;
            acc.add(a);
        }
        log_S[static_cast<size_t>(j)] = acc.value();
    }
    return log_S;
}

std::vector<double> power_sum_recursion(const std::vector<double>& log_w,
                                        const std::vector<double>& log_S, int64_t N) {
    std::vector<double> log_Y(static_cast<size_t>(N + 1), neg_inf);
    log_Y[0] = 0.0;
    for (int64_t n = 1; n <= N; ++n) {
        LogAccumulator acc;
        for (int64_t j = 1; j <= n; ++j) {
            const double a = log_Y[static_cast<size_t>(n - j)];
            if (a == neg_inf) continue;
            const double s = log_S[static_cast<size_t>(j)];
            if (s == neg_inf) continue;
            acc.add(log_w[static_cast<size_t>(j)] + s + a);
        }
        log_Y[static_cast<size_t>(n)] = acc.value() - std::log(static_cast<double>(n));
    }
    return log_Y;
}

} // namespace

PowerSumTables power_sum_tables(const ModeSet& modes, const CycleWeightModel& model, int64_t N) {
    if (N < 1) throw ConfigError("power_sum_tables: N must be positive");
    std::vector<double> log_w(static_cast<size_t>(N + 1), 0.0);
    for (int64_t j = 1; j <= N; ++j) log_w[static_cast<size_t>(j)] = -cycle_weight(model, j);
    PowerSumTables t;
    t.log_Y = power_sum_recursion(log_w, log_power_sums(modes.grouped_eps(true), N), N);
    t.log_Y_ex = power_sum_recursion(log_w, log_power_sums(modes.grouped_eps(false), N), N);
    return t;
}

std::vector<double> zero_mode_marginal_power_sum(const PowerSumTables& pst,
                                                 const WeightTable& table) {
    const int64_t N = static_cast<int64_t>(pst.log_Y.size()) - 1;
    if (table.n_max < N)
        throw ConfigError("zero_mode_marginal_power_sum: weight table does not cover N");
    std::vector<double> p(static_cast<size_t>(N + 1));
    const double log_y = pst.log_Y[static_cast<size_t>(N)];
    for (int64_t j = 0; j <= N; ++j) {
        const double ex = pst.log_Y_ex[static_cast<size_t>(N - j)];
        p[static_cast<size_t>(j)] =
            (ex == neg_inf) ? 0.0 : std::exp(table.log_h_at(j) + ex - log_y);
    }
    return p;
}

ZeroModeReport zero_mode_statistics(const std::vector<OccupationState>& samples,
                                    const CycleWeightModel& model, double eps, double delta,
                                    int64_t M) {
    if (samples.empty()) throw ConfigError("zero_mode_statistics: no samples");
    if (!(eps > 0.0) || !(delta > 0.0) || M < 1)
        throw ConfigError("zero_mode_statistics: eps, delta and M must be positive");
    const ModeSet* modes = samples.front().modes;
    if (modes == nullptr) throw ConfigError("zero_mode_statistics: samples lack a mode set");
    const int64_t N = samples.front().total;
    for (const auto& s : samples)
        if (s.modes != modes || s.total != N)
            throw ConfigError("zero_mode_statistics: samples must share one mode set and N");

    ZeroModeReport rep;
    rep.sample_count = static_cast<int64_t>(samples.size());
    const double rho = static_cast<double>(N) / modes->box.volume();
    const double rho_c = critical_density(modes->kernel, model);
    rep.nu_tilde = std::max(0.0, 1.0 - rho_c / rho);

    std::vector<double> knorm(static_cast<size_t>(modes->size()));
    for (int64_t i = 0; i < modes->size(); ++i) knorm[static_cast<size_t>(i)] = modes->k_norm(i);

    int64_t count_a = 0, count_b = 0, count_c = 0;
    double sum_zero = 0.0;
    for (const auto& s : samples) {
        int64_t n0 = 0, small_mass = 0, large_mass = 0;
        for (const auto& [idx, n] : s.occupied) {
            if (idx == modes->zero_index) {
                n0 = n;
            } else if (knorm[static_cast<size_t>(idx)] < delta) {
                small_mass += n;
            } else if (n >= M) {
                large_mass += n;
            }
        }
        const double frac = static_cast<double>(n0) / static_cast<double>(N);
        sum_zero += frac;
        if (std::abs(frac - rep.nu_tilde) < eps) ++count_a;
        if (static_cast<double>(small_mass) < eps * static_cast<double>(N)) ++count_b;
        if (static_cast<double>(large_mass) < eps * static_cast<double>(N)) ++count_c;
    }
    const double S = static_cast<double>(samples.size());
    rep.mean_zero_fraction = sum_zero / S;
    rep.p_macroscopic = static_cast<double>(count_a) / S;
    rep.p_small_modes = static_cast<double>(count_b) / S;
    rep.p_large_modes = static_cast<double>(count_c) / S;

    // exponential tail envelope on the five lowest-dispersion nonzero modes:
    // log P(n_k >= j) <= 2 log C(2) - eps(k) j / 2 + log 3
    std::vector<int64_t> order;
    for (int64_t i = 0; i < modes->size(); ++i)
        if (i != modes->zero_index) order.push_back(i);
    std::sort(order.begin(), order.end(), [&](int64_t a, int64_t b) {
        const double ea = modes->eps[static_cast<size_t>(a)], eb = modes->eps[static_cast<size_t>(b)];
        return ea != eb ? ea < eb : a < b;
    });
    if (order.size() > 5) order.resize(5);
    const double log_c2 = std::log(verify_regularity(model, 256, 2.0).c_hat);
    for (int64_t idx : order) {
        ModeTailCheck check;
        check.mode_index = idx;
        check.eps = modes->eps[static_cast<size_t>(idx)];
        std::vector<int64_t> counts; // counts[j-1] = #samples with n_k = j
        for (const auto& s : samples) {
            const int64_t n = s.count_at(idx);
            if (n > check.max_occupancy) check.max_occupancy = n;
            if (n >= 1) {
                if (static_cast<size_t>(n) > counts.size()) counts.resize(static_cast<size_t>(n), 0);
                ++counts[static_cast<size_t>(n - 1)];
            }
        }
        check.max_excess = neg_inf;
        int64_t at_least = 0;
        for (size_t j = counts.size(); j >= 1; --j) {
            at_least += counts[j - 1];
            const double log_p = std::log(static_cast<double>(at_least) / S);
            const double envelope =
                2.0 * log_c2 - 0.5 * check.eps * static_cast<double>(j) + std::log(3.0);
            const double excess = log_p - envelope;
            check.max_excess = std::max(check.max_excess, excess);
            if (excess > 0.0) ++check.exceedances;
        }
        rep.tail_checks.push_back(check);
    }
    return rep;
}

MuLambda mu_lambda_measure(const ModeSet& modes, const CycleWeightModel& model, int64_t n_max) {
    MuLambda mu;
    mu.volume = modes.box.volume();
    if (n_max <= 0) {
        const double rho_c = critical_density(modes.kernel, model);
        n_max = std::max<int64_t>(8, static_cast<int64_t>(std::ceil(4.0 * rho_c * mu.volume)));
    }
    const auto pst = power_sum_tables(modes, model, n_max);
    const double log_z = log_sum_exp(pst.log_Y_ex);
    mu.prob.resize(static_cast<size_t>(n_max + 1));
    for (int64_t n = 0; n <= n_max; ++n) {
        const double v = pst.log_Y_ex[static_cast<size_t>(n)];
        mu.prob[static_cast<size_t>(n)] = (v == neg_inf) ? 0.0 : std::exp(v - log_z);
    }
    const double a = pst.log_Y_ex[static_cast<size_t>(n_max)];
    const double b = pst.log_Y_ex[static_cast<size_t>(n_max - 1)];
    if (a == neg_inf) {
        mu.residual = 0.0;
    } else {
        const double r = std::exp(a - b);
        mu.residual = (b == neg_inf || r >= 1.0)
                          ? 1.0
                          : mu.prob[static_cast<size_t>(n_max)] * r / (1.0 - r);
    }
    return mu;
}

double mode_critical_density(const ModeSet& modes, const CycleWeightModel& model) {
    const auto groups = modes.grouped_eps(false);
    if (groups.empty()) return 0.0;
    if (!(groups.front().second > 0.0))
        throw NumericError("mode_critical_density: nonpositive dispersion at a nonzero mode");
    double total = 0.0;
    for (int64_t j = 1;; ++j) {
        double s_j = 0.0;
        for (const auto& [count, e] : groups) {
            if (static_cast<double>(j) * e > 745.0) break;
            s_j += count * std::exp(-static_cast<double>(j) * e);
        }
        const double term = std::exp(-cycle_weight(model, j)) * s_j;
        total += term;
        if (j >= 8 && term < 1e-16 * total) break;
        if (j > 50000000)
            throw NumericError("mode_critical_density: series did not converge");
    }
    return total / modes.box.volume();
}

double mu_lambda_laplace(const ModeSet& modes, const CycleWeightModel& model, double lambda) {
    if (!std::isfinite(lambda)) throw ConfigError("mu_lambda_laplace: lambda must be finite");
    const double volume = modes.box.volume();
    const double lam_v = lambda / volume;
    const double eps_min = modes.min_nonzero_eps();
    if (!(eps_min > lam_v))
        throw ConfigError("mu_lambda_laplace: requires inf_{k != 0} eps(k) > lambda / volume "
                          "(eps_min = " +
                          format_double(eps_min) + ", lambda/volume = " + format_double(lam_v) +
                          ")");
    if (lambda == 0.0) return 1.0;
    const auto groups = modes.grouped_eps(false);
    double exponent = 0.0;
    for (const auto& [count, e] : groups) {
        double prev = 0.0;
        for (int64_t j = 1;; ++j) {
            const double x = static_cast<double>(j) * lam_v;
            const double term = std::exp(-cycle_weight(model, j)) * count *
                                std::exp(-static_cast<double>(j) * e) * exp_rem2(x) /
                                static_cast<double>(j);
            exponent += term;
            if (term == 0.0 && j >= 2) break;
            if (j >= 8 && term < prev) {
                const double ratio = term / prev;
                if (term * ratio / (1.0 - ratio) < 1e-15 * (1.0 + std::abs(exponent))) break;
            }
            if (j > 2000000)
                throw NumericError("mu_lambda_laplace: cycle-length series did not converge");
            prev = term;
        }
    }
    return std::exp(exponent);
}

} // namespace srp
