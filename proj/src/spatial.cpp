#include "srp/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "srp/errors.hpp"
#include "srp/numerics.hpp"

namespace srp {

SpatialConfig::SpatialConfig(int64_t n, int d) : n_(n), d_(d) {
    if (n < 1) throw ConfigError("SpatialConfig: need at least one point");
    if (d < 1 || d > 3) throw ConfigError("SpatialConfig: dimension must be 1, 2 or 3");
    x_.assign(static_cast<size_t>(n * d), 0.0);
    pi_.resize(static_cast<size_t>(n));
    pi_inv_.resize(static_cast<size_t>(n));
    cycle_id_.resize(static_cast<size_t>(n));
    cycle_len_.assign(static_cast<size_t>(n), 1);
    r_.assign(static_cast<size_t>(n + 1), 0);
    for (int64_t i = 0; i < n; ++i) {
        pi_[static_cast<size_t>(i)] = i;
        pi_inv_[static_cast<size_t>(i)] = i;
        cycle_id_[static_cast<size_t>(i)] = i;
    }
    r_[1] = n;
}

int64_t SpatialConfig::cycle_length_of(int64_t i) const {
    return cycle_len_[static_cast<size_t>(cycle_id_[static_cast<size_t>(i)])];
}

bool SpatialConfig::same_cycle(int64_t i, int64_t j) const {
    return cycle_id_[static_cast<size_t>(i)] == cycle_id_[static_cast<size_t>(j)];
}

CycleSpectrum SpatialConfig::spectrum() const { return CycleSpectrum::from_counts(r_); }

void SpatialConfig::set_position(int64_t i, std::span<const double> x, double delta_h) {
    for (int c = 0; c < d_; ++c) x_[static_cast<size_t>(i * d_ + c)] = x[static_cast<size_t>(c)];
    energy_ += delta_h;
}

int64_t SpatialConfig::steps_between(int64_t i, int64_t j) const {
    if (!same_cycle(i, j) || i == j) throw ConfigError("steps_between: need i != j in one cycle");
    const int64_t c = cycle_length_of(i);
    int64_t u = pi_[static_cast<size_t>(i)], v = pi_[static_cast<size_t>(j)];
    int64_t t = 1;
    while (true) {
        if (u == j) return t;
        if (v == i) return c - t;
        u = pi_[static_cast<size_t>(u)];
        v = pi_[static_cast<size_t>(v)];
        ++t;
    }
}

int64_t SpatialConfig::alloc_cycle_id() {
    if (!free_ids_.empty()) {
        const int64_t id = free_ids_.back();
        free_ids_.pop_back();
        return id;
    }
    cycle_len_.push_back(-1);
    return static_cast<int64_t>(cycle_len_.size()) - 1;
}

void SpatialConfig::free_cycle_id(int64_t id) {
    cycle_len_[static_cast<size_t>(id)] = -1;
    free_ids_.push_back(id);
}

void SpatialConfig::apply_swap(int64_t i, int64_t j, double delta_h) {
    if (i == j) throw ConfigError("apply_swap: need i != j");
    const int64_t id_i = cycle_id_[static_cast<size_t>(i)];
    const int64_t id_j = cycle_id_[static_cast<size_t>(j)];
    if (id_i != id_j) {
        const int64_t a = cycle_len_[static_cast<size_t>(id_i)];
        const int64_t b = cycle_len_[static_cast<size_t>(id_j)];
        int64_t keep = id_i, drop = id_j, drop_elem = j;
        if (b > a) {
            keep = id_j;
            drop = id_i;
            drop_elem = i;
        }
        int64_t u = drop_elem;
        do {
            cycle_id_[static_cast<size_t>(u)] = keep;
            u = pi_[static_cast<size_t>(u)];
        } while (u != drop_elem);
        cycle_len_[static_cast<size_t>(keep)] = a + b;
        free_cycle_id(drop);
        --r_[static_cast<size_t>(a)];
        --r_[static_cast<size_t>(b)];
        ++r_[static_cast<size_t>(a + b)];
    } else {
        const int64_t c = cycle_len_[static_cast<size_t>(id_i)];
        const int64_t t = steps_between(i, j);
        const int64_t fresh = alloc_cycle_id();
        if (t <= c - t) {
            // relabel j's side: pi(i), ..., pi^t(i) = j
            int64_t u = pi_[static_cast<size_t>(i)];
            while (true) {
                cycle_id_[static_cast<size_t>(u)] = fresh;
                if (u == j) break;
                u = pi_[static_cast<size_t>(u)];
            }
            cycle_len_[static_cast<size_t>(fresh)] = t;
            cycle_len_[static_cast<size_t>(id_i)] = c - t;
        } else {
            // relabel i's side: i, pi(j), ..., pi^{c-t-1}(j)
            cycle_id_[static_cast<size_t>(i)] = fresh;
            int64_t u = pi_[static_cast<size_t>(j)];
            while (u != i) {
                cycle_id_[static_cast<size_t>(u)] = fresh;
                u = pi_[static_cast<size_t>(u)];
            }
            cycle_len_[static_cast<size_t>(fresh)] = c - t;
            cycle_len_[static_cast<size_t>(id_i)] = t;
        }
        --r_[static_cast<size_t>(c)];
        ++r_[static_cast<size_t>(t)];
        ++r_[static_cast<size_t>(c - t)];
    }
    std::swap(pi_[static_cast<size_t>(i)], pi_[static_cast<size_t>(j)]);
    pi_inv_[static_cast<size_t>(pi_[static_cast<size_t>(i)])] = i;
    pi_inv_[static_cast<size_t>(pi_[static_cast<size_t>(j)])] = j;
    energy_ += delta_h;
}

std::vector<int64_t> SpatialConfig::recompute_cycle_counts() const {
    std::vector<int64_t> counts(static_cast<size_t>(n_ + 1), 0);
    std::vector<bool> seen(static_cast<size_t>(n_), false);
    for (int64_t i = 0; i < n_; ++i) {
        if (seen[static_cast<size_t>(i)]) continue;
        int64_t len = 0, u = i;
        do {
            seen[static_cast<size_t>(u)] = true;
            ++len;
            u = pi_[static_cast<size_t>(u)];
        } while (u != i);
        ++counts[static_cast<size_t>(len)];
    }
    return counts;
}

bool SpatialConfig::permutation_consistent() const {
    for (int64_t i = 0; i < n_; ++i) {
        if (pi_inv_[static_cast<size_t>(pi_[static_cast<size_t>(i)])] != i) return false;
        if (cycle_length_of(i) < 1) return false;
    }
    return true;
}

double periodized_jump_energy(const JumpKernel& kernel, const BoxGeometry& box,
                              std::span<const double> displacement) {
    return -std::log(periodized_jump_weight(kernel, box, displacement));
}

double energy(const SpatialConfig& config, const JumpKernel& kernel,
              const CycleWeightModel& weights, const BoxGeometry& box) {
    if (config.dim() != kernel.d) throw ConfigError("energy: dimension mismatch");
    double h = 0.0;
    std::vector<double> diff(static_cast<size_t>(config.dim()));
    for (int64_t i = 0; i < config.size(); ++i) {
        const auto xi = config.position(i);
        const auto xt = config.position(config.target(i));
        for (int c = 0; c < config.dim(); ++c)
            diff[static_cast<size_t>(c)] = xi[static_cast<size_t>(c)] - xt[static_cast<size_t>(c)];
        h += periodized_jump_energy(kernel, box, diff);
    }
    const auto& r = config.cycle_counts();
    for (int64_t j = 1; j <= config.size(); ++j)
        if (r[static_cast<size_t>(j)] > 0)
            h += cycle_weight(weights, j) * static_cast<double>(r[static_cast<size_t>(j)]);
    return h;
}

SpatialConfig make_uniform_config(int64_t n, const JumpKernel& kernel,
                                  const CycleWeightModel& weights, const BoxGeometry& box,
                                  Rng& rng) {
    SpatialConfig config(n, box.d);
    std::vector<double> x(static_cast<size_t>(box.d));
    for (int64_t i = 0; i < n; ++i) {
        for (int c = 0; c < box.d; ++c) x[static_cast<size_t>(c)] = rng.u01() * box.L;
        config.set_position(i, x, 0.0);
    }
    config.set_cached_energy(energy(config, kernel, weights, box));
    return config;
}

PositionProposal propose_position_move(const SpatialConfig& config, const JumpKernel& kernel,
                                       const BoxGeometry& box, int64_t i, double scale,
                                       Rng& rng) {
    if (i < 0 || i >= config.size()) throw ConfigError("propose_position_move: bad index");
    PositionProposal prop;
    const auto xi = config.position(i);
    prop.new_x.assign(xi.begin(), xi.end());
    if (scale == 0.0) return prop; // exact no-op proposal
    for (int c = 0; c < config.dim(); ++c) {
        double v = std::fmod(prop.new_x[static_cast<size_t>(c)] + scale * rng.normal(), box.L);
        if (v < 0.0) v += box.L;
        prop.new_x[static_cast<size_t>(c)] = v;
    }
    const int64_t p = config.source(i);
    const int64_t s = config.target(i);
    if (p == i) return prop; // fixed point: both incident edges have zero displacement
    std::vector<double> diff(static_cast<size_t>(config.dim()));
    const auto edge = [&](std::span<const double> a, std::span<const double> b) {
        for (int c = 0; c < config.dim(); ++c)
            diff[static_cast<size_t>(c)] = a[static_cast<size_t>(c)] - b[static_cast<size_t>(c)];
        return periodized_jump_energy(kernel, box, diff);
    };
    const auto xp = config.position(p);
    const auto xs = config.position(s);
    prop.delta_h = edge(xp, prop.new_x) + edge(prop.new_x, xs) - edge(xp, xi) - edge(xi, xs);
    return prop;
}

SwapProposal propose_swap_move(const SpatialConfig& config, const JumpKernel& kernel,
                               const CycleWeightModel& weights, const BoxGeometry& box, int64_t i,
                               int64_t j) {
    if (i == j) throw ConfigError("propose_swap_move: need i != j");
    SwapProposal prop;
    prop.i = i;
    prop.j = j;
    const int64_t si = config.target(i);
    const int64_t sj = config.target(j);
    std::vector<double> diff(static_cast<size_t>(config.dim()));
    const auto edge = [&](int64_t a, int64_t b) {
        const auto xa = config.position(a);
        const auto xb = config.position(b);
        for (int c = 0; c < config.dim(); ++c)
            diff[static_cast<size_t>(c)] = xa[static_cast<size_t>(c)] - xb[static_cast<size_t>(c)];
        return periodized_jump_energy(kernel, box, diff);
    };
    prop.delta_jump = edge(i, sj) + edge(j, si) - edge(i, si) - edge(j, sj);
    if (config.same_cycle(i, j)) {
        const int64_t c = config.cycle_length_of(i);
        const int64_t t = config.steps_between(i, j);
        prop.merge = false;
        prop.len_a = t;
        prop.len_b = c - t;
        const double wa = cycle_weight(weights, t);
        const double wb = cycle_weight(weights, c - t);
        prop.hard_reject = wa >= weight_guard || wb >= weight_guard;
        prop.delta_weight = wa + wb - cycle_weight(weights, c);
    } else {
        const int64_t a = config.cycle_length_of(i);
        const int64_t b = config.cycle_length_of(j);
        prop.merge = true;
        prop.len_a = a + b;
        prop.len_b = 0;
        const double wm = cycle_weight(weights, a + b);
        prop.hard_reject = wm >= weight_guard;
        prop.delta_weight = wm - cycle_weight(weights, a) - cycle_weight(weights, b);
    }
    prop.delta_h = prop.hard_reject ? std::numeric_limits<double>::infinity()
                                    : prop.delta_jump + prop.delta_weight;
    return prop;
}

namespace {

std::string chain_state_dump(const SpatialConfig& config, int64_t sweep, int64_t move,
                             double delta_h) {
    std::ostringstream os;
    os << "n=" << config.size() << " sweep=" << sweep << " move=" << move
       << " cached_energy=" << config.cached_energy() << " last_delta=" << delta_h
       << " cycle_counts:";
    const auto& r = config.cycle_counts();
    for (int64_t j = 1; j <= config.size(); ++j)
        if (r[static_cast<size_t>(j)] > 0) os << " r[" << j << "]=" << r[static_cast<size_t>(j)];
    return os.str();
}

double geweke_split_z(const std::vector<double>& trace) {
    const size_t n = trace.size();
    const size_t n_head = n / 10;
    const size_t n_tail = n / 2;
    if (n_head < 2 || n_tail < 2) return 0.0;
    std::vector<double> head(trace.begin(), trace.begin() + static_cast<int64_t>(n_head));
    std::vector<double> tail(trace.end() - static_cast<int64_t>(n_tail), trace.end());
    const double se1 = standard_error(head);
    const double se2 = standard_error(tail);
    const double denom = std::sqrt(se1 * se1 + se2 * se2);
    if (denom == 0.0) return 0.0;
    return (mean(head) - mean(tail)) / denom;
}

} // namespace

ChainResult run_chain(const ChainParams& params) {
    if (params.n_points < 1) throw ConfigError("run_chain: n_points must be positive");
    if (!(params.p_pos > 0.0 && params.p_pos < 1.0))
        throw ConfigError("run_chain: p_pos must lie strictly between 0 and 1");
    if (params.sweeps < 1) throw ConfigError("run_chain: sweeps must be positive");
    if (params.burn_in < 0 || params.burn_in >= params.sweeps)
        throw ConfigError("run_chain: burn_in must be in [0, sweeps)");
    if (params.thinning < 1) throw ConfigError("run_chain: thinning must be positive");
    if (params.kernel.d != params.box.d) throw ConfigError("run_chain: dimension mismatch");

    // scale 0 freezes positions (every proposal is an exact no-op)
    double scale = params.proposal_scale;
    if (scale < 0.0)
        scale = params.kernel.family == KernelFamily::gaussian
                    ? 2.0 * std::sqrt(params.kernel.beta)
                    : 2.0;

    Rng rng(params.seed);
    SpatialConfig config =
        make_uniform_config(params.n_points, params.kernel, params.weights, params.box, rng);

    const int64_t n = params.n_points;
    const int64_t audit_every =
        params.audit_interval > 0 ? params.audit_interval : std::max<int64_t>(1, params.sweeps / 8);
    ChainResult result{{}, {}, config};
    ChainDiagnostics& diag = result.diagnostics;
    int64_t pos_proposed = 0, pos_accepted = 0, swap_proposed = 0, swap_accepted = 0;

    for (int64_t sweep = 0; sweep < params.sweeps; ++sweep) {
        for (int64_t move = 0; move < n; ++move) {
            double applied_delta = 0.0;
            if (rng.u01() < params.p_pos) {
                ++pos_proposed;
                const int64_t i = static_cast<int64_t>(rng.uniform_int(static_cast<uint64_t>(n)));
                const PositionProposal prop =
                    propose_position_move(config, params.kernel, params.box, i, scale, rng);
                if (prop.delta_h <= 0.0 || std::log(rng.u01_pos()) < -prop.delta_h) {
                    config.set_position(i, prop.new_x, prop.delta_h);
                    applied_delta = prop.delta_h;
                    ++pos_accepted;
                }
            } else if (n >= 2) {
                ++swap_proposed;
                const int64_t i = static_cast<int64_t>(rng.uniform_int(static_cast<uint64_t>(n)));
                int64_t j = static_cast<int64_t>(rng.uniform_int(static_cast<uint64_t>(n - 1)));
                if (j >= i) ++j;
                const SwapProposal prop =
                    propose_swap_move(config, params.kernel, params.weights, params.box, i, j);
                if (!prop.hard_reject &&
                    (prop.delta_h <= 0.0 || std::log(rng.u01_pos()) < -prop.delta_h)) {
                    config.apply_swap(i, j, prop.delta_h);
                    applied_delta = prop.delta_h;
                    ++swap_accepted;
                }
            }
            if (!std::isfinite(config.cached_energy()))
                throw NumericError("run_chain: non-finite energy; " +
                                   chain_state_dump(config, sweep, move, applied_delta));
        }
        diag.energy_trace.push_back(config.cached_energy());
        if (sweep % audit_every == audit_every - 1) {
            ++diag.audits;
            const double h_full = energy(config, params.kernel, params.weights, params.box);
            const double err =
                std::abs(config.cached_energy() - h_full) / (1.0 + std::abs(h_full));
            diag.max_energy_audit_error = std::max(diag.max_energy_audit_error, err);
            if (config.recompute_cycle_counts() != config.cycle_counts() ||
                !config.permutation_consistent())
                ++diag.registry_audit_failures;
        }
        if (sweep >= params.burn_in && (sweep - params.burn_in) % params.thinning == 0)
            result.spectra.push_back(config.spectrum());
    }

    diag.position_acceptance =
        pos_proposed == 0 ? 0.0
                          : static_cast<double>(pos_accepted) / static_cast<double>(pos_proposed);
    diag.swap_acceptance =
        swap_proposed == 0
            ? 0.0
            : static_cast<double>(swap_accepted) / static_cast<double>(swap_proposed);
    std::vector<double> post(diag.energy_trace.begin() + params.burn_in,
                             diag.energy_trace.end());
    diag.geweke_z = geweke_split_z(post);
    result.final_config = config;
    return result;
}

NuEstimate estimate_nu(const std::vector<CycleSpectrum>& spectra, int64_t K) {
    if (spectra.empty()) throw ConfigError("estimate_nu: no spectra");
    const auto nu_at = [&](int64_t k) {
        double sum = 0.0;
        for (const auto& s : spectra) sum += s.fraction_longer_than(k);
        return sum / static_cast<double>(spectra.size());
    };
    NuEstimate est;
    est.k = K;
    est.nu_k = nu_at(K);
    int64_t n_max = 0;
    for (const auto& s : spectra) n_max = std::max(n_max, s.total);
    for (int64_t k = 1; k < n_max; k *= 2) est.sweep.emplace_back(k, nu_at(k));
    const size_t g = est.sweep.size();
    if (g < 3) {
        est.plateau_k = g == 0 ? 0 : est.sweep.back().first;
        est.nu_plateau = g == 0 ? est.nu_k : est.sweep.back().second;
        return est;
    }
    size_t best = 1;
    double best_d = std::numeric_limits<double>::infinity();
    for (size_t t = 1; t + 1 < g; ++t) {
        const double d = std::abs(est.sweep[t + 1].second - est.sweep[t - 1].second);
        if (d <= best_d) { // ties resolve toward larger K
            best_d = d;
            best = t;
        }
    }
    est.plateau_k = est.sweep[best].first;
    est.nu_plateau = est.sweep[best].second;
    return est;
}

} // namespace srp
