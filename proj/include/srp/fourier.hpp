#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <vector>

#include "srp/kernel.hpp"
#include "srp/rng.hpp"
#include "srp/weights.hpp"

namespace srp {

// Dual-lattice mode list for a box: integer coordinates m with k = m / L,
// kept while ||m|| <= L * k_max and dispersion(k) <= eps_cut.
struct ModeSet {
    BoxGeometry box{};
    JumpKernel kernel{};
    double eps_cut = 40.0;
    std::vector<std::array<int32_t, 3>> modes; // unused trailing coordinates stay 0
    std::vector<double> eps;                   // dispersion per mode, same order
    int64_t zero_index = -1;
    int64_t dropped_count = 0;       // modes inside the radius dropped by eps_cut
    double dropped_mass_bound = 0.0; // dropped_count * exp(-eps_cut)

    int64_t size() const { return static_cast<int64_t>(modes.size()); }
    double k_norm(int64_t i) const;
    double min_nonzero_eps() const;
    // run-length grouping of equal dispersion values, sorted ascending
    std::vector<std::pair<double, double>> grouped_eps(bool include_zero) const; // (count, eps)

    static ModeSet build(const BoxGeometry& box, const JumpKernel& kernel, double eps_cut = 40.0);
};

// Sparse occupation-number configuration with fixed total.
struct OccupationState {
    const ModeSet* modes = nullptr;
    std::vector<std::pair<int64_t, int64_t>> occupied; // (mode index, count), index ascending
    int64_t total = 0;
    bool equilibrated = true;

    int64_t count_at(int64_t mode_index) const;
    int64_t zero_mode_count() const;
};

// Prefix convolutions of the per-mode weight rows y_k(n) = e^{-eps(k) n} h_n,
// processed with the zero mode last so the next-to-last row is the
// zero-mode-excluded partition sum.
struct ModePartitionTables {
    const ModeSet* modes = nullptr;
    int64_t N = 0;
    std::vector<int64_t> order;  // mode processing order, zero mode last
    std::vector<double> log_h;   // log h_0 .. log h_N
    std::vector<double> z;       // (K+1) x (N+1) row-major prefix sums, log domain
    double identity_rel_error = 0.0;

    double log_row(int64_t m, int64_t n) const { return z[static_cast<size_t>(m * (N + 1) + n)]; }
    double log_partition() const;                     // log Y(N), all modes
    double log_partition_excl_zero(int64_t n) const;  // log of the zero-mode-excluded sum at n
    std::vector<double> zero_mode_marginal() const;   // P(n_0 = j), j = 0..N
};

ModePartitionTables build_tables(const ModeSet& modes, const WeightTable& table, int64_t N,
                                 double ops_budget = 1e9);

OccupationState sample_occupations_exact(const ModePartitionTables& tables, Rng& rng);

// Metropolis transfer-move chain over occupation states at fixed total.
class OccupationChain {
  public:
    OccupationChain(const ModeSet& modes, const WeightTable& table, int64_t N, Rng rng);
    void step(int64_t steps);
    OccupationState snapshot() const;
    int64_t zero_mode_count() const { return n_[static_cast<size_t>(modes_->zero_index)]; }
    int64_t steps_taken() const { return steps_; }
    double acceptance_rate() const;

  private:
    const ModeSet* modes_;
    std::vector<double> log_h_;
    AliasTable proposal_;
    std::vector<int64_t> n_;
    int64_t total_;
    int64_t steps_ = 0;
    int64_t accepted_ = 0;
    Rng rng_;
};

OccupationState sample_occupations_mcmc(const ModeSet& modes, const WeightTable& table, int64_t N,
                                        int64_t steps, Rng& rng);

// Draws independent per-mode weighted permutations and aggregates cycle counts;
// returns r with r[j] = number of cycles of length j, sum_j j*r[j] = state.total.
std::vector<int64_t> sample_permutation_given_occupations(const OccupationState& state,
                                                          const CycleWeightModel& model,
                                                          const WeightTable& table, Rng& rng);

// Exact cycle-count law by enumerating partitions of N (refuses N > 6).
std::map<std::vector<int64_t>, double> cycle_count_marginal_exact(const ModeSet& modes,
                                                                  const CycleWeightModel& model,
                                                                  int64_t N);

// Partition sums from the power-sum recursion
//   n * Y(n) = sum_{j<=n} e^{-alpha_j} S_j Y(n-j),  S_j = sum_k e^{-j eps(k)},
// an O(N^2) route independent of the prefix-convolution tables.
struct PowerSumTables {
    std::vector<double> log_Y;    // all modes
    std::vector<double> log_Y_ex; // zero mode excluded
};

PowerSumTables power_sum_tables(const ModeSet& modes, const CycleWeightModel& model, int64_t N);

// P(n_0 = j) = h_j * Y_ex(N-j) / Y(N) from power-sum tables.
std::vector<double> zero_mode_marginal_power_sum(const PowerSumTables& pst,
                                                 const WeightTable& table);

struct ModeTailCheck {
    int64_t mode_index = 0;
    double eps = 0.0;
    int64_t max_occupancy = 0;
    double max_excess = 0.0; // max_j [log Phat(n_k >= j) - envelope(j)]; bound holds iff <= 0
    int64_t exceedances = 0; // number of occupancy levels violating the envelope
};

struct ZeroModeReport {
    int64_t sample_count = 0;
    double nu_tilde = 0.0;
    double mean_zero_fraction = 0.0;
    double p_macroscopic = 0.0;    // |n_0/N - nu_tilde| < eps
    double p_small_modes = 0.0;    // occupancy over 0 < ||k|| < delta below eps*N
    double p_large_modes = 0.0;    // occupancy >= M at ||k|| >= delta below eps*N
    std::vector<ModeTailCheck> tail_checks;
};

ZeroModeReport zero_mode_statistics(const std::vector<OccupationState>& samples,
                                    const CycleWeightModel& model, double eps, double delta,
                                    int64_t M);

// Discrete density measure proportional to the zero-mode-excluded partition sums.
struct MuLambda {
    double volume = 0.0;
    std::vector<double> prob; // index n, density n / volume
    double residual = 0.0;    // estimated truncated mass
};

MuLambda mu_lambda_measure(const ModeSet& modes, const CycleWeightModel& model, int64_t n_max = 0);

// (1/|box|) sum_j e^{-alpha_j} sum_{k != 0} e^{-j eps(k)} over the mode set.
double mode_critical_density(const ModeSet& modes, const CycleWeightModel& model);

// E[e^{lambda (X - rho_c)}] under the density measure, via the closed form
// exp(sum_j (e^{-alpha_j}/j) sum_{k!=0} e^{-j eps(k)} (e^{j lambda/V} - 1 - j lambda/V)).
double mu_lambda_laplace(const ModeSet& modes, const CycleWeightModel& model, double lambda);

} // namespace srp
