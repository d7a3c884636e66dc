#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "srp/kernel.hpp"
#include "srp/rng.hpp"
#include "srp/spectrum.hpp"
#include "srp/weights.hpp"

namespace srp {

// Point configuration on the torus plus a permutation, with incremental
// cycle bookkeeping (per-element cycle identifier, per-length counts) and a
// cached total energy maintained by the move appliers.
class SpatialConfig {
  public:
    SpatialConfig(int64_t n, int d);

    int64_t size() const { return n_; }
    int dim() const { return d_; }
    std::span<const double> position(int64_t i) const {
        return {x_.data() + i * d_, static_cast<size_t>(d_)};
    }
    int64_t target(int64_t i) const { return pi_[static_cast<size_t>(i)]; }
    int64_t source(int64_t i) const { return pi_inv_[static_cast<size_t>(i)]; }
    int64_t cycle_length_of(int64_t i) const;
    bool same_cycle(int64_t i, int64_t j) const;
    const std::vector<int64_t>& cycle_counts() const { return r_; } // r[j], j = 1..n
    double cached_energy() const { return energy_; }
    CycleSpectrum spectrum() const;

    void set_position(int64_t i, std::span<const double> x, double delta_h);
    // Composes the permutation with the transposition (i j), updating the
    // cycle registry in O(shorter side) and the cached energy by delta_h.
    void apply_swap(int64_t i, int64_t j, double delta_h);
    void set_cached_energy(double h) { energy_ = h; }

    // split position: smallest t >= 1 with pi^t(i) = j, walking both
    // directions in lockstep so the cost is O(min(t, c - t))
    int64_t steps_between(int64_t i, int64_t j) const;

    // audit helpers
    std::vector<int64_t> recompute_cycle_counts() const;
    bool permutation_consistent() const;

  private:
    int64_t alloc_cycle_id();
    void free_cycle_id(int64_t id);

    int64_t n_ = 0;
    int d_ = 0;
    std::vector<double> x_; // flat n x d
    std::vector<int64_t> pi_, pi_inv_;
    std::vector<int64_t> cycle_id_;  // per element
    std::vector<int64_t> cycle_len_; // per id; -1 when free
    std::vector<int64_t> free_ids_;
    std::vector<int64_t> r_;
    double energy_ = 0.0;
};

// xi_Lambda(x) = -log of the periodized jump weight.
double periodized_jump_energy(const JumpKernel& kernel, const BoxGeometry& box,
                              std::span<const double> displacement);

// Full recomputation: sum_i xi_Lambda(x_i - x_{pi(i)}) + sum_j alpha_j r_j.
double energy(const SpatialConfig& config, const JumpKernel& kernel,
              const CycleWeightModel& weights, const BoxGeometry& box);

// Fresh configuration: positions i.i.d. uniform on the torus, identity
// permutation, cached energy initialized by full recomputation.
SpatialConfig make_uniform_config(int64_t n, const JumpKernel& kernel,
                                  const CycleWeightModel& weights, const BoxGeometry& box,
                                  Rng& rng);

struct PositionProposal {
    std::vector<double> new_x;
    double delta_h = 0.0;
};

// Gaussian displacement of point i with the given scale; delta_h covers the
// two incident edges (zero for a fixed point).
PositionProposal propose_position_move(const SpatialConfig& config, const JumpKernel& kernel,
                                       const BoxGeometry& box, int64_t i, double scale, Rng& rng);

struct SwapProposal {
    int64_t i = 0, j = 0;
    double delta_jump = 0.0;   // jump-energy change from the two re-targeted edges
    double delta_weight = 0.0; // cycle-weight change from the merge or split
    double delta_h = 0.0;
    bool merge = false;
    int64_t len_a = 0, len_b = 0; // resulting cycle length(s): merged total or split pair
    bool hard_reject = false;     // a resulting cycle weight reached the guard value
};

// Cycle-weight values >= weight_guard are treated as infinite: proposals
// creating such a cycle are rejected outright.
inline constexpr double weight_guard = 700.0;

SwapProposal propose_swap_move(const SpatialConfig& config, const JumpKernel& kernel,
                               const CycleWeightModel& weights, const BoxGeometry& box, int64_t i,
                               int64_t j);

struct ChainParams {
    JumpKernel kernel{};
    CycleWeightModel weights{};
    BoxGeometry box{};
    int64_t n_points = 0;
    double p_pos = 0.5;           // fraction of moves that are position updates
    double proposal_scale = -1.0; // negative selects the default 2 sqrt(beta); 0 freezes positions
    int64_t sweeps = 0;          // one sweep = n_points moves
    int64_t burn_in = 0;
    int64_t thinning = 1;
    int64_t audit_interval = 0;  // sweeps between full audits; 0 selects sweeps/8
    uint64_t seed = 1;
};

struct ChainDiagnostics {
    double position_acceptance = 0.0;
    double swap_acceptance = 0.0;
    std::vector<double> energy_trace; // cached energy after every sweep
    double geweke_z = 0.0;            // split-mean z score on the post-burn-in trace
    double max_energy_audit_error = 0.0;
    int64_t registry_audit_failures = 0;
    int64_t audits = 0;
};

struct ChainResult {
    std::vector<CycleSpectrum> spectra;
    ChainDiagnostics diagnostics;
    SpatialConfig final_config;
};

ChainResult run_chain(const ChainParams& params);

struct NuEstimate {
    double nu_k = 0.0;   // estimate at the requested K
    int64_t k = 0;
    std::vector<std::pair<int64_t, double>> sweep; // (K, nu_K) over the dyadic grid
    int64_t plateau_k = 0;
    double nu_plateau = 0.0;
};

// nu_K = mean fraction of points in cycles longer than K; the plateau value
// minimizes the central difference |nu_{2K} - nu_{K/2}| over the dyadic grid
// (ties resolved toward larger K).
NuEstimate estimate_nu(const std::vector<CycleSpectrum>& spectra, int64_t K);

} // namespace srp
