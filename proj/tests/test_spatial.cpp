#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <array>
#include <cmath>
#include <vector>

#include "srp/errors.hpp"
#include "srp/kernel.hpp"
#include "srp/numerics.hpp"
#include "srp/rng.hpp"
#include "srp/spatial.hpp"
#include "srp/spectrum.hpp"
#include "srp/weights.hpp"

using namespace srp;

namespace {

std::vector<double> displacement(const SpatialConfig& c, int64_t i, int64_t j) {
    std::vector<double> d(static_cast<size_t>(c.dim()));
    for (int a = 0; a < c.dim(); ++a)
        d[static_cast<size_t>(a)] = c.position(i)[static_cast<size_t>(a)] -
                                    c.position(j)[static_cast<size_t>(a)];
    return d;
}

} // namespace

TEST_CASE("configuration bookkeeping: swaps, registry, split positions") {
    SpatialConfig c(6, 3);
    CHECK(c.size() == 6);
    for (int64_t i = 0; i < 6; ++i) {
        CHECK(c.target(i) == i);
        CHECK(c.source(i) == i);
        CHECK(c.cycle_length_of(i) == 1);
    }
    CHECK(c.cycle_counts()[1] == 6);
    CHECK(c.permutation_consistent());
    CHECK_FALSE(c.same_cycle(0, 1));

    c.apply_swap(0, 1, 0.0);
    CHECK(c.same_cycle(0, 1));
    CHECK(c.cycle_length_of(0) == 2);
    CHECK(c.cycle_length_of(1) == 2);
    CHECK(c.cycle_counts()[1] == 4);
    CHECK(c.cycle_counts()[2] == 1);
    CHECK(c.steps_between(0, 1) == 1);

    // swapping again undoes the merge
    c.apply_swap(0, 1, 0.0);
    CHECK_FALSE(c.same_cycle(0, 1));
    CHECK(c.cycle_counts()[1] == 6);

    // build a 3-cycle; forward and backward distances add to the length
    c.apply_swap(0, 1, 0.0);
    c.apply_swap(0, 2, 0.0);
    CHECK(c.cycle_length_of(0) == 3);
    CHECK(c.cycle_length_of(2) == 3);
    CHECK(c.steps_between(0, 2) + c.steps_between(2, 0) == 3);
    CHECK(c.recompute_cycle_counts() == c.cycle_counts());
    CHECK(c.permutation_consistent());
    const CycleSpectrum s = c.spectrum();
    CHECK(s.largest() == 3);
    CHECK(s.total == 6);

    CHECK_THROWS_AS(c.apply_swap(2, 2, 0.0), ConfigError);
    CHECK_THROWS_AS(c.steps_between(0, 3), ConfigError);
    CHECK_THROWS_AS(SpatialConfig(0, 3), ConfigError);
    CHECK_THROWS_AS(SpatialConfig(4, 4), ConfigError);
}

TEST_CASE("energy of elementary configurations") {
    const JumpKernel kernel = JumpKernel::gaussian(3, 0.08);
    const BoxGeometry box = BoxGeometry::make(2.0, 3, 1.0);
    const CycleWeightModel w = CycleWeightModel::constant(0.3);
    Rng rng(5);

    // a single fixed point: one zero-displacement edge plus one 1-cycle weight
    const SpatialConfig single = make_uniform_config(1, kernel, w, box, rng);
    const std::vector<double> zero = {0.0, 0.0, 0.0};
    const double expect = periodized_jump_energy(kernel, box, zero) + cycle_weight(w, 1);
    CHECK(single.cached_energy() == doctest::Approx(expect).epsilon(1e-14));
    CHECK(energy(single, kernel, w, box) == doctest::Approx(expect).epsilon(1e-14));

    // jump energy is the negative log of the periodized weight
    const std::vector<double> x = {0.3, -0.5, 0.7};
    CHECK(periodized_jump_energy(kernel, box, x) ==
          doctest::Approx(-std::log(periodized_jump_weight(kernel, box, x))).epsilon(1e-13));

    // translating every point leaves the energy unchanged
    SpatialConfig c = make_uniform_config(8, kernel, w, box, rng);
    for (int64_t t = 0; t < 40; ++t) {
        const int64_t i = rng.uniform_int(8);
        const int64_t j = rng.uniform_int(8);
        if (i != j) {
            const SwapProposal p = propose_swap_move(c, kernel, w, box, i, j);
            if (!p.hard_reject) c.apply_swap(i, j, p.delta_h);
        }
    }
    const double before = energy(c, kernel, w, box);
    const std::vector<double> shift = {0.37, -0.89, 0.11};
    for (int64_t i = 0; i < 8; ++i) {
        std::vector<double> nx(3);
        for (int a = 0; a < 3; ++a)
            nx[static_cast<size_t>(a)] =
                c.position(i)[static_cast<size_t>(a)] + shift[static_cast<size_t>(a)];
        c.set_position(i, nx, 0.0);
    }
    CHECK(energy(c, kernel, w, box) == doctest::Approx(before).epsilon(1e-10));
}

TEST_CASE("swap proposals: classification and frozen weight changes") {
    const JumpKernel kernel = JumpKernel::gaussian(3, 0.08);
    const BoxGeometry box = BoxGeometry::make(2.0, 3, 1.0);
    // alpha_1 = 0.2, alpha_2 = 0.9 so a first merge costs 0.9 - 0.4 = 0.5
    const CycleWeightModel w = CycleWeightModel::asymptotic(0.2, {{2, 0.9}});
    Rng rng(31);
    SpatialConfig c = make_uniform_config(4, kernel, w, box, rng);

    const SwapProposal merge = propose_swap_move(c, kernel, w, box, 0, 1);
    CHECK(merge.merge);
    CHECK(merge.len_a == 2);
    CHECK_FALSE(merge.hard_reject);
    CHECK(merge.delta_weight == doctest::Approx(0.5).epsilon(1e-12));
    const std::vector<double> origin = {0.0, 0.0, 0.0};
    const double dj = periodized_jump_energy(kernel, box, displacement(c, 0, 1)) +
                      periodized_jump_energy(kernel, box, displacement(c, 1, 0)) -
                      2.0 * periodized_jump_energy(kernel, box, origin);
    CHECK(merge.delta_jump == doctest::Approx(dj).epsilon(1e-12));
    CHECK(merge.delta_h == doctest::Approx(merge.delta_jump + merge.delta_weight));

    c.apply_swap(0, 1, merge.delta_h);
    CHECK(energy(c, kernel, w, box) == doctest::Approx(c.cached_energy()).epsilon(1e-12));

    // same pair again: a split back into two fixed points
    const SwapProposal split = propose_swap_move(c, kernel, w, box, 0, 1);
    CHECK_FALSE(split.merge);
    CHECK(split.len_a + split.len_b == 2);
    CHECK(split.delta_weight == doctest::Approx(-0.5).epsilon(1e-12));

    // cycle weights at the guard value are rejected outright
    const CycleWeightModel huge = CycleWeightModel::logarithmic(1100.0);
    const SpatialConfig c2 = make_uniform_config(4, kernel, huge, box, rng);
    const SwapProposal guard = propose_swap_move(c2, kernel, huge, box, 0, 1);
    CHECK(guard.hard_reject);

    CHECK_THROWS_AS(propose_swap_move(c, kernel, w, box, 2, 2), ConfigError);
    CHECK_THROWS_AS(propose_position_move(c, kernel, box, 9, 0.1, rng), ConfigError);
}

TEST_CASE("incremental energy tracks full recomputation over mixed dynamics") {
    const JumpKernel kernel = JumpKernel::gaussian(3, 0.05);
    const BoxGeometry box = BoxGeometry::make(2.0, 3, 1.0);
    const CycleWeightModel w = CycleWeightModel::asymptotic(0.2, {{2, 0.9}, {3, -0.3}});
    Rng rng(77);
    SpatialConfig c = make_uniform_config(12, kernel, w, box, rng);

    for (int64_t move = 1; move <= 4000; ++move) {
        if (rng.u01() < 0.5) {
            const int64_t i = rng.uniform_int(12);
            const PositionProposal p = propose_position_move(c, kernel, box, i, 0.3, rng);
            c.set_position(i, p.new_x, p.delta_h);
        } else {
            const int64_t i = rng.uniform_int(12);
            const int64_t j = rng.uniform_int(12);
            if (i == j) continue;
            const SwapProposal p = propose_swap_move(c, kernel, w, box, i, j);
            CHECK(p.merge == !c.same_cycle(i, j));
            if (p.hard_reject) continue;
            c.apply_swap(i, j, p.delta_h);
        }
        if (move % 200 == 0) {
            const double exact = energy(c, kernel, w, box);
            CHECK(std::abs(c.cached_energy() - exact) <= 1e-8 * std::max(1.0, std::abs(exact)));
        }
    }
    CHECK(c.recompute_cycle_counts() == c.cycle_counts());
    CHECK(c.permutation_consistent());
}

TEST_CASE("chain samples the exact boltzmann law on three frozen points") {
    ChainParams params;
    params.kernel = JumpKernel::gaussian(3, 0.08);
    params.box = BoxGeometry::make(1.5, 3, 1.0);
    params.weights = CycleWeightModel::constant(0.4);
    params.n_points = 3;
    params.p_pos = 0.3;
    params.proposal_scale = 0.0; // positions stay where they started
    params.sweeps = 32000;
    params.burn_in = 2000;
    params.thinning = 25;
    params.audit_interval = 500;
    params.seed = 424242;

    const ChainResult res = run_chain(params);
    CHECK(res.diagnostics.audits > 0);
    CHECK(res.diagnostics.registry_audit_failures == 0);
    CHECK(res.diagnostics.max_energy_audit_error <= 1e-9);
    CHECK(res.diagnostics.energy_trace.size() == 32000);
    CHECK(res.diagnostics.swap_acceptance > 0.0);
    CHECK(res.diagnostics.swap_acceptance < 1.0);
    CHECK(std::isfinite(res.diagnostics.geweke_z));

    // exact law over the six permutations of the frozen positions
    const SpatialConfig& fc = res.final_config;
    auto xi = [&](int64_t i, int64_t j) {
        return periodized_jump_energy(params.kernel, params.box, displacement(fc, i, j));
    };
    const double a = 0.4;
    const double h_id = xi(0, 0) + xi(1, 1) + xi(2, 2) + 3.0 * a;
    const double h_01 = xi(0, 1) + xi(1, 0) + xi(2, 2) + 2.0 * a;
    const double h_02 = xi(0, 2) + xi(2, 0) + xi(1, 1) + 2.0 * a;
    const double h_12 = xi(1, 2) + xi(2, 1) + xi(0, 0) + 2.0 * a;
    const double h_rot = xi(0, 1) + xi(1, 2) + xi(2, 0) + a; // both 3-cycles tie
    const double z = std::exp(-h_id) + std::exp(-h_01) + std::exp(-h_02) + std::exp(-h_12) +
                     2.0 * std::exp(-h_rot);
    const std::vector<double> probs = {
        std::exp(-h_id) / z,
        (std::exp(-h_01) + std::exp(-h_02) + std::exp(-h_12)) / z,
        2.0 * std::exp(-h_rot) / z,
    };

    std::vector<double> counts(3, 0.0);
    for (const CycleSpectrum& s : res.spectra) {
        REQUIRE(s.total == 3);
        if (s.largest() == 1)
            counts[0] += 1.0;
        else if (s.largest() == 2)
            counts[1] += 1.0;
        else
            counts[2] += 1.0;
    }
    const ChiSquareResult fit = chi_square_gof(counts, probs);
    CHECK(fit.p_value > 1e-3);
}

TEST_CASE("chain reruns are bit-identical and parameters are validated") {
    ChainParams params;
    params.kernel = JumpKernel::gaussian(3, 0.06);
    params.box = BoxGeometry::make(2.0, 3, 1.0);
    params.weights = CycleWeightModel::constant(0.0);
    params.n_points = 10;
    params.sweeps = 300;
    params.burn_in = 50;
    params.thinning = 5;
    params.seed = 9001;

    const ChainResult a = run_chain(params);
    const ChainResult b = run_chain(params);
    REQUIRE(a.spectra.size() == b.spectra.size());
    CHECK(a.diagnostics.energy_trace == b.diagnostics.energy_trace);
    for (size_t i = 0; i < a.spectra.size(); ++i)
        CHECK(a.spectra[i].lengths == b.spectra[i].lengths);

    ChainParams other = params;
    other.seed = 9002;
    CHECK(run_chain(other).diagnostics.energy_trace != a.diagnostics.energy_trace);

    ChainParams bad = params;
    bad.p_pos = 0.0;
    CHECK_THROWS_AS(run_chain(bad), ConfigError);
    bad.p_pos = 1.0;
    CHECK_THROWS_AS(run_chain(bad), ConfigError);
    bad = params;
    bad.burn_in = params.sweeps;
    CHECK_THROWS_AS(run_chain(bad), ConfigError);
    bad = params;
    bad.thinning = 0;
    CHECK_THROWS_AS(run_chain(bad), ConfigError);
    bad = params;
    bad.n_points = 0;
    CHECK_THROWS_AS(run_chain(bad), ConfigError);
    bad = params;
    bad.box = BoxGeometry::make(2.0, 2, 1.0);
    CHECK_THROWS_AS(run_chain(bad), ConfigError);
}

TEST_CASE("long-cycle fraction estimator and its plateau") {
    // every sample one giant cycle: nu is 1 on the whole dyadic grid
    std::vector<CycleSpectrum> giant(20, CycleSpectrum::from_lengths({100}));
    const NuEstimate g = estimate_nu(giant, 10);
    CHECK(g.nu_k == 1.0);
    CHECK(g.k == 10);
    REQUIRE(g.sweep.size() == 7); // 1, 2, 4, ..., 64
    CHECK(g.sweep.back().first == 64);
    CHECK(g.nu_plateau == 1.0);
    CHECK(g.plateau_k == 32); // flat differences tie toward the largest interior K

    // half giant, half dust: plateau value 1/2
    std::vector<CycleSpectrum> mixed;
    for (int i = 0; i < 10; ++i) {
        mixed.push_back(CycleSpectrum::from_lengths({100}));
        mixed.push_back(CycleSpectrum::from_lengths(std::vector<int64_t>(100, 1)));
    }
    const NuEstimate m = estimate_nu(mixed, 8);
    CHECK(m.nu_k == doctest::Approx(0.5));
    CHECK(m.nu_plateau == doctest::Approx(0.5));

    // all dust: zero everywhere
    std::vector<CycleSpectrum> dust(5, CycleSpectrum::from_lengths(std::vector<int64_t>(64, 1)));
    CHECK(estimate_nu(dust, 4).nu_plateau == 0.0);

    // tiny totals fall back to the last grid point
    std::vector<CycleSpectrum> tiny(3, CycleSpectrum::from_lengths({3}));
    const NuEstimate t = estimate_nu(tiny, 1);
    CHECK(t.plateau_k == 2);

    CHECK_THROWS_AS(estimate_nu({}, 4), ConfigError);
}
