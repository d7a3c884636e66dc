#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "srp/errors.hpp"
#include "srp/numerics.hpp"
#include "srp/rng.hpp"
#include "srp/weights.hpp"

using namespace srp;

TEST_CASE("weight model construction and validation") {
    CHECK_THROWS_AS(CycleWeightModel::logarithmic(0.0), ConfigError);
    CHECK_THROWS_AS(CycleWeightModel::logarithmic(-1.0), ConfigError);
    CHECK_THROWS_AS(CycleWeightModel::asymptotic(0.0, {{0, 1.0}}), ConfigError);
    CHECK_THROWS_AS(CycleWeightModel::asymptotic(0.0, {{2, 1.0}, {2, 0.5}}), ConfigError);
    CHECK_THROWS_AS(CycleWeightModel::asymptotic(0.0, {{max_override_index + 1, 1.0}}),
                    ConfigError);
    CHECK_THROWS_AS(CycleWeightModel::logarithmic(1.0).theta(), ConfigError);

    const CycleWeightModel c = CycleWeightModel::constant(std::log(2.0));
    CHECK(c.theta() == doctest::Approx(0.5));
    CHECK(c.override_deviation_sum() == 0.0);

    // overrides are sorted regardless of input order
    const CycleWeightModel a = CycleWeightModel::asymptotic(0.1, {{7, 0.3}, {2, -0.4}});
    CHECK(a.overrides.front().first == 2);
    CHECK(a.override_deviation_sum() == doctest::Approx(0.5 + 0.2));
}

TEST_CASE("per-length weights by regime") {
    const CycleWeightModel c = CycleWeightModel::constant(0.35);
    for (int64_t j : {1, 5, 9999}) CHECK(cycle_weight(c, j) == 0.35);

    const CycleWeightModel a = CycleWeightModel::asymptotic(0.35, {{2, -1.0}, {5, 2.0}});
    CHECK(cycle_weight(a, 1) == 0.35);
    CHECK(cycle_weight(a, 2) == -1.0);
    CHECK(cycle_weight(a, 3) == 0.35);
    CHECK(cycle_weight(a, 5) == 2.0);
    CHECK(cycle_weight(a, 6) == 0.35);

    const CycleWeightModel l = CycleWeightModel::logarithmic(1.5);
    CHECK(cycle_weight(l, 1) == 0.0);
    CHECK(cycle_weight(l, 4) == doctest::Approx(1.5 * std::log(4.0)).epsilon(1e-15));

    CHECK_THROWS_AS(cycle_weight(c, 0), ConfigError);
}

TEST_CASE("normalization recursion: frozen small values") {
    // theta = 2
    const WeightTable t2 = compute_h(CycleWeightModel::constant(-std::log(2.0)), 3);
    CHECK(t2.h(0) == doctest::Approx(1.0));
    CHECK(t2.h(1) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(t2.h(2) == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(t2.h(3) == doctest::Approx(4.0).epsilon(1e-14));

    // theta = 1: h_n = 1 for every n
    const WeightTable t1 = compute_h(CycleWeightModel::constant(0.0), 64);
    for (int64_t n = 0; n <= 64; ++n) CHECK(t1.log_h_at(n) == doctest::Approx(0.0).epsilon(1e-13));

    // inverse-length weights: h_2 = 3/4, h_3 = 19/36
    const WeightTable tl = compute_h(CycleWeightModel::logarithmic(1.0), 3);
    CHECK(tl.h(2) == doctest::Approx(0.75).epsilon(1e-14));
    CHECK(tl.h(3) == doctest::Approx(19.0 / 36.0).epsilon(1e-14));

    CHECK_THROWS_AS(compute_h(CycleWeightModel::constant(0.0), -1), ConfigError);
    CHECK_THROWS_AS(t2.log_h_at(4), ConfigError);
}

TEST_CASE("constant weights match the rising-factorial closed form") {
    for (double theta : {0.7, 2.5}) {
        const CycleWeightModel model = CycleWeightModel::constant(-std::log(theta));
        const WeightTable t = compute_h(model, 30);
        for (int64_t n = 1; n <= 30; ++n) {
            const double expect = std::lgamma(theta + static_cast<double>(n)) -
                                  std::lgamma(theta) - std::lgamma(static_cast<double>(n) + 1.0);
            CHECK(t.log_h_at(n) == doctest::Approx(expect).epsilon(1e-12));
        }
    }
}

TEST_CASE("recursion equals exhaustive partition enumeration") {
    const std::vector<CycleWeightModel> models = {
        CycleWeightModel::constant(0.0),
        CycleWeightModel::constant(std::log(2.0)),
        CycleWeightModel::constant(-std::log(2.0)),
        CycleWeightModel::asymptotic(0.3, {{2, -0.4}, {5, 1.0}}),
        CycleWeightModel::logarithmic(0.5),
        CycleWeightModel::logarithmic(1.0),
        CycleWeightModel::logarithmic(2.0),
    };
    for (const auto& model : models) {
        const WeightTable t = compute_h(model, 9);
        for (int64_t n = 1; n <= 9; ++n) {
            const double exact = brute_force_h(model, n);
            CHECK(std::abs(t.h(n) - exact) / exact <= 1e-12);
        }
    }
    CHECK(brute_force_h(CycleWeightModel::constant(0.0), 0) == 1.0);
    CHECK_THROWS_AS(brute_force_h(CycleWeightModel::constant(0.0), 10), ConfigError);
}

TEST_CASE("power series of the table equals the exponential form") {
    const int64_t N = 200;
    // constant weights: sum_n h_n z^n = (1 - z)^{-theta}
    for (double alpha : {0.0, std::log(2.0)}) {
        const CycleWeightModel model = CycleWeightModel::constant(alpha);
        const WeightTable t = compute_h(model, N);
        const double theta = model.theta();
        for (double z : {0.3, 0.6}) {
            double lhs = 0.0;
            for (int64_t n = N; n >= 0; --n)
                lhs += t.h(n) * std::pow(z, static_cast<double>(n));
            const double rhs = std::pow(1.0 - z, -theta);
            CHECK(std::abs(lhs - rhs) / rhs <= 1e-8);
        }
    }
    // inverse-power weights: exponent is the polylog sum_j j^{-gamma-1} z^j
    for (double gamma : {0.5, 1.0, 2.0}) {
        const CycleWeightModel model = CycleWeightModel::logarithmic(gamma);
        const WeightTable t = compute_h(model, N);
        for (double z : {0.3, 0.6}) {
            double lhs = 0.0;
            for (int64_t n = N; n >= 0; --n)
                lhs += t.h(n) * std::pow(z, static_cast<double>(n));
            double expo = 0.0;
            for (int64_t j = 1; j <= 2000; ++j) {
                const double term =
                    std::pow(static_cast<double>(j), -gamma - 1.0) * std::pow(z, double(j));
                expo += term;
                if (term < 1e-18 * expo) break;
            }
            const double rhs = std::exp(expo);
            CHECK(std::abs(lhs - rhs) / rhs <= 1e-8);
        }
    }
}

TEST_CASE("regularity report: growth exponents and envelope constant") {
    // theta = 1: the table is flat
    const RegularityReport flat = verify_regularity(CycleWeightModel::constant(0.0), 256, 2.0);
    CHECK(flat.kappa_hat == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(flat.c_hat == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(flat.slope) < 0.05);

    // theta = 2: h_n ~ n, log-log slope near +1
    const RegularityReport lin =
        verify_regularity(CycleWeightModel::constant(-std::log(2.0)), 2000, 4.0);
    CHECK(lin.slope == doctest::Approx(1.0).epsilon(0.1));

    // inverse-length weights, gamma = 1: h_n decays like n^{-2}
    const RegularityReport dec = verify_regularity(CycleWeightModel::logarithmic(1.0), 2000, 2.0);
    CHECK(dec.slope == doctest::Approx(-2.0).epsilon(0.1));
    CHECK(dec.kappa_hat > 1.0);
    CHECK(dec.c_hat >= 1.0);

    CHECK_THROWS_AS(verify_regularity(CycleWeightModel::constant(0.0), 3, 2.0), ConfigError);
    CHECK_THROWS_AS(verify_regularity(CycleWeightModel::constant(0.0), 10, 1.0), ConfigError);
}

TEST_CASE("distinguished-cycle length law: frozen points and normalization") {
    const WeightTable t1 = compute_h(CycleWeightModel::constant(0.0), 4);
    const auto p4 = first_cycle_length_distribution(CycleWeightModel::constant(0.0), 4, t1);
    REQUIRE(p4.size() == 4);
    for (double p : p4) CHECK(p == doctest::Approx(0.25).epsilon(1e-13));

    const CycleWeightModel two = CycleWeightModel::constant(-std::log(2.0));
    const WeightTable t2 = compute_h(two, 2);
    const auto p2 = first_cycle_length_distribution(two, 2, t2);
    CHECK(p2[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-13));
    CHECK(p2[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-13));

    const CycleWeightModel log15 = CycleWeightModel::logarithmic(1.5);
    const WeightTable tl = compute_h(log15, 50);
    const auto pl = first_cycle_length_distribution(log15, 50, tl);
    double total = 0.0;
    for (double p : pl) {
        CHECK(p >= 0.0);
        total += p;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));

    CHECK_THROWS_AS(first_cycle_length_distribution(log15, 51, tl), ConfigError);
}

TEST_CASE("cycle-length sampler covers all points and matches the exact law") {
    const double theta = 0.7;
    const CycleWeightModel model = CycleWeightModel::constant(-std::log(theta));
    const WeightTable table = compute_h(model, 5);

    // the 7 multisets of cycle lengths on 5 points, with their exact masses
    const std::vector<std::vector<int64_t>> parts = {
        {5}, {4, 1}, {3, 2}, {3, 1, 1}, {2, 2, 1}, {2, 1, 1, 1}, {1, 1, 1, 1, 1}};
    auto mass = [&](const std::vector<int64_t>& part) {
        std::vector<int64_t> count(6, 0);
        for (int64_t j : part) ++count[static_cast<size_t>(j)];
        double m = 1.0;
        for (int64_t j = 1; j <= 5; ++j) {
            for (int64_t r = 1; r <= count[static_cast<size_t>(j)]; ++r)
                m *= (theta / static_cast<double>(j)) / static_cast<double>(r);
        }
        return m;
    };
    double norm = 0.0;
    for (const auto& part : parts) norm += mass(part);
    CHECK(norm == doctest::Approx(brute_force_h(model, 5)).epsilon(1e-13));

    std::vector<double> probs;
    for (const auto& part : parts) probs.push_back(mass(part) / norm);

    Rng rng(2024);
    std::vector<double> counts(parts.size(), 0.0);
    const int draws = 30000;
    for (int i = 0; i < draws; ++i) {
        std::vector<int64_t> lengths = sample_cycle_lengths(model, 5, table, rng);
        int64_t total = 0;
        for (int64_t l : lengths) total += l;
        REQUIRE(total == 5);
        std::sort(lengths.begin(), lengths.end(), std::greater<int64_t>());
        for (size_t p = 0; p < parts.size(); ++p) {
            if (lengths == parts[p]) {
                counts[p] += 1.0;
                break;
            }
        }
    }
    const ChiSquareResult fit = chi_square_gof(counts, probs);
    CHECK(fit.p_value > 1e-3);

    // identical seeds give identical streams
    Rng r1(55), r2(55);
    for (int i = 0; i < 20; ++i)
        CHECK(sample_cycle_lengths(model, 12, compute_h(model, 12), r1) ==
              sample_cycle_lengths(model, 12, compute_h(model, 12), r2));

    CHECK(sample_cycle_lengths(model, 0, table, rng).empty());
    CHECK_THROWS_AS(sample_cycle_lengths(model, 6, table, rng), ConfigError);
}
