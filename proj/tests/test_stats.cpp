#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "srp/errors.hpp"
#include "srp/numerics.hpp"
#include "srp/rng.hpp"
#include "srp/spectrum.hpp"
#include "srp/stats.hpp"

using namespace srp;

namespace {

// spectra whose normalized cycle lengths follow the stick-breaking law exactly
std::vector<CycleSpectrum> gem_spectra(double theta, int64_t n, int64_t samples, Rng& rng) {
    std::vector<CycleSpectrum> out;
    out.reserve(static_cast<size_t>(samples));
    for (int64_t s = 0; s < samples; ++s) {
        std::vector<int64_t> lengths;
        for (double f : sample_gem(theta, 64, rng)) {
            const int64_t l = std::llround(f * static_cast<double>(n));
            if (l >= 1) lengths.push_back(l);
        }
        out.push_back(CycleSpectrum::from_lengths(lengths));
    }
    return out;
}

} // namespace

TEST_CASE("stick-breaking fragments") {
    Rng rng(101);
    CHECK_THROWS_AS(sample_gem(0.0, 4, rng), ConfigError);
    CHECK_THROWS_AS(sample_gem(-1.0, 4, rng), ConfigError);
    CHECK_THROWS_AS(sample_gem(1.0, 0, rng), ConfigError);

    for (double theta : {0.5, 1.0, 3.0}) {
        const int64_t draws = 20000;
        double sum_first = 0.0, sum_sq = 0.0, sum_u = 0.0;
        for (int64_t i = 0; i < draws; ++i) {
            const std::vector<double> f = sample_gem(theta, 24, rng);
            double partial = 0.0;
            for (double x : f) {
                CHECK(x >= 0.0); // a stick can round to full remaining mass
                partial += x;
            }
            CHECK(partial <= 1.0 + 1e-12);
            sum_first += f[0];
            sum_sq += f[0] * f[0];
            // for the first stick, (1 - X)^theta recovers the driving uniform
            sum_u += std::pow(1.0 - f[0], theta);
        }
        const double mean_first = sum_first / double(draws);
        const double expect = 1.0 / (1.0 + theta);
        const double var = theta / ((1.0 + theta) * (1.0 + theta) * (2.0 + theta));
        CHECK(std::abs(mean_first - expect) < 4.0 * std::sqrt(var / double(draws)));
        const double var_hat = sum_sq / double(draws) - mean_first * mean_first;
        CHECK(var_hat == doctest::Approx(var).epsilon(0.1));
        CHECK(std::abs(sum_u / double(draws) - 0.5) < 4.0 / std::sqrt(12.0 * double(draws)));
    }

    Rng a(7), b(7);
    CHECK(sample_gem(1.3, 10, a) == sample_gem(1.3, 10, b));
}

TEST_CASE("sum-of-squares reference moment") {
    Rng rng(303);
    for (double theta : {1.0, 2.0}) {
        const PdSumSquares ref = pd_sum_squares_reference(theta, 20000, 60, rng);
        CHECK(ref.std_error > 0.0);
        CHECK(std::abs(ref.estimate - 1.0 / (1.0 + theta)) < 4.0 * ref.std_error);
        CHECK(ref.residual == std::pow(theta / (theta + 1.0), 60.0));
    }

    // truncated mass shrinks geometrically with the cut
    double prev = 1.0;
    for (int64_t m : {5, 10, 40}) {
        const PdSumSquares r = pd_sum_squares_reference(1.5, 100, m, rng);
        CHECK(r.residual < prev);
        prev = r.residual;
    }

    CHECK_THROWS_AS(pd_sum_squares_reference(1.0, 1, 10, rng), ConfigError);
}

TEST_CASE("poisson-dirichlet fit report: self-consistency and rejection") {
    Rng rng(909);
    const double theta = 1.0;
    const std::vector<CycleSpectrum> good = gem_spectra(theta, 100000, 500, rng);

    const PdFitReport fit = pd_fit_test(good, 1.0, theta, 3);
    REQUIRE(fit.coordinates.size() == 3);
    for (const CoordinateFit& c : fit.coordinates) {
        CHECK(c.ks_distance < 0.1);
        CHECK(c.p_value > 0.01);
    }
    const double se = std::hypot(fit.sum_squares_empirical_se, fit.sum_squares_reference_se);
    CHECK(std::abs(fit.sum_squares_empirical - fit.sum_squares_reference) < 4.0 * se);
    CHECK(fit.sum_squares_reference == doctest::Approx(0.5).epsilon(0.02));

    // degenerate ensembles are rejected decisively
    const std::vector<CycleSpectrum> giant(200, CycleSpectrum::from_lengths({100000}));
    const PdFitReport bad = pd_fit_test(giant, 1.0, theta, 1);
    CHECK(bad.coordinates[0].p_value < 1e-6);

    // a wrong theta shows up in the first coordinate as well
    const PdFitReport wrong = pd_fit_test(good, 1.0, 12.0, 1);
    CHECK(wrong.coordinates[0].p_value < 1e-6);

    CHECK_THROWS_AS(pd_fit_test(good, 0.0, theta, 3), ConfigError);
    CHECK_THROWS_AS(pd_fit_test(good, -0.5, theta, 3), ConfigError);
    CHECK_THROWS_AS(pd_fit_test({}, 1.0, theta, 3), ConfigError);
    CHECK_THROWS_AS(pd_fit_test(good, 1.0, theta, 0), ConfigError);
}

TEST_CASE("giant-cycle report") {
    std::vector<CycleSpectrum> spectra;
    std::vector<int64_t> rest(4, 1);
    auto make = [&](int64_t largest) {
        std::vector<int64_t> lengths = {largest};
        int64_t left = 100 - largest;
        while (left > 0) {
            lengths.push_back(1);
            --left;
        }
        spectra.push_back(CycleSpectrum::from_lengths(lengths));
    };
    make(96);
    make(85);
    make(91);

    const GiantCycleReport rep = giant_cycle_test(spectra, 1.0, 0.9);
    REQUIRE(rep.ratios.size() == 3);
    CHECK(rep.ratios[0] == doctest::Approx(0.85));
    CHECK(rep.ratios[1] == doctest::Approx(0.91));
    CHECK(rep.ratios[2] == doctest::Approx(0.96));
    CHECK(rep.mean_ratio == doctest::Approx((0.96 + 0.85 + 0.91) / 3.0).epsilon(1e-14));
    CHECK(rep.p_above == doctest::Approx(2.0 / 3.0));
    CHECK(rep.threshold == 0.9);

    // rescaling by nu_hat moves the ratios accordingly
    const GiantCycleReport half = giant_cycle_test(spectra, 0.5, 0.9);
    CHECK(half.ratios[2] == doctest::Approx(1.92));
    CHECK(half.p_above == doctest::Approx(1.0));

    CHECK_THROWS_AS(giant_cycle_test(spectra, 0.0, 0.9), ConfigError);
    CHECK_THROWS_AS(giant_cycle_test({}, 1.0, 0.9), ConfigError);
}
