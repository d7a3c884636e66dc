#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "srp/errors.hpp"
#include "srp/numerics.hpp"

namespace srp {

inline uint64_t splitmix64(uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Deterministic RNG: a seeded mt19937_64 with explicit transforms so that
// sample streams are reproducible across standard library implementations.
class Rng {
public:
    explicit Rng(uint64_t seed) : eng_(expand_seed(seed)) {}

    // Independent stream for replica / subtask `stream`: the pair
    // (seed, stream) is hashed into a fresh seed.
    Rng derive(uint64_t stream) const {
        uint64_t s = seed_ ^ (0x517cc1b727220a95ULL * (stream + 1));
        uint64_t mixed = splitmix64(s);
        return Rng(mixed);
    }

    uint64_t next_u64() { return eng_(); }

    // Uniform on [0, 1) with 53 random bits.
    double u01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    // Uniform on (0, 1]: never zero, safe for log().
    double u01_pos() { return (static_cast<double>(eng_() >> 11) + 1.0) * 0x1.0p-53; }

    uint64_t uniform_int(uint64_t n) {
        if (n == 0) throw ConfigError("uniform_int: n must be positive");
        const uint64_t lim = UINT64_MAX - UINT64_MAX % n;
        uint64_t x;
        do {
            x = eng_();
        } while (x >= lim);
        return x % n;
    }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u = u01_pos();
        const double v = u01();
        const double r = std::sqrt(-2.0 * std::log(u));
        spare_ = r * std::sin(2.0 * pi * v);
        have_spare_ = true;
        return r * std::cos(2.0 * pi * v);
    }

private:
    explicit Rng(std::mt19937_64 eng) : eng_(eng) {}

    std::mt19937_64 expand_seed(uint64_t seed) {
        seed_ = seed;
        uint64_t s = seed;
        std::mt19937_64 eng(splitmix64(s));
        return eng;
    }

    uint64_t seed_ = 0;
    std::mt19937_64 eng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// Walker alias table for O(1) sampling from a fixed discrete distribution.
class AliasTable {
public:
    AliasTable() = default;

    explicit AliasTable(const std::vector<double>& weights) {
        const size_t n = weights.size();
        if (n == 0) throw ConfigError("AliasTable: empty weight vector");
        double total = 0.0;
        for (double w : weights) {
            if (w < 0.0 || !std::isfinite(w)) throw ConfigError("AliasTable: bad weight");
            total += w;
        }
        if (total <= 0.0) throw ConfigError("AliasTable: zero total weight");
        prob_.assign(n, 0.0);
        alias_.assign(n, 0);
        std::vector<double> scaled(n);
        std::vector<size_t> small, large;
        for (size_t i = 0; i < n; ++i) {
            scaled[i] = weights[i] * n / total;
            (scaled[i] < 1.0 ? small : large).push_back(i);
        }
        while (!small.empty() && !large.empty()) {
            const size_t s = small.back();
            const size_t l = large.back();
            small.pop_back();
            prob_[s] = scaled[s];
            alias_[s] = l;
            scaled[l] -= 1.0 - scaled[s];
            if (scaled[l] < 1.0) {
                large.pop_back();
                small.push_back(l);
            }
        }
        for (size_t i : large) prob_[i] = 1.0;
        for (size_t i : small) prob_[i] = 1.0;
    }

    size_t sample(Rng& rng) const {
        const size_t i = static_cast<size_t>(rng.uniform_int(prob_.size()));
        return rng.u01() < prob_[i] ? i : alias_[i];
    }

    size_t size() const { return prob_.size(); }

private:
    std::vector<double> prob_;
    std::vector<size_t> alias_;
};

} // namespace srp
