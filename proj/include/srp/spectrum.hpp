#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <vector>

#include "srp/errors.hpp"

namespace srp {

// Cycle lengths of one permutation sample, sorted non-increasing.
struct CycleSpectrum {
    std::vector<int64_t> lengths;
    int64_t total = 0;

    static CycleSpectrum from_lengths(std::vector<int64_t> ls) {
        CycleSpectrum s;
        s.lengths = std::move(ls);
        std::sort(s.lengths.begin(), s.lengths.end(), std::greater<int64_t>());
        for (int64_t l : s.lengths) {
            if (l <= 0) throw ConfigError("CycleSpectrum: lengths must be positive");
            s.total += l;
        }
        return s;
    }

    // counts[j] = number of cycles of length j, for j = 1..counts.size()-1.
    static CycleSpectrum from_counts(const std::vector<int64_t>& counts) {
        std::vector<int64_t> ls;
        for (size_t j = 1; j < counts.size(); ++j)
            for (int64_t c = 0; c < counts[j]; ++c) ls.push_back(static_cast<int64_t>(j));
        return from_lengths(std::move(ls));
    }

    int64_t largest() const { return lengths.empty() ? 0 : lengths.front(); }

    // Fraction of points lying in cycles of length strictly greater than k.
    double fraction_longer_than(int64_t k) const {
        if (total == 0) return 0.0;
        int64_t sum = 0;
        for (int64_t l : lengths) {
            if (l <= k) break;
            sum += l;
        }
        return static_cast<double>(sum) / static_cast<double>(total);
    }
};

} // namespace srp
