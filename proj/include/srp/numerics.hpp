#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "srp/errors.hpp"

namespace srp {

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double neg_inf = -std::numeric_limits<double>::infinity();

inline double log_add(double a, double b) {
    if (a == neg_inf) return b;
    if (b == neg_inf) return a;
    if (a < b) std::swap(a, b);
    return a + std::log1p(std::exp(b - a));
}

// Streaming log-sum-exp: accumulates log(sum_i exp(a_i)) in one pass,
// rescaling whenever a new maximum arrives.
class LogAccumulator {
public:
    void add(double a) {
        if (a == neg_inf) return;
        if (a <= max_) {
            sum_ += std::exp(a - max_);
        } else {
            sum_ = (max_ == neg_inf) ? 1.0 : sum_ * std::exp(max_ - a) + 1.0;
            max_ = a;
        }
    }
    double value() const {
        if (max_ == neg_inf) return neg_inf;
        return max_ + std::log(sum_);
    }

private:
    double max_ = neg_inf;
    double sum_ = 0.0;
};

inline double log_sum_exp(std::span<const double> vals) {
    LogAccumulator acc;
    for (double v : vals) acc.add(v);
    return acc.value();
}

namespace detail {

inline double simpson_step(const std::function<double(double)>& f, double a, double b,
                           double fa, double fm, double fb, double whole, double tol,
                           int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0) {
        throw NumericError("adaptive quadrature failed to converge on [" +
                           std::to_string(a) + ", " + std::to_string(b) + "]");
    }
    if (std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

} // namespace detail

inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double tol, int max_depth = 48) {
    if (a == b) return 0.0;
    const double m = 0.5 * (a + b);
    const double fa = f(a), fm = f(m), fb = f(b);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return detail::simpson_step(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

// Regularized lower incomplete gamma P(a, x); series for x < a+1,
// continued fraction for the complement otherwise.
inline double regularized_gamma_p(double a, double x) {
    if (a <= 0.0 || x < 0.0) throw ConfigError("regularized_gamma_p: need a > 0, x >= 0");
    if (x == 0.0) return 0.0;
    const double lg = std::lgamma(a);
    if (x < a + 1.0) {
        double ap = a;
        double sum = 1.0 / a;
        double del = sum;
        for (int n = 0; n < 500; ++n) {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if (std::abs(del) < std::abs(sum) * 1e-16) {
                return sum * std::exp(-x + a * std::log(x) - lg);
            }
        }
        throw NumericError("incomplete gamma series did not converge");
    }
    double b = x + 1.0 - a;
    double c = 1.0 / 1e-300;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 500; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < 1e-300) d = 1e-300;
        c = b + an / c;
        if (std::abs(c) < 1e-300) c = 1e-300;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-16) {
            return 1.0 - std::exp(-x + a * std::log(x) - lg) * h;
        }
    }
    throw NumericError("incomplete gamma continued fraction did not converge");
}

inline double chi_square_pvalue(double stat, int dof) {
    if (dof <= 0) throw ConfigError("chi_square_pvalue: dof must be positive");
    if (stat <= 0.0) return 1.0;
    return 1.0 - regularized_gamma_p(0.5 * dof, 0.5 * stat);
}

struct ChiSquareResult {
    double stat = 0.0;
    int dof = 0;
    double p_value = 1.0;
};

// Goodness-of-fit against given class probabilities; classes are merged
// greedily (smallest expected count into its neighbor) until every expected
// count is at least min_expected.
inline ChiSquareResult chi_square_gof(std::vector<double> observed,
                                      std::vector<double> probs,
                                      double min_expected = 5.0) {
    if (observed.size() != probs.size() || observed.empty())
        throw ConfigError("chi_square_gof: size mismatch");
    double n = 0.0;
    for (double o : observed) n += o;
    std::vector<double> expected(probs.size());
    for (size_t i = 0; i < probs.size(); ++i) expected[i] = n * probs[i];
    while (expected.size() > 1) {
        size_t lo = std::min_element(expected.begin(), expected.end()) - expected.begin();
        if (expected[lo] >= min_expected) break;
        const size_t nb = (lo == 0) ? 1 : lo - 1;
        expected[nb] += expected[lo];
        observed[nb] += observed[lo];
        expected.erase(expected.begin() + lo);
        observed.erase(observed.begin() + lo);
    }
    ChiSquareResult r;
    r.dof = static_cast<int>(expected.size()) - 1;
    for (size_t i = 0; i < expected.size(); ++i) {
        if (expected[i] <= 0.0) continue;
        const double d = observed[i] - expected[i];
        r.stat += d * d / expected[i];
    }
    if (r.dof <= 0) {
        r.p_value = 1.0;
        return r;
    }
    r.p_value = chi_square_pvalue(r.stat, r.dof);
    return r;
}

// Complementary CDF of the Kolmogorov distribution.
inline double kolmogorov_q(double lambda) {
    if (lambda <= 0.0) return 1.0;
    if (lambda < 1.18) {
        // theta-function form; the alternating series is uselessly slow here
        const double t = std::exp(-pi * pi / (8.0 * lambda * lambda));
        const double cdf = std::sqrt(2.0 * pi) / lambda *
                           (t + std::pow(t, 9.0) + std::pow(t, 25.0) + std::pow(t, 49.0));
        return std::clamp(1.0 - cdf, 0.0, 1.0);
    }
    double sum = 0.0;
    double sign = 1.0;
    for (int m = 1; m <= 200; ++m) {
        const double term = sign * std::exp(-2.0 * m * m * lambda * lambda);
        sum += term;
        sign = -sign;
        if (std::abs(term) < 1e-16) break;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

struct KSResult {
    double d = 0.0;
    double p_value = 1.0;
};

inline KSResult two_sample_ks(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw ConfigError("two_sample_ks: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(i / na - j / nb));
    }
    KSResult r;
    r.d = d;
    const double ne = std::sqrt(na * nb / (na + nb));
    r.p_value = kolmogorov_q((ne + 0.12 + 0.11 / ne) * d);
    return r;
}

// Hurwitz zeta sum_{k>=0} (k+a)^(-s) for s > 1, a > 0, by Euler-Maclaurin.
inline double hurwitz_zeta(double s, double a) {
    if (s <= 1.0 || a <= 0.0) throw ConfigError("hurwitz_zeta: need s > 1, a > 0");
    // B_{2j} / (2j)! for j = 1..7
    static const double coef[] = {1.0 / 12, -1.0 / 720, 1.0 / 30240, -1.0 / 1209600,
                                  1.0 / 47900160, -691.0 / 1307674368000.0,
                                  1.0 / 74724249600.0};
    double sum = 0.0;
    int m = 0;
    while (a + m < 18.0) {
        sum += std::pow(a + m, -s);
        ++m;
    }
    const double z = a + m;
    sum += std::pow(z, 1.0 - s) / (s - 1.0) + 0.5 * std::pow(z, -s);
    double rising = s;                      // s(s+1)...(s+2j-2)
    double zpow = std::pow(z, -s - 1.0);    // z^{-(s+2j-1)}
    double prev_term = std::numeric_limits<double>::infinity();
    for (int j = 1; j <= 7; ++j) {
        const double term = coef[j - 1] * rising * zpow;
        sum += term;
        if (std::abs(term) < 1e-17 * std::abs(sum)) return sum;
        if (std::abs(term) > std::abs(prev_term))
            throw NumericError("hurwitz_zeta: asymptotic tail diverged");
        prev_term = term;
        rising *= (s + 2 * j - 1) * (s + 2 * j);
        zpow /= z * z;
    }
    return sum;
}

inline double riemann_zeta(double s) { return hurwitz_zeta(s, 1.0); }

inline double mean(std::span<const double> xs) {
    double m = 0.0;
    for (double x : xs) m += x;
    return xs.empty() ? 0.0 : m / static_cast<double>(xs.size());
}

inline double sample_variance(std::span<const double> xs) {
    if (xs.size() < 2) return 0.0;
    const double m = mean(xs);
    double v = 0.0;
    for (double x : xs) v += (x - m) * (x - m);
    return v / static_cast<double>(xs.size() - 1);
}

inline double standard_error(std::span<const double> xs) {
    if (xs.size() < 2) return 0.0;
    return std::sqrt(sample_variance(xs) / static_cast<double>(xs.size()));
}

} // namespace srp
