#include "srp/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "srp/errors.hpp"
#include "srp/numerics.hpp"

namespace srp {

namespace {

double norm2(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
}

// Alternating half-period segments of int_{x0}^inf cos(2 pi k x) f(x) dx,
// accelerated by iterated averaging of the partial sums (the envelope f is
// smooth and decreasing, so the averaging converges geometrically).
double cosine_tail_integral(const std::function<double(double)>& f, double k, double x0) {
    constexpr int n_seg = 48;
    const auto integrand = [&](double x) { return std::cos(2.0 * pi * k * x) * f(x); };
    std::vector<double> partial;
    partial.reserve(n_seg);
    // start at the first cosine zero at or after x0
    const double m0 = std::ceil(2.0 * k * x0 - 0.5);
    double lo = x0;
    double sum = 0.0;
    for (int m = 0; m < n_seg; ++m) {
        const double hi = (2.0 * (m0 + m) + 1.0) / (4.0 * k);
        if (hi <= lo) continue;
        sum += adaptive_simpson(integrand, lo, hi, 1e-16);
        partial.push_back(sum);
        lo = hi;
    }
    for (size_t len = partial.size(); len > 1; --len)
        for (size_t i = 0; i + 1 < len; ++i) partial[i] = 0.5 * (partial[i] + partial[i + 1]);
    return partial.empty() ? 0.0 : partial[0];
}

// Fourier transform of the normalized density c (|x|+1)^{-gamma}.
double power_law_phi(double gamma_xi, double k) {
    k = std::abs(k);
    if (k == 0.0) return 1.0;
    const double c = 0.5 * (gamma_xi - 1.0);
    const auto f = [&](double x) { return std::pow(1.0 + x, -gamma_xi); };
    double phi;
    if (k > 0.05) {
        phi = 2.0 * c * cosine_tail_integral(f, k, 0.0);
    } else {
        // Small k: compute the complement 1 - phi = 2c int (1 - cos) f to
        // full relative accuracy. Near part on a log axis (the oscillation
        // count up to x1 is fixed), far part as a closed-form power-law
        // integral minus an accelerated cosine tail.
        const double x1 = 16.0 / k;
        const auto g = [&](double t) {
            const double x = std::exp(t);
            const double u = 2.0 * pi * k * x;
            const double one_minus_cos =
                (u < 1e-4) ? 0.5 * u * u * (1.0 - u * u / 12.0) : 1.0 - std::cos(u);
            return one_minus_cos * f(x) * x;
        };
        const double x_lo = 1e-3 * std::pow(k, 0.25 * (gamma_xi - 3.0));
        const double d_near = adaptive_simpson(g, std::log(x_lo), std::log(x1),
                                               1e-12 * std::pow(k, gamma_xi - 1.0));
        const double far_mass = std::pow(1.0 + x1, 1.0 - gamma_xi) / (gamma_xi - 1.0);
        const double far_cos = cosine_tail_integral(f, k, x1);
        phi = 1.0 - 2.0 * c * (d_near + far_mass - far_cos);
    }
    if (!std::isfinite(phi)) throw NumericError("power-law transform: quadrature failed");
    return phi;
}

// Polylog-type series sum_{j>=1} x^j j^{-gamma} for x in [0, 1), with a
// midpoint-rule tail whose error is certified by the derivative bound.
double truncated_polylog(double gamma, double x, double tol) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) throw NumericError("polylog: argument must be < 1");
    if (gamma == 1.0) return -std::log1p(-x);
    const double w = -std::log(x);
    double sum = 0.0;
    int64_t j = 0;
    double term = 0.0;
    for (int64_t cap = 64; cap <= (int64_t(1) << 26); cap *= 2) {
        while (j < cap) {
            ++j;
            term = std::exp(-w * j) * std::pow(double(j), -gamma);
            sum += term;
            if (term < 1e-18 * sum) return sum;
        }
        // midpoint-rule tail from J + 1/2 with error |f'(J+1/2)| / 24
        const double t0 = double(j) + 0.5;
        const double ft0 = std::exp(-w * t0) * std::pow(t0, -gamma);
        const double err = (gamma / t0 + w) * ft0 / 24.0;
        if (err <= tol * sum || ft0 == 0.0) {
            const auto f = [&](double u) { return std::exp(-w * u) * std::pow(u, -gamma); };
            double t_hi = t0;
            double integral = 0.0;
            // integrate in doubling windows until the remainder is negligible
            while (true) {
                const double t_next = t_hi * 2.0 + 8.0 / std::max(w, 1e-300);
                integral += adaptive_simpson(f, t_hi, t_next, 1e-16 * (1.0 + sum));
                const double rem = std::exp(-w * t_next) * std::pow(t_next, -gamma) /
                                   std::max(w, gamma / t_next);
                if (rem < 1e-18 * (sum + integral)) break;
                t_hi = t_next;
            }
            return sum + integral;
        }
    }
    throw NumericError("polylog: series did not reach the requested tolerance");
}

} // namespace

JumpKernel JumpKernel::gaussian(int d, double beta) {
    if (d < 1) throw ConfigError("gaussian kernel: d must be >= 1");
    if (beta <= 0.0) throw ConfigError("gaussian kernel: beta must be > 0");
    JumpKernel k;
    k.d = d;
    k.family = KernelFamily::gaussian;
    k.beta = beta;
    k.growth_a = 4.0 * pi * pi * beta;
    k.growth_eta = 2.0;
    return k;
}

JumpKernel JumpKernel::power_law_1d(double gamma_xi, double a, double eta) {
    if (gamma_xi <= 1.0 || gamma_xi >= 2.0)
        throw ConfigError("power-law kernel: gamma_xi must lie in (1, 2)");
    if (a <= 0.0 || eta <= 0.0 || eta > 1.0)
        throw ConfigError("power-law kernel: growth certificate needs a > 0, eta in (0, d]");
    JumpKernel k;
    k.d = 1;
    k.family = KernelFamily::power_law_1d;
    k.gamma_xi = gamma_xi;
    k.growth_a = a;
    k.growth_eta = eta;
    // Positivity of the transform, checked on a log-spaced grid.
    for (double kk = 1.0 / 1024.0; kk <= 64.0; kk *= 2.0) {
        const double phi = power_law_phi(gamma_xi, kk);
        if (phi <= 0.0)
            throw NumericError("power-law kernel: transform not positive at k = " +
                               std::to_string(kk));
    }
    // Growth certificate on a small-k sample grid.
    for (double kk = 1.0 / 512.0; kk <= 0.25; kk *= 2.0) {
        const double eps = -std::log(power_law_phi(gamma_xi, kk));
        if (eps + 1e-12 < a * std::pow(kk, eta))
            throw ConfigError("power-law kernel: growth certificate fails at k = " +
                              std::to_string(kk));
    }
    return k;
}

double BoxGeometry::volume() const { return std::pow(L, d); }

BoxGeometry BoxGeometry::make(double L, int d, double k_max) {
    if (L <= 0.0) throw ConfigError("box: L must be > 0");
    if (d < 1) throw ConfigError("box: d must be >= 1");
    if (k_max < 0.0) throw ConfigError("box: k_max must be >= 0");
    BoxGeometry b;
    b.L = L;
    b.d = d;
    b.k_max = k_max;
    return b;
}

double default_mode_cutoff(const JumpKernel& kernel, double eps_cut) {
    if (kernel.family == KernelFamily::gaussian)
        return std::sqrt(eps_cut / (4.0 * pi * pi * kernel.beta));
    throw ConfigError("no default mode cutoff for experimental kernels; set k_max explicitly");
}

double dispersion(const JumpKernel& kernel, std::span<const double> k) {
    if (static_cast<int>(k.size()) != kernel.d)
        throw ConfigError("dispersion: k has wrong dimension");
    for (double v : k)
        if (!std::isfinite(v)) throw ConfigError("dispersion: k must be finite");
    if (kernel.family == KernelFamily::gaussian)
        return 4.0 * pi * pi * kernel.beta * norm2(k);
    const double phi = power_law_phi(kernel.gamma_xi, k[0]);
    if (phi <= 0.0 || phi > 1.0 + 1e-12)
        throw NumericError("dispersion: transform out of (0, 1] at k = " + std::to_string(k[0]));
    return std::max(0.0, -std::log(std::min(phi, 1.0)));
}

double reduce_to_torus(double x, double L) {
    double y = std::fmod(x + 0.5 * L, L);
    if (y < 0.0) y += L;
    return y - 0.5 * L;
}

double periodized_jump_weight(const JumpKernel& kernel, const BoxGeometry& box,
                              std::span<const double> x, double tol) {
    if (static_cast<int>(x.size()) != kernel.d)
        throw ConfigError("periodized_jump_weight: x has wrong dimension");
    if (kernel.d != box.d) throw ConfigError("periodized_jump_weight: kernel/box dimension mismatch");
    if (tol <= 0.0) throw ConfigError("periodized_jump_weight: tol must be > 0");
    const double L = box.L;
    if (kernel.family == KernelFamily::gaussian) {
        const double beta = kernel.beta;
        const double c1 = std::pow(4.0 * pi * beta, -0.5);
        const double tol_c = tol / (3.0 * kernel.d);
        // image terms at distance r contribute c1 e^{-r^2/(4 beta)}
        const double r_need =
            std::sqrt(4.0 * beta * std::max(0.0, std::log(c1 / tol_c) + 2.0)) + 0.5 * L;
        const int64_t z_max = static_cast<int64_t>(std::ceil(r_need / L)) + 1;
        if (z_max > 1000000) {
            const double l_min = r_need / 1000000.0;
            throw ConfigError("periodized_jump_weight: L too small for tolerance; minimal "
                              "admissible L is about " +
                              std::to_string(l_min));
        }
        double w = 1.0;
        for (int i = 0; i < kernel.d; ++i) {
            const double xi = reduce_to_torus(x[static_cast<size_t>(i)], L);
            double s = 0.0;
            for (int64_t z = -z_max; z <= z_max; ++z) {
                const double r = xi - L * static_cast<double>(z);
                s += c1 * std::exp(-r * r / (4.0 * beta));
            }
            w *= s;
        }
        return w;
    }
    // Power-law images in closed form through the Hurwitz zeta function.
    const double g = kernel.gamma_xi;
    const double c = 0.5 * (g - 1.0);
    const double xr = reduce_to_torus(x[0], L);
    const double direct = std::pow(1.0 + std::abs(xr), -g);
    const double right = std::pow(L, -g) * hurwitz_zeta(g, 1.0 + (1.0 - xr) / L);
    const double left = std::pow(L, -g) * hurwitz_zeta(g, 1.0 + (1.0 + xr) / L);
    return c * (direct + right + left);
}

namespace {

CriticalDensityReport critical_density_gaussian(const JumpKernel& kernel,
                                                const CycleWeightModel& weights, double tol) {
    const double p = 0.5 * kernel.d;
    const double pref = std::pow(4.0 * pi * kernel.beta, -p);
    int64_t min_j = 8;
    if (weights.regime == WeightRegime::asymptotic && !weights.overrides.empty())
        min_j = std::max(min_j, weights.overrides.back().first);
    double sum = 0.0;
    CriticalDensityReport rep;
    for (int64_t j = 1; j <= 100000000; ++j) {
        sum += std::exp(-cycle_weight(weights, j)) * std::pow(double(j), -p);
        if (j < min_j) continue;
        // midpoint-rule tail over t > j + 1/2
        const double t0 = double(j) + 0.5;
        double q, scale;
        if (weights.regime == WeightRegime::logarithmic) {
            q = weights.gamma + p;
            scale = 1.0;
        } else {
            q = p;
            scale = weights.theta();
        }
        const double integral = scale * std::pow(t0, 1.0 - q) / (q - 1.0);
        const double err = scale * q * std::pow(t0, -q - 1.0) / 24.0;
        if (err <= tol * (sum + integral)) {
            rep.value = pref * (sum + integral);
            rep.tail_bound = pref * err;
            rep.terms = j;
            return rep;
        }
    }
    throw NumericError("critical_density: series tail bound not reached within iteration cap");
}

CriticalDensityReport critical_density_power_law(const JumpKernel& kernel,
                                                 const CycleWeightModel& weights, double tol) {
    const double g = kernel.gamma_xi;
    const double a = kernel.growth_a;
    const double eta = kernel.growth_eta;
    const auto phi = [&](double k) { return power_law_phi(g, k); };
    // Drop [0, k_lo); its contribution is below k_lo^{1-eta} * zeta-ish mass
    // by the growth certificate.
    const auto weight_sum = [&](double q) -> double {
        // sum_j e^{-alpha_j} q^j for the given regime
        switch (weights.regime) {
        case WeightRegime::constant:
            return weights.theta() * q / (1.0 - q);
        case WeightRegime::asymptotic: {
            double s = weights.theta() * q / (1.0 - q);
            for (const auto& [j, aj] : weights.overrides)
                s += (std::exp(-aj) - weights.theta()) * std::pow(q, double(j));
            return s;
        }
        case WeightRegime::logarithmic:
            return truncated_polylog(weights.gamma, q, 0.01 * tol);
        }
        return 0.0;
    };
    double sup_w = 1.0; // sup_j e^{-alpha_j}
    if (weights.regime != WeightRegime::logarithmic) {
        sup_w = weights.theta();
        for (const auto& [j, aj] : weights.overrides) sup_w = std::max(sup_w, std::exp(-aj));
    }
    // Mass below k_lo is enclosed by the growth certificate:
    // 1 - phi >= (a/2) k^eta there, so the integrand is at most 2 sup_w / (a k^eta).
    const double k_lo =
        std::pow(0.01 * tol * a * (1.0 - eta) / (4.0 * sup_w), 1.0 / (1.0 - eta));
    const double low_bound = 4.0 * sup_w * std::pow(k_lo, 1.0 - eta) / (a * (1.0 - eta));
    // log-axis quadrature of sum_j e^{-alpha_j} phi(k)^j over [k_lo, k_hi]
    const auto f_log = [&](double t) {
        const double k = std::exp(t);
        const double ph = phi(k);
        if (ph <= 0.0) return 0.0;
        return weight_sum(std::min(ph, 1.0 - 1e-16)) * k;
    };
    double k_hi = 4.0;
    while (phi(k_hi) > 0.25) k_hi *= 2.0;
    // beyond k_hi: phi <= A / k^2 envelope, sum over cycle lengths <= sup_w phi/(1-phi)
    const double A = std::max({k_hi * k_hi * phi(k_hi), 4.0 * k_hi * k_hi * phi(2.0 * k_hi),
                               16.0 * k_hi * k_hi * phi(4.0 * k_hi)}) * 1.5;
    while (A / (k_hi * k_hi) > 0.5) k_hi *= 2.0;
    const double q_hi = A / (k_hi * k_hi);
    const double high_bound = 2.0 * sup_w * A / k_hi / (1.0 - q_hi);
    const double core =
        2.0 * adaptive_simpson(f_log, std::log(k_lo), std::log(k_hi), 0.02 * tol);
    CriticalDensityReport rep;
    rep.value = core + low_bound + high_bound;
    rep.tail_bound = low_bound + high_bound;
    rep.terms = 0;
    return rep;
}

} // namespace

CriticalDensityReport critical_density_report(const JumpKernel& kernel,
                                              const CycleWeightModel& weights, double tol) {
    if (tol <= 0.0) throw ConfigError("critical_density: tol must be > 0");
    if (static_cast<double>(kernel.d) <= kernel.growth_eta)
        throw ConfigError("critical_density: requires d > eta (series bound diverges)");
    if (kernel.family == KernelFamily::gaussian)
        return critical_density_gaussian(kernel, weights, tol);
    return critical_density_power_law(kernel, weights, tol);
}

namespace {

// (multiplicity, eps) pairs describing the nonzero modes of a box.
std::vector<std::pair<double, double>> mode_weight_entries(const JumpKernel& kernel,
                                                           const BoxGeometry& box) {
    std::vector<std::pair<double, double>> entries;
    const double m_rad = box.L * box.k_max;
    if (kernel.family == KernelFamily::gaussian) {
        const int64_t s_max = static_cast<int64_t>(std::floor(m_rad * m_rad));
        if (s_max < 1) return entries;
        const auto shells = shell_histogram(box.d, s_max);
        const double c = 4.0 * pi * pi * kernel.beta / (box.L * box.L);
        for (int64_t s = 1; s <= s_max; ++s) {
            if (shells[static_cast<size_t>(s)] == 0.0) continue;
            entries.emplace_back(shells[static_cast<size_t>(s)], c * static_cast<double>(s));
        }
        return entries;
    }
    const int64_t m_max = static_cast<int64_t>(std::floor(m_rad));
    for (int64_t m = 1; m <= m_max; ++m) {
        const double k[1] = {static_cast<double>(m) / box.L};
        entries.emplace_back(2.0, dispersion(kernel, k));
    }
    return entries;
}

} // namespace

FiniteVolumeDensity finite_volume_critical_density(const JumpKernel& kernel,
                                                   const CycleWeightModel& weights,
                                                   const BoxGeometry& box, int64_t j_cutoff) {
    if (kernel.d != box.d) throw ConfigError("finite_volume_critical_density: dimension mismatch");
    const auto entries = mode_weight_entries(kernel, box);
    FiniteVolumeDensity out;
    if (entries.empty()) return out;
    double eps_min = entries.front().second;
    for (const auto& [mult, eps] : entries) eps_min = std::min(eps_min, eps);

    double total = 0.0;
    double residual = 0.0;
    int64_t max_terms = 0;
    if (weights.regime == WeightRegime::logarithmic) {
        for (const auto& [mult, eps] : entries) {
            const double q = std::exp(-eps);
            double sum = 0.0;
            int64_t j = 0;
            while (true) {
                ++j;
                const double term = std::pow(double(j), -weights.gamma) * std::pow(q, double(j));
                sum += term;
                if (j_cutoff > 0 && j >= j_cutoff) {
                    residual += mult * std::pow(double(j + 1), -weights.gamma) *
                                std::pow(q, double(j + 1)) / (1.0 - q);
                    break;
                }
                if (term < 1e-17 * sum || term == 0.0) {
                    residual += mult * term * q / (1.0 - q);
                    break;
                }
            }
            max_terms = std::max(max_terms, j);
            total += mult * sum;
        }
    } else {
        const double theta = weights.theta();
        // overrides first (asymptotic regime), then the constant remainder
        int64_t j0 = 0;
        if (weights.regime == WeightRegime::asymptotic && !weights.overrides.empty())
            j0 = weights.overrides.back().first;
        if (j_cutoff > 0) j0 = std::min(j0, j_cutoff);
        if (j0 > 0) {
            std::vector<double> q_entry(entries.size());
            for (size_t i = 0; i < entries.size(); ++i) q_entry[i] = std::exp(-entries[i].second);
            std::vector<double> qpow(entries.size(), 1.0);
            size_t n_active = entries.size();
            for (int64_t j = 1; j <= j0 && n_active > 0; ++j) {
                const double wj = std::exp(-cycle_weight(weights, j));
                double sj = 0.0;
                for (size_t i = 0; i < n_active; ++i) {
                    qpow[i] *= q_entry[i];
                    sj += entries[i].first * qpow[i];
                }
                while (n_active > 0 && qpow[n_active - 1] < 1e-320) --n_active;
                total += wj * sj;
            }
        }
        // geometric closed form for j in (j0, j_cutoff or infinity)
        for (const auto& [mult, eps] : entries) {
            const double q = std::exp(-eps);
            if (q >= 1.0)
                throw ConfigError(
                    "finite_volume_critical_density: geometric series diverges "
                    "(dispersion <= 0 at a nonzero mode)");
            const double start = std::pow(q, double(j0 + 1));
            double geo;
            if (j_cutoff > 0) {
                if (j_cutoff <= j0) {
                    geo = 0.0;
                } else {
                    geo = start * (1.0 - std::pow(q, double(j_cutoff - j0))) / (1.0 - q);
                    residual += mult * theta * std::pow(q, double(j_cutoff + 1)) / (1.0 - q);
                }
            } else {
                geo = start / (1.0 - q);
            }
            total += mult * theta * geo;
        }
        max_terms = (j_cutoff > 0) ? j_cutoff : j0;
    }
    out.value = total / box.volume();
    out.j_tail_bound = residual / box.volume();
    out.j_terms = max_terms;
    if (kernel.family == KernelFamily::gaussian) {
        // estimate of the dropped ||k|| > k_max mass at j = 1
        const double c = 4.0 * pi * pi * kernel.beta / (box.L * box.L);
        const double m2 = box.L * box.k_max * box.L * box.k_max;
        const double hd = 0.5 * box.d;
        const double sigma = 2.0 * std::pow(pi, hd) / std::tgamma(hd);
        const double tail = 0.5 * sigma * std::pow(c, -hd) * std::tgamma(hd) *
                            (1.0 - regularized_gamma_p(hd, c * m2));
        out.mode_tail_bound = 2.0 * tail / box.volume();
    }
    return out;
}

double geometric_series_density_bound(const JumpKernel& kernel) {
    if (kernel.family == KernelFamily::gaussian) {
        if (kernel.d <= 2)
            throw ConfigError("geometric_series_density_bound: diverges for d <= 2");
        const double c = 4.0 * pi * pi * kernel.beta;
        const double hd = 0.5 * kernel.d;
        const double sigma = 2.0 * std::pow(pi, hd) / std::tgamma(hd);
        const double R = std::sqrt(60.0 / c);
        const auto f = [&](double r) {
            if (r == 0.0) return (kernel.d == 3) ? 1.0 / c : 0.0;
            return std::pow(r, kernel.d - 1.0) / std::expm1(c * r * r);
        };
        const double core = adaptive_simpson(f, 0.0, R, 1e-12);
        const double tail = 0.5 * std::pow(c, -hd) * std::tgamma(hd) *
                            (1.0 - regularized_gamma_p(hd, c * R * R)) * 1.02;
        return sigma * (core + tail);
    }
    return critical_density(kernel, CycleWeightModel::constant(0.0), 1e-8);
}

std::vector<double> shell_histogram(int d, int64_t s_max) {
    if (d < 1) throw ConfigError("shell_histogram: d must be >= 1");
    if (s_max < 0) throw ConfigError("shell_histogram: s_max must be >= 0");
    const size_t n = static_cast<size_t>(s_max) + 1;
    std::vector<double> h(n, 0.0);
    h[0] = 1.0;
    for (int dim = 0; dim < d; ++dim) {
        std::vector<double> next(n, 0.0);
        for (size_t s = 0; s < n; ++s) {
            if (h[s] == 0.0) continue;
            next[s] += h[s];
            for (int64_t m = 1; m * m + static_cast<int64_t>(s) <= s_max; ++m)
                next[s + static_cast<size_t>(m * m)] += 2.0 * h[s];
        }
        h.swap(next);
    }
    return h;
}

} // namespace srp
