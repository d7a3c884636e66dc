#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "srp/weights.hpp"

namespace srp {

enum class KernelFamily { gaussian, power_law_1d };

// Jump kernel: the single-step displacement density e^{-xi(x)} (normalized
// to unit integral) together with its dispersion eps(k) = -log of its
// Fourier transform, and a small-k growth certificate eps(k) >= a ||k||^eta.
struct JumpKernel {
    int d = 3;
    KernelFamily family = KernelFamily::gaussian;
    double beta = 1.0;     // gaussian: density ∝ e^{-||x||^2 / (4 beta)}
    double gamma_xi = 0.0; // power_law_1d: density ∝ (|x|+1)^{-gamma_xi}
    double growth_a = 0.0;
    double growth_eta = 0.0;

    static JumpKernel gaussian(int d, double beta);
    // Experimental 1-d kernel with density c (|x|+1)^{-gamma_xi}, gamma_xi in (1,2).
    // The growth certificate (a, eta) is caller-supplied and checked on a
    // sample grid; Fourier positivity is checked numerically at construction.
    static JumpKernel power_law_1d(double gamma_xi, double a, double eta);
};

struct BoxGeometry {
    double L = 1.0;
    int d = 3;
    double k_max = 0.0; // modes k in (1/L) Z^d with ||k|| <= k_max

    double volume() const;
    static BoxGeometry make(double L, int d, double k_max);
};

// Cutoff radius in k-space such that the dispersion exceeds eps_cut beyond it.
double default_mode_cutoff(const JumpKernel& kernel, double eps_cut = 40.0);

double dispersion(const JumpKernel& kernel, std::span<const double> k);

// Torus coordinate reduced to [-L/2, L/2).
double reduce_to_torus(double x, double L);

// e^{-xi_Lambda(x)}: the lattice-image sum sum_z e^{-xi(x - L z)}, with the
// neglected tail certified below `tol`.
double periodized_jump_weight(const JumpKernel& kernel, const BoxGeometry& box,
                              std::span<const double> x, double tol = 1e-14);

struct CriticalDensityReport {
    double value = 0.0;
    double tail_bound = 0.0;
    int64_t terms = 0;
};

CriticalDensityReport critical_density_report(const JumpKernel& kernel,
                                              const CycleWeightModel& weights,
                                              double tol = 1e-10);

inline double critical_density(const JumpKernel& kernel, const CycleWeightModel& weights,
                               double tol = 1e-10) {
    return critical_density_report(kernel, weights, tol).value;
}

struct FiniteVolumeDensity {
    double value = 0.0;
    double j_tail_bound = 0.0;    // residual of the cycle-length series
    double mode_tail_bound = 0.0; // estimate for the dropped ||k|| > k_max modes
    int64_t j_terms = 0;
};

// Finite-volume critical density: (1/|Lambda|) sum_{j} e^{-alpha_j}
// sum_{k != 0} e^{-j eps(k)} over the box's mode set. j_cutoff <= 0 selects
// automatic truncation with a certified residual.
FiniteVolumeDensity finite_volume_critical_density(const JumpKernel& kernel,
                                                   const CycleWeightModel& weights,
                                                   const BoxGeometry& box,
                                                   int64_t j_cutoff = 0);

// Upper bound integral int (e^{eps(k)} - 1)^{-1} dk (valid comparison point
// for the critical density whenever sup_j e^{-alpha_j} <= 1).
double geometric_series_density_bound(const JumpKernel& kernel);

// counts[s] = #{m in Z^d : ||m||^2 = s} for s = 0..s_max.
std::vector<double> shell_histogram(int d, int64_t s_max);

} // namespace srp
