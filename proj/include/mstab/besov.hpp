#pragma once

#include "mstab/grid.hpp"

#include <limits>
#include <vector>

namespace mstab {

inline constexpr double kRInf = std::numeric_limits<double>::infinity();

struct BesovParams {
    double s = 0.0;
    /// integrability index, 1, 2 or kRInf
    double r = 2.0;
};

/// Smooth radial cutoff: 1 for t <= 1, 0 for t >= 2.
double lp_eta(double t);
/// kappa(t) = eta(t) - eta(2t)
double lp_kappa(double t);
/// Multiplier of block j evaluated at |xi| = t.
double lp_multiplier(int j, double t);
/// Largest block with 2^{j+1} <= Nyquist radius.
int lp_max_block(const Grid& g);
/// Largest |eta| on the lattice, the corner of the cube of frequencies.
double lattice_corner_radius(const Grid& g);

Field lp_project(const Field& u, int j);

struct BesovResult {
    double value = 0.0;
    int j_max = 0;
    /// L^2 norm of u minus the sum of the retained blocks.
    double tail_l2 = 0.0;
    std::vector<double> block_l2;
};

BesovResult besov_norm(const Field& u, const BesovParams& p);

/// sqrt(sum (1+|xi|^2)^s |u_hat|^2 * cell)
double sobolev_norm(const Field& u, double s);

/**
 * Bounds (c_lo, c_hi) of besov_norm(., {s, 2}) / sobolev_norm(., s) over all
 * fields band-limited to |xi| <= 2^{j_max}; computed from the two spectral
 * weights on the lattice.
 */
std::pair<double, double> lp_equivalence_constants(const Grid& g, double s);

struct SeminormResult {
    double value = 0.0;
    int shells = 0;
    int radial_order = 0;
    int directions = 26;
    double r_out = 0.0;
    /// contributions below one spacing and beyond r_out
    double inner_tail = 0.0;
    double outer_tail = 0.0;
    bool outer_tail_exact = false;
};

/**
 * First-difference seminorm |u|_{B^{2,r}_eps}, summed over components in
 * the l^2 sense. Translations act as Fourier phase shifts.
 * @param u scalar or vector field
 * @param eps smoothness in (0,1)
 * @param r 1, 2 or kRInf
 */
SeminormResult diff_seminorm(const Field& u, double eps, double r);

struct AdmissibilityReport {
    double A_sup = 0.0;
    double A_seminorm = 0.0;
    double q_sup = 0.0;
    double total = 0.0;
    double M = 0.0;
    bool pass = false;
};

struct PotentialPair;
AdmissibilityReport admissibility_check(const PotentialPair& P);

} // namespace mstab
