#pragma once

#include "mstab/grid.hpp"

#include <utility>

namespace mstab {

/// Balls B' (radius inner) and B (radius outer) centred at the origin.
struct BallPair {
    double inner = 1.0;
    double outer = 1.6;
};

struct HelmholtzOracle {
    /// scalar potential, multiplier -i eta.u_hat / |eta|^2 with the zero mode dropped
    ScalarField psi;
    /// u - d psi
    VectorField divfree;
    /// (sum |eta ^ u_hat|^2 / |eta|^2 + |u_hat(0)|^2)^{1/2} with the Parseval weight
    double divfree_spectral_norm = 0.0;
};

/// Periodic Helmholtz splitting of a compactly supported 1-form.
HelmholtzOracle helmholtz_oracle(const VectorField& u);

/**
 * Decomposition u = d psi + codiff F on the staircase ball built from the grid cells whose
 * centres lie in B. Cochains are point values: psi at nodes, 1-forms on edges, F on faces.
 * The codifferential is the mass-weighted adjoint of d, which imposes the zero normal trace of F
 * as a natural boundary condition.
 */
struct HodgeDecomposition {
    GridPtr grid;
    BallPair balls;
    /// node values, zero outside the staircase ball
    ScalarField psi;
    /// face values: component (j,k) of the face through node p spanned by e_j, e_k
    TwoFormField F;
    /// codiff F and d psi as edge values, stored at the edge's base node
    VectorField coexact, exact;
    cplx psi_star = 0.0;

    double u_L2 = 0.0;
    double coexact_L2 = 0.0;
    double exact_L2 = 0.0;
    /// ||u - d psi - codiff F|| / ||u|| over the ball edges
    double residual = 0.0;
    /// share of ||F|| on faces that touch the boundary transversally
    double normal_trace_residual = 0.0;
    /// H^{-1} norm of du on the box
    double du_Hm1 = 0.0;
    /// ||psi - psi*||_{H^1(B \ B')}
    double psi_shell_H1 = 0.0;
    int active_cells = 0;
};

/// Edge values are line averages of u. @throws Error when |u| exceeds 1e-3 max|u| outside B'
HodgeDecomposition decompose_ball(const VectorField& u, const BallPair& balls = {});

/// Radial cutoff equal to one on B' and zero from R' + 0.75 (R - R') outwards.
ScalarField default_chi(const GridPtr& g, const BallPair& balls);

struct GaugeData {
    ScalarField chi, phi, phi_prime;
    /// ||grad phi'||_{L^2(B \ B')}
    double grad_phi_prime_shell = 0.0;
    double psi_shell_H1 = 0.0;
    double grad_chi_max = 0.0;
    /// grad_phi_prime_shell / (psi_shell_H1 (1 + grad_chi_max))
    double product_rule_ratio = 0.0;
};

/// phi = chi (psi - psi*), phi' = (1 - chi)(psi - psi*).
GaugeData gauge_phi(const HodgeDecomposition& H, const ScalarField& chi);

} // namespace mstab
