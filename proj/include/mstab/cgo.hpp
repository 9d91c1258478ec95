#pragma once

#include "mstab/grid.hpp"
#include "mstab/krylov.hpp"
#include "mstab/potential.hpp"

#include <string>
#include <vector>

namespace mstab {

/// Frequency vectors of a CGO pair, with zeta_j . zeta_j = 0 and (zeta_1 + conj zeta_2)/h = i xi.
struct Zetas {
    Vec3 xi{};
    double h = 1.0;
    Vec3 mu1{}, mu2{};
    CVec3 zeta1{}, zeta2{};
    /// limits of zeta_1 and zeta_2 as h -> 0: mu1 + i mu2 and -mu1 + i mu2
    CVec3 zeta0_1{}, zeta0_2{};
};

/**
 * @param xi target frequency, nonzero
 * @param h semiclassical parameter, h <= min(1, 2/|xi|)
 * @param reflect use the frame (mu1, -mu2) instead of (mu1, mu2)
 */
Zetas make_zetas(const Vec3& xi, double h, bool reflect = false);

cplx cdot(const CVec3& a, const CVec3& b);

struct DbarDiagnostics {
    /// lattice modes with |sigma| below 1e-6 frequency units
    int characteristic_modes = 0;
    /// fraction of the input's L^2 energy carried by those modes
    double characteristic_energy = 0.0;
};

/**
 * Regularized inverse of zeta0 . grad, the multiplier conj(sigma)/(|sigma|^2 + delta^2)
 * with sigma the symbol of zeta0 . grad and delta = 1e-8 frequency units.
 */
ScalarField dbar_inverse(const CVec3& zeta0, const ScalarField& f, DbarDiagnostics* diag = nullptr);

struct PhaseResult {
    ScalarField phi;
    /// ||zeta0 . grad phi + i zeta0 . A||_2 / ||zeta0 . A||_2
    double residual = 0.0;
    /// the same, after removing the characteristic modes of the source
    double residual_off_characteristic = 0.0;
    DbarDiagnostics dbar;
};

/// Phi = dbar_inverse(zeta0, -i zeta0 . A)
PhaseResult phase(const CVec3& zeta0, const VectorField& A);

/// (H^1_scl, H^-1_scl) norms of u on the periodic box.
std::pair<double, double> scl_norms(const ScalarField& u, double h);

/// Region U on which a CGO solution is used.
struct Region {
    enum class Kind { Cube, Ball } kind = Kind::Cube;
    /// cube side or ball radius
    double size = 1.0;

    bool contains(const Vec3& x) const;
    double circumradius() const;
};

struct CGOOptions {
    Region region{};
    bool reflect = false;
    /// 0 selects tau = h^{1/(eps+2)}
    double tau = 0.0;
    int max_iter = 500;
    int restart = 40;
    double tol = 1e-6;
};

struct CGOSolution {
    Zetas zetas;
    int which = 1;
    double tau = 0.0;
    CVec3 zeta{};
    CVec3 zeta0{};
    /// quasi-periodic shift: r = e^{i kappa.x} r_periodic
    Vec3 kappa{};
    ScalarField phi;
    VectorField grad_phi;
    ScalarField a;
    ScalarField r;
    VectorField grad_r;
    ScalarField w;

    double w_Hm1scl = 0.0;
    double residual_equation = 0.0;
    double remainder_H1scl = 0.0;
    double log_u_H1 = 0.0;
    double transport_residual = 0.0;
    double transport_residual_spectral = 0.0;
    double w_formula_gap = 0.0;
    double weight_max = 0.0;
    DbarDiagnostics dbar;
    bool converged = false;
    int iterations = 0;
    std::vector<double> history;
    std::string note;

    /// b = a + r, so that u = e^{x.zeta/h} b
    ScalarField b() const { return a + r; }
    /// grad b = a grad phi + grad r
    VectorField grad_b() const;
};

/// Role of the potentials: 1 uses (A, q) with zeta_1; 2 uses (conj A, conj q) with zeta_2.
CGOSolution build_cgo(const PotentialPair& P, const Vec3& xi, double h, int which, const CGOOptions& opt = {});

/**
 * The conjugated operator e^{-zeta.x/h} h^2 L_{A,q} e^{zeta.x/h} applied to v on the
 * periodic box; used for w and for residual checks.
 */
ScalarField conjugated_operator(const VectorField& A, const ScalarField& q, const CVec3& zeta, double h,
                                const ScalarField& v);

/**
 * Right-hand side w = -P_zeta a through the closed-form expression
 * h^2 Lap a + i h^2 A.grad a - h^2 m_A(a) - h^2 (A^2+q) a + 2h zeta_c.grad a
 * + 2hi zeta0.A_flat a + 2hi zeta_c.A a, with zeta_c = zeta - zeta0, paired against phi;
 * m_A enters through its integration-by-parts form.
 */
cplx w_functional(const VectorField& A, const ScalarField& q, const CGOSolution& s, const ScalarField& test);

/// Relative residual of P_zeta (a + r) on the region's nodes, scaled by the sum of term magnitudes.
double cgo_equation_residual(const PotentialPair& P, const CGOSolution& s, const Region& U);

/// Halves h from the cap until the remainder solve converges, then bisects; returns the largest converged h.
double calibrate_h_max(const PotentialPair& P, const Vec3& xi, const CGOOptions& opt, int steps = 6);

/// Smooth radial cutoff equal to one on the region's neighbourhood and zero well before the box edge.
ScalarField region_cutoff(const GridPtr& g, const Region& U);

} // namespace mstab
