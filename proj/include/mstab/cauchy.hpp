#pragma once

#include "mstab/forward.hpp"
#include "mstab/potential.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace mstab {

/// Boundary basis: restrictions of cos(a pi t1) cos(b pi t2) cos(c pi t3) to the cube faces, t = x/side + 1/2.
struct TraceBasis {
    std::vector<std::array<int, 3>> modes;
    /// nodal values on the cube, zero at interior nodes
    std::vector<std::vector<cplx>> traces;
};

/// Lowest K modes ordered by a+b+c, skipping modes dependent on the accepted ones.
TraceBasis make_trace_basis(const CubeDomain& D, int K);

/// Minimal-energy extension: (-Lap_h + 1) v = 0 inside, v = f on the boundary.
std::vector<cplx> trace_extension(const CubeDomain& D, const std::vector<cplx>& f);
/// Discrete H^1(Omega) norm, sqrt of B_{0,1}(v, conj v).
double h1_norm(const CubeDomain& D, const std::vector<cplx>& v);
/// Quotient norm of boundary data, realized by its minimal-energy extension.
double trace_norm(const CubeDomain& D, const std::vector<cplx>& f);

struct CauchyData {
    CubeDomain domain;
    TraceBasis basis;
    /// flux[k][l] = <N u_k, T f_l>, u_k the solution with trace f_k
    Eigen::MatrixXcd flux;
    /// gram[k][l] = (f_k, f_l) in the trace inner product
    Eigen::MatrixXcd gram;
    std::uint64_t fingerprint = 0;
    int max_iterations = 0;

    int K() const { return int(basis.modes.size()); }
};

/// Solves one Dirichlet problem per basis function; solver failures name the offending k.
CauchyData assemble_cauchy(const PotentialPair& P, const CubeDomain& D, int K);
CauchyData assemble_cauchy(const VectorField& A, const ScalarField& q, const CubeDomain& D, int K,
                           std::uint64_t fingerprint = 0);

/// sqrt(g^H G^{-1} g) with G the trace Gram matrix.
double trace_dual_norm(const CauchyData& C, const Eigen::VectorXcd& g);
/// sqrt(c^H G c): trace norm of sum c_k f_k.
double trace_coeff_norm(const CauchyData& C, const Eigen::VectorXcd& c);

struct DistOptions {
    int starts = 8;
    int ascent_steps = 60;
    int polish_steps = 20;
};

struct DistResult {
    double value = 0.0;
    /// sup over C1 of the gap to C2, and the reverse
    double d12 = 0.0, d21 = 0.0;
    bool low_confidence = false;
    int evaluations = 0;
};

/**
 * inf over d of |c - d|_G + |F_j^T c - F_k^T d|_{G^-1} for the element with trace coefficients c.
 * @param Fj flux matrix of the set c belongs to
 * @param Fk flux matrix of the set searched
 */
double cauchy_gap(const Eigen::MatrixXcd& G, const Eigen::MatrixXcd& Fj, const Eigen::MatrixXcd& Fk,
                  const Eigen::VectorXcd& c, int polish_steps = 20);

/// Two-sided sup-inf gap between the spans of the computed Cauchy data; a lower bound for the continuum value.
DistResult dist_cauchy(const CauchyData& C1, const CauchyData& C2, const DistOptions& opt = {});

struct GaugeReport {
    double dist = 0.0;
    double phi_boundary_max = 0.0;
    DistResult detail;
};

/// dist between the data of (A, q) and (A + grad phi, q); phi must vanish on the cube boundary.
GaugeReport gauge_invariance_check(const PotentialPair& P, const ScalarField& phi, const CubeDomain& D, int K);

struct BridgeSample {
    /// integral of i(A1-A2).(u1 grad u2b - u2b grad u1) + (A1^2-A2^2+q1-q2) u1 u2b, u2b = conj u2
    cplx volume = 0.0;
    /// <N1 u1, T u2b> - conj <N_{conj A2, conj q2} u2, T conj u1> from boundary-only extensions
    cplx boundary = 0.0;
    double identity_gap = 0.0;
    double u1_h1 = 0.0, u2_h1 = 0.0;
    /// 2 dist [1 + |A2|_inf^2 + |q2|_inf] |u1| |u2|
    double bound = 0.0;
    double ratio = 0.0;
};

/**
 * Draws u1 with random trace in the basis span solving L_{A1,q1} u1 = 0 and u2 solving
 * L_{conj A2, conj q2} u2 = 0, then evaluates both sides of the boundary-to-interior identity.
 */
BridgeSample bridge_sample(const PotentialPair& P1, const PotentialPair& P2, const CauchyData& C1, double dist,
                           std::uint64_t seed);

/// JSON header at @p path plus two CGOM matrix blobs next to it.
void save_cauchy(const std::string& path, const CauchyData& C);
/// @param expected_fingerprint nonzero values are checked against the stored one
CauchyData load_cauchy(const std::string& path, const GridPtr& grid = nullptr, std::uint64_t expected_fingerprint = 0);

} // namespace mstab
