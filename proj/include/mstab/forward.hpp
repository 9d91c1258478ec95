#pragma once

#include "mstab/grid.hpp"
#include "mstab/krylov.hpp"
#include "mstab/potential.hpp"

#include <vector>

namespace mstab {

/// Box-grid nodes lying in the cube [-side/2, side/2]^3, indexed locally with axis 3 fastest.
struct CubeDomain {
    GridPtr grid;
    double side = 1.0;
    /// first box index inside the cube along every axis
    int i0 = 0;
    /// nodes per axis
    int n = 0;

    double spacing() const { return grid->spacing(); }
    std::size_t size() const { return std::size_t(n) * n * n; }
    std::size_t index(int i, int j, int k) const { return (std::size_t(i) * n + j) * n + k; }
    std::size_t box_index(std::size_t local) const;
    Vec3 point(std::size_t local) const;
    bool on_boundary(std::size_t local) const;
    /// trapezoid weight of a node, product of 1/2 per boundary coordinate
    double node_weight(std::size_t local) const;
    /// edge length scale of the node hull, (n-1) * spacing
    double hull_side() const { return (n - 1) * spacing(); }
};

CubeDomain make_cube_domain(const GridPtr& g, double side);

/// Restricts a box field to the cube nodes.
std::vector<cplx> restrict_to_cube(const CubeDomain& D, const Field& u, int comp = 0);
/// Extends cube values to a box field, zero elsewhere.
ScalarField extend_to_box(const CubeDomain& D, const std::vector<cplx>& v);

class InteriorEigenvalueError : public Error {
public:
    using Error::Error;
};

/**
 * Discrete magnetic Schroedinger form on the cube nodes:
 * B(u,v) = sum_edges w_e dx^3 [ (du)(dv)/dx^2 + i A_e (u_i v_j - u_j v_i)/dx ]
 *        + sum_nodes w_n dx^3 (A.A + q) u v
 * with trapezoid weights and A_e the mean of the two end values. Interior rows
 * of dB/dv give the 7-point Laplacian with centred magnetic terms.
 */
class CubeOperator {
public:
    CubeOperator(const CubeDomain& D, const VectorField& A, const ScalarField& q);
    CubeOperator(const CubeDomain& D, const PotentialPair& P) : CubeOperator(D, P.A, P.q) {}
    /// Zero magnetic potential and constant electric potential c.
    static CubeOperator constant(const CubeDomain& D, cplx c);

    const CubeDomain& domain() const { return D_; }

    /// (L_h u) at every node; boundary rows hold zero.
    void apply_rows(const std::vector<cplx>& u, std::vector<cplx>& out) const;
    cplx bilinear(const std::vector<cplx>& u, const std::vector<cplx>& v) const;
    /// Coefficients g with B(u, v) = sum_p g_p v_p.
    std::vector<cplx> form_gradient(const std::vector<cplx>& u) const;
    /// The operator with A replaced by -A.
    CubeOperator negated_magnetic() const;
    /// The operator with A, q replaced by their conjugates.
    CubeOperator conjugated() const;

    std::vector<std::size_t> interior_nodes() const;

private:
    CubeDomain D_;
    std::array<std::vector<cplx>, 3> Anode_;
    std::vector<cplx> pot_;
};

struct DirichletProblem {
    /// values on boundary nodes (interior entries ignored), length D.size()
    std::vector<cplx> boundary;
    /// optional source on interior nodes, length D.size() or empty
    std::vector<cplx> source;
};

struct DirichletSolution {
    std::vector<cplx> u;
    int iterations = 0;
    double rel_residual = 0.0;
    double cond_lower_bound = 0.0;
};

struct SolveOptions {
    double tol = 1e-10;
    int max_iter = 10000;
    bool probe_condition = true;
};

/// Throws InteriorEigenvalueError on breakdown, stagnation or a condition estimate above 1e12.
DirichletSolution solve_dirichlet(const CubeOperator& op, const DirichletProblem& prob, const SolveOptions& opt = {});

/// Relative residual of the interior rows, ||L_h u - F|| / (||L_h|| ||u||) style scaling.
double interior_residual(const CubeOperator& op, const std::vector<cplx>& u, const std::vector<cplx>& source = {});

struct FluxPairing {
    cplx value = 0.0;
    double residual = 0.0;
    bool warning = false;
};

/// <N u, T v> as the discrete form B(u, v); v may be any extension of the trace.
FluxPairing flux_pairing(const CubeOperator& op, const std::vector<cplx>& u, const std::vector<cplx>& v);

/// Boundary values of v with zero interior.
std::vector<cplx> zero_extension(const CubeDomain& D, const std::vector<cplx>& v);

} // namespace mstab
