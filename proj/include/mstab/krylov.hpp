#pragma once

#include "mstab/grid.hpp"

#include <functional>
#include <vector>

namespace mstab {

using CVector = std::vector<cplx>;
using LinOp = std::function<void(const CVector& in, CVector& out)>;

struct KrylovResult {
    bool converged = false;
    bool breakdown = false;
    int iterations = 0;
    double rel_residual = 0.0;
    std::vector<double> history;
};

cplx vdot(const CVector& a, const CVector& b);
double vnorm(const CVector& a);

/// Restarted GMRES; x holds the initial guess on entry.
KrylovResult gmres(const LinOp& A, const CVector& b, CVector& x, double tol, int max_iter, int restart = 40);

/// BiCGStab for complex non-Hermitian systems.
KrylovResult bicgstab(const LinOp& A, const CVector& b, CVector& x, double tol, int max_iter);

/// Conjugate gradients for Hermitian positive semidefinite systems, optional diagonal preconditioner.
KrylovResult cg(const LinOp& A, const CVector& b, CVector& x, double tol, int max_iter,
                const std::vector<double>* inv_diag = nullptr);

} // namespace mstab
