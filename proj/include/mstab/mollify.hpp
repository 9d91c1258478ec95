#pragma once

#include "mstab/grid.hpp"

#include <utility>
#include <vector>

namespace mstab {

/**
 * Discrete Psi_tau(x) = tau^{-3} Psi(x/tau) with Psi the exp(-1/(1-|x|^2))
 * bump, renormalized so that its grid integral is exactly one. The kernel
 * is stored by periodic offset from the origin.
 */
struct Mollifier {
    GridPtr grid;
    double tau = 1.0;
    ScalarField kernel;
    /// FFT of kernel times the cell volume; multiplies spectra in convolutions.
    std::vector<cplx> hat;

    double integral() const;
    /// Value of the convolution multiplier at lattice frequency index idx.
    cplx multiplier(std::size_t idx) const { return hat[idx]; }
};

/// @param tau scale, at least two grid spacings and at most 1
Mollifier make_mollifier(const GridPtr& g, double tau);

/// Periodic convolution with the mollifier, componentwise.
Field convolve(const Mollifier& m, const Field& u);

struct SplitResult {
    VectorField sharp;
    VectorField flat;
};

/// A = A_sharp + A_flat with A_sharp = Psi_tau * A.
SplitResult split(const VectorField& A, const Mollifier& m);
SplitResult split(const VectorField& A, double tau);

/// tau^{|alpha|} ||d^alpha Psi_tau||_{L^1} maximized over |alpha| = 1 and |alpha| = 2.
std::pair<double, double> mollifier_derivative_constants(const Mollifier& m);

} // namespace mstab
