#pragma once

#include "mstab/besov.hpp"
#include "mstab/grid.hpp"

#include <cstdint>
#include <string>

namespace mstab {

/// Magnetic and electric potentials supported in the cube [-side/2, side/2]^3.
struct PotentialPair {
    VectorField A;
    ScalarField q;
    double omega_side = 1.0;
    double M = 1.0;
    double eps = 0.5;
    double r = kRInf;

    const GridPtr& grid() const { return A.grid(); }
};

/// True when every node with some |x_i| > side/2 carries a zero value.
bool vanishes_outside_cube(const Field& u, double side);

/**
 * Validates shapes and supports, then returns the pair.
 * @param A 1-form
 * @param q scalar
 * @param side edge length of the cube Omega
 */
PotentialPair make_pair(VectorField A, ScalarField q, double side, double M, double eps, double r);

/// exp(1 - 1/(1-s^2)) on |s| < 1, else 0.
double bump1(double s);
/// Product of bump1(x_i / half) over the three axes.
ScalarField cube_window(const GridPtr& g, double half);
/// bump1(|x - c| / radius)
ScalarField ball_bump(const GridPtr& g, const Vec3& c, double radius);

/**
 * Random real field with spectrum ~ |xi|^{-(3/2+eps)}, multiplied by
 * cube_window(half) and scaled so that its sup equals amp. Components
 * are drawn from one seeded stream.
 */
Field generate_regular(const GridPtr& g, int degree, double eps, std::uint64_t seed, double amp, double half);

/// Builds an admissible pair from generated fields; M is 1.1 x the measured sum (at least 1).
PotentialPair generate_pair(const GridPtr& g, double eps, std::uint64_t seed, double A_amp, double q_amp,
                            double side = 1.0, double r = kRInf);

/// Stable 64-bit fingerprint of a field's bytes and grid.
std::uint64_t fingerprint(const Field& u);
std::uint64_t fingerprint(const PotentialPair& P);

} // namespace mstab
