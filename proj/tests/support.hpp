#pragma once

#include "mstab/grid.hpp"

#include <random>

namespace mstab::testing {

/// Field with independent normal real and imaginary parts at every node.
inline Field random_field(const GridPtr& g, int degree, unsigned seed)
{
    Field u(g, degree);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    for (int c = 0; c < u.ncomp(); ++c)
        for (auto& v : u.comp(c)) v = cplx(nd(rng), nd(rng));
    return u;
}

inline double rel(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

} // namespace mstab::testing
