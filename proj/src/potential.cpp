#include "mstab/potential.hpp"

#include <cmath>
#include <cstring>
#include <random>

namespace mstab {

bool vanishes_outside_cube(const Field& u, double side)
{
    const Grid& g = *u.grid();
    const double half = side / 2 + 1e-12;
    for (std::size_t i = 0; i < g.size(); ++i) {
        Vec3 x = g.point(i);
        if (std::abs(x[0]) <= half && std::abs(x[1]) <= half && std::abs(x[2]) <= half) continue;
        for (int c = 0; c < u.ncomp(); ++c)
            if (u(c, i) != cplx(0.0)) return false;
    }
    return true;
}

PotentialPair make_pair(VectorField A, ScalarField q, double side, double M, double eps, double r)
{
    if (A.degree() != 1) throw Error("potential pair: A must be a 1-form");
    if (q.degree() != 0) throw Error("potential pair: q must be scalar");
    require_same_grid(A, q);
    if (!(side > 0) || side / 2 >= A.grid()->half_width())
        throw Error("potential pair: Omega must lie strictly inside the box");
    if (!(eps > 0 && eps < 1)) throw Error("potential pair: eps must lie in (0,1)");
    if (!(M >= 1)) throw Error("potential pair: M must be >= 1");
    if (!(r == 1 || r == 2 || r == kRInf)) throw Error("potential pair: r must be 1, 2 or inf");
    if (!A.finite() || !q.finite()) throw Error("potential pair: non-finite values");
    if (!vanishes_outside_cube(A, side) || !vanishes_outside_cube(q, side))
        throw Error("potential pair: A and q must vanish outside Omega");
    PotentialPair P;
    P.A = std::move(A);
    P.q = std::move(q);
    P.omega_side = side;
    P.M = M;
    P.eps = eps;
    P.r = r;
    return P;
}

double bump1(double s)
{
    if (std::abs(s) >= 1.0) return 0.0;
    return std::exp(1.0 - 1.0 / (1.0 - s * s));
}

ScalarField cube_window(const GridPtr& g, double half)
{
    return from_function(g, [half](const Vec3& x) {
        return cplx(bump1(x[0] / half) * bump1(x[1] / half) * bump1(x[2] / half));
    });
}

ScalarField ball_bump(const GridPtr& g, const Vec3& c, double radius)
{
    return from_function(g, [&](const Vec3& x) {
        double d = std::sqrt((x[0] - c[0]) * (x[0] - c[0]) + (x[1] - c[1]) * (x[1] - c[1])
                             + (x[2] - c[2]) * (x[2] - c[2]));
        return cplx(bump1(d / radius));
    });
}

Field generate_regular(const GridPtr& g, int degree, double eps, std::uint64_t seed, double amp, double half)
{
    Field out(g, degree);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    ScalarField win = cube_window(g, half);
    const double p = -(1.5 + eps);
    for (int c = 0; c < out.ncomp(); ++c) {
        std::vector<cplx> F(g->size());
        for (std::size_t i = 0; i < g->size(); ++i) {
            Vec3 k = g->frequency(i);
            double kk = std::sqrt(k[0] * k[0] + k[1] * k[1] + k[2] * k[2]);
            double a = nd(rng);
            double b = nd(rng);
            F[i] = kk > 0 ? cplx(a, b) * std::pow(kk, p) : cplx(0.0);
        }
        g->backward(F.data());
        for (std::size_t i = 0; i < g->size(); ++i) out(c, i) = F[i].real() * win(0, i).real();
    }
    double m = out.max_abs();
    if (m > 0) out *= amp / m;
    return out;
}

PotentialPair generate_pair(const GridPtr& g, double eps, std::uint64_t seed, double A_amp, double q_amp,
                            double side, double r)
{
    VectorField A = A_amp > 0 ? generate_regular(g, 1, eps, seed, A_amp, side / 2) : vector_field(g);
    ScalarField q = q_amp > 0 ? generate_regular(g, 0, eps, seed + 7919, q_amp, side / 2) : scalar_field(g);
    PotentialPair P = make_pair(std::move(A), std::move(q), side, 1.0, eps, r);
    auto rep = admissibility_check(P);
    P.M = std::max(1.0, 1.1 * rep.total);
    return P;
}

std::uint64_t fingerprint(const Field& u)
{
    // FNV-1a over the raw bytes
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](const void* p, std::size_t n) {
        const auto* b = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= b[i];
            h *= 1099511628211ULL;
        }
    };
    int N = u.grid()->n();
    double L = u.grid()->half_width();
    int d = u.degree();
    mix(&N, sizeof N);
    mix(&L, sizeof L);
    mix(&d, sizeof d);
    for (int c = 0; c < u.ncomp(); ++c) mix(u.comp(c).data(), u.comp(c).size() * sizeof(cplx));
    return h;
}

std::uint64_t fingerprint(const PotentialPair& P)
{
    std::uint64_t a = fingerprint(P.A);
    std::uint64_t b = fingerprint(P.q);
    std::uint64_t s;
    std::memcpy(&s, &P.omega_side, sizeof s);
    return a ^ (b * 0x9E3779B97F4A7C15ULL) ^ (s + 0x7F4A7C159E3779B9ULL);
}

} // namespace mstab
