#include "mstab/besov.hpp"
#include "mstab/potential.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace mstab;
using mstab::testing::random_field;
using mstab::testing::rel;

namespace {

/// Random field with every mode above the last full block removed.
Field band_limited(const GridPtr& g, int degree, unsigned seed)
{
    Field u = random_field(g, degree, seed);
    double band = std::exp2(lp_max_block(*g));
    for (int c = 0; c < u.ncomp(); ++c) {
        auto F = fft(*g, u.comp(c));
        for (std::size_t i = 0; i < F.size(); ++i) {
            Vec3 k = g->frequency(i);
            if (std::sqrt(k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) > band) F[i] = 0.0;
        }
        u.comp(c) = ifft(*g, F);
    }
    return u;
}

} // namespace

TEST_CASE("cutoff profile")
{
    CHECK(lp_eta(0.0) == 1.0);
    CHECK(lp_eta(1.0) == 1.0);
    CHECK(lp_eta(2.0) == 0.0);
    CHECK(lp_eta(1.5) == doctest::Approx(0.5).epsilon(1e-15));
    double prev = 1.0;
    for (double t = 1.0; t <= 2.0; t += 0.01) {
        CHECK(lp_eta(t) <= prev + 1e-15);
        prev = lp_eta(t);
    }
    CHECK(lp_kappa(0.25) == 0.0);
    CHECK(lp_kappa(1.5) == doctest::Approx(0.5));
}

TEST_CASE("blocks sum to one below the last full block")
{
    auto g = make_grid(1.0, 32);
    int jm = lp_max_block(*g);
    CHECK(jm == int(std::floor(std::log2(g->nyquist()))) - 1);
    double worst = 0;
    for (std::size_t i = 0; i < g->size(); ++i) {
        Vec3 k = g->frequency(i);
        double t = std::sqrt(k[0] * k[0] + k[1] * k[1] + k[2] * k[2]);
        if (t > std::exp2(jm)) continue;
        double s = 0;
        for (int j = 0; j <= jm; ++j) {
            double m = lp_multiplier(j, t);
            CHECK(m >= 0.0);
            s += m;
        }
        worst = std::max(worst, std::abs(s - 1.0));
    }
    CHECK(worst <= 1e-12);
}

TEST_CASE("projections reassemble a band-limited field")
{
    auto g = make_grid(1.0, 16);
    Field u = band_limited(g, 1, 4);
    Field s = lp_project(u, 0);
    for (int j = 1; j <= lp_max_block(*g); ++j) s += lp_project(u, j);
    CHECK(l2_norm(s - u) <= 1e-12 * l2_norm(u));
    CHECK_THROWS_AS(lp_project(u, lp_max_block(*g) + 1), Error);
    CHECK(besov_norm(u, {0.0, 2.0}).tail_l2 <= 1e-12 * l2_norm(u));
}

TEST_CASE("Besov norm of a single lattice mode")
{
    // L = pi puts the dual lattice on Z^3; |xi| = 3 splits evenly between blocks 1 and 2
    auto g = make_grid(kPi, 16);
    ScalarField e = plane_wave(g, {3.0, 0.0, 0.0});
    const double vol = std::pow(2 * kPi, 1.5);
    for (double s : {-1.0, 0.0, 0.5}) {
        double b1 = 0.5 * std::exp2(s), b2 = 0.5 * std::exp2(2 * s);
        CHECK(rel(besov_norm(e, {s, 2.0}).value, vol * std::sqrt(b1 * b1 + b2 * b2)) < 1e-12);
        CHECK(rel(besov_norm(e, {s, 1.0}).value, vol * (b1 + b2)) < 1e-12);
        CHECK(rel(besov_norm(e, {s, kRInf}).value, vol * std::max(b1, b2)) < 1e-12);
        CHECK(rel(sobolev_norm(e, s), vol * std::pow(10.0, s / 2)) < 1e-12);
    }
    CHECK_THROWS_AS(besov_norm(e, {0.0, 3.0}), Error);
}

TEST_CASE("B^{2,2}_s and H^s agree up to the lattice constants")
{
    auto g = make_grid(1.0, 16);
    for (double s : {-1.0, 0.0, 0.5}) {
        auto [lo, hi] = lp_equivalence_constants(*g, s);
        CHECK(lo > 0.0);
        CHECK(lo <= hi);
        for (unsigned seed = 0; seed < 4; ++seed) {
            Field u = band_limited(g, 0, 100 + seed);
            double ratio = besov_norm(u, {s, 2.0}).value / sobolev_norm(u, s);
            CHECK(ratio >= lo * (1 - 1e-12));
            CHECK(ratio <= hi * (1 + 1e-12));
        }
    }
}

TEST_CASE("difference seminorm")
{
    auto g = make_grid(2.0, 16);
    Field u = generate_regular(g, 1, 0.5, 9, 0.4, 0.5);

    SUBCASE("homogeneous of degree one")
    {
        double a = diff_seminorm(u, 0.5, kRInf).value;
        double b = diff_seminorm(cplx(2.0) * u, 0.5, kRInf).value;
        CHECK(a > 0.0);
        CHECK(rel(2 * a, b) < 1e-12);
    }
    SUBCASE("invariant under a lattice translation")
    {
        Field v(g, 1);
        const int N = g->n();
        for (int c = 0; c < 3; ++c)
            for (int i = 0; i < N; ++i)
                for (int j = 0; j < N; ++j)
                    for (int k = 0; k < N; ++k) v(c, g->index((i + 1) % N, j, k)) = u(c, g->index(i, j, k));
        for (double r : {1.0, 2.0, kRInf})
            CHECK(rel(diff_seminorm(u, 0.5, r).value, diff_seminorm(v, 0.5, r).value) < 1e-10);
    }
    SUBCASE("constants have zero seminorm")
    {
        ScalarField one = from_function(g, [](const Vec3&) { return cplx(1.0); });
        CHECK(diff_seminorm(one, 0.5, 2.0).value < 1e-12);
    }
    SUBCASE("parameter checks")
    {
        CHECK_THROWS_AS(diff_seminorm(u, 1.0, 2.0), Error);
        CHECK_THROWS_AS(diff_seminorm(u, 0.5, 3.0), Error);
    }
}

TEST_CASE("generated pairs are admissible")
{
    auto g = make_grid(2.0, 16);
    PotentialPair P = generate_pair(g, 0.5, 3, 0.5, 0.5);
    AdmissibilityReport a = admissibility_check(P);
    CHECK(a.pass);
    CHECK(a.A_sup >= 0.5);
    CHECK(a.A_sup <= 0.5 * std::sqrt(3.0) + 1e-12);
    CHECK(a.q_sup == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(a.M >= a.total);
    CHECK(a.total == doctest::Approx(a.A_sup + a.A_seminorm + a.q_sup));
}
