#include "mstab/besov.hpp"
#include "mstab/mollify.hpp"
#include "mstab/potential.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace mstab;

TEST_CASE("mollifier has unit mass and is even")
{
    auto g = make_grid(1.0, 32);
    for (double tau : {0.125, 0.25, 0.5}) {
        Mollifier m = make_mollifier(g, tau);
        CHECK(m.integral() == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(std::abs(m.multiplier(0) - 1.0) < 1e-13);
        // a real even kernel has a real multiplier
        double im = 0;
        for (auto z : m.hat) im = std::max(im, std::abs(z.imag()));
        CHECK(im < 1e-13);
    }
}

TEST_CASE("mollifier scale limits")
{
    auto g = make_grid(1.0, 16);
    CHECK_THROWS_AS(make_mollifier(g, 1.5), Error);
    CHECK_THROWS_AS(make_mollifier(g, g->spacing()), Error);
    CHECK_NOTHROW(make_mollifier(g, 2 * g->spacing()));
}

TEST_CASE("convolution fixes constants and matches the spectral product")
{
    auto g = make_grid(1.0, 16);
    Mollifier m = make_mollifier(g, 0.25);
    ScalarField one = from_function(g, [](const Vec3&) { return cplx(1.0); });
    ScalarField c = convolve(m, one);
    double e = 0;
    for (auto z : c.comp(0)) e = std::max(e, std::abs(z - 1.0));
    CHECK(e < 1e-13);

    // direct periodic sum at one node
    ScalarField u = testing::random_field(g, 0, 8);
    ScalarField v = convolve(m, u);
    const int N = g->n();
    cplx direct = 0;
    const int i0 = 3, j0 = 5, k0 = 7;
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j)
            for (int k = 0; k < N; ++k)
                direct += m.kernel(0, g->index(i, j, k))
                          * u(0, g->index((i0 - i + N) % N, (j0 - j + N) % N, (k0 - k + N) % N));
    direct *= g->cell_volume();
    CHECK(std::abs(direct - v(0, g->index(i0, j0, k0))) < 1e-12 * std::abs(direct));
}

TEST_CASE("split is exact and the flat part shrinks with tau")
{
    auto g = make_grid(1.0, 32);
    VectorField A = generate_regular(g, 1, 0.5, 5, 0.5, 0.4);
    double prev = 1e300;
    for (double tau : {0.5, 0.25, 0.125}) {
        SplitResult s = split(A, tau);
        CHECK(l2_norm(s.sharp + s.flat - A) <= 1e-14 * l2_norm(A));
        double f = l2_norm(s.flat);
        CHECK(f < prev);
        prev = f;
    }
}

TEST_CASE("split refuses supports that reach the collar")
{
    auto g = make_grid(1.0, 16);
    VectorField A = testing::random_field(g, 1, 1);
    CHECK_THROWS_AS(split(A, 0.25), Error);
}

TEST_CASE("derivative constants scale like a fixed profile")
{
    auto g = make_grid(1.0, 64);
    auto [a1, a2] = mollifier_derivative_constants(make_mollifier(g, 0.5));
    auto [b1, b2] = mollifier_derivative_constants(make_mollifier(g, 0.25));
    CHECK(a1 > 0);
    CHECK(a2 > 0);
    CHECK(b1 == doctest::Approx(a1).epsilon(0.05));
    CHECK(b2 > 0.5 * a2);
    CHECK(b2 < 2.0 * a2);
}
