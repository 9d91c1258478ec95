#include "mstab/hodge.hpp"
#include "mstab/potential.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace mstab;

namespace {

double r3(const Vec3& x) { return std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]); }

/// Gaussian profile, below 5e-5 of its peak outside the unit ball.
ScalarField inner_bump(const GridPtr& g)
{
    return from_function(g, [](const Vec3& x) {
        double r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
        return cplx(std::exp(-10.0 * r2) * (1 + x[0]));
    });
}

} // namespace

TEST_CASE("Helmholtz oracle splits gradients and codifferentials")
{
    auto g = make_grid(2.0, 24);
    ScalarField f = inner_bump(g);
    HelmholtzOracle o = helmholtz_oracle(d_form(f));
    CHECK(o.divfree_spectral_norm <= 1e-12 * l2_norm(d_form(f)));
    CHECK(l2_norm(o.divfree) <= 1e-12 * l2_norm(d_form(f)));

    TwoFormField F = twoform_field(g);
    F.comp(0) = f.comp(0);
    VectorField v = delta_form(F);
    HelmholtzOracle ov = helmholtz_oracle(v);
    CHECK(ov.divfree_spectral_norm == doctest::Approx(l2_norm(v)).epsilon(1e-10));
    CHECK(l2_norm(ov.divfree - v) <= 1e-10 * l2_norm(v));
}

TEST_CASE("exact input is reproduced by the ball decomposition")
{
    auto g = make_grid(2.0, 32);
    VectorField u = d_form(inner_bump(g));
    HodgeDecomposition H = decompose_ball(u);
    CHECK(H.residual <= 1e-10);
    CHECK(H.coexact_L2 <= 1e-6 * H.u_L2);
    CHECK(H.exact_L2 == doctest::Approx(H.u_L2).epsilon(1e-10));
    CHECK(H.active_cells > 0);
    // psi vanishes outside the staircase ball
    for (std::size_t p = 0; p < g->size(); ++p)
        if (r3(g->point(p)) > 1.6 + 2 * g->spacing()) CHECK(H.psi(0, p) == cplx(0.0));
}

TEST_CASE("ball decomposition of a generated difference")
{
    auto g = make_grid(2.0, 32);
    VectorField u = generate_regular(g, 1, 0.5, 41, 0.3, 0.5);
    HodgeDecomposition H = decompose_ball(u);
    HelmholtzOracle O = helmholtz_oracle(u);
    CHECK(H.residual <= 1e-6);
    CHECK(H.coexact_L2 == doctest::Approx(O.divfree_spectral_norm).epsilon(0.05));
    CHECK(H.du_Hm1 > 0.0);
    GaugeData G = gauge_phi(H, default_chi(g, H.balls));
    for (std::size_t p = 0; p < g->size(); ++p) {
        if (r3(g->point(p)) > 1.6 - 2 * g->spacing()) continue;
        cplx s = H.psi(0, p) - H.psi_star;
        CHECK(std::abs(G.phi(0, p) + G.phi_prime(0, p) - s) <= 1e-12 * (1 + std::abs(s)));
    }
    CHECK(G.grad_chi_max > 0.0);
}

TEST_CASE("default cutoff")
{
    auto g = make_grid(2.0, 32);
    BallPair b{1.0, 1.6};
    ScalarField chi = default_chi(g, b);
    for (std::size_t p = 0; p < g->size(); ++p) {
        double r = r3(g->point(p));
        double c = chi(0, p).real();
        if (r <= 1.0) CHECK(c == 1.0);
        if (r >= 1.0 + 0.75 * 0.6) CHECK(c == 0.0);
        CHECK(c >= 0.0);
        CHECK(c <= 1.0);
    }
}

TEST_CASE("decomposition guards")
{
    auto g = make_grid(2.0, 24);
    VectorField wide = vector_field(g);
    wide.comp(0) = from_function(g, [](const Vec3& x) { return cplx(r3(x) < 1.4 ? 1.0 : 0.0); }).comp(0);
    CHECK_THROWS_AS(decompose_ball(wide), Error);
    auto tight = make_grid(1.7, 16);
    CHECK_THROWS_AS(decompose_ball(vector_field(tight)), Error);
}
