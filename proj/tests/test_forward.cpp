#include "mstab/forward.hpp"
#include "mstab/potential.hpp"
#include "support.hpp"

#include <doctest.h>

#include <random>

using namespace mstab;

namespace {

std::vector<cplx> random_vector(std::size_t n, unsigned seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    std::vector<cplx> v(n);
    for (auto& z : v) z = cplx(nd(rng), nd(rng));
    return v;
}

double max_diff(const std::vector<cplx>& a, const std::vector<cplx>& b)
{
    double e = 0;
    for (std::size_t i = 0; i < a.size(); ++i) e = std::max(e, std::abs(a[i] - b[i]));
    return e;
}

} // namespace

TEST_CASE("cube domain node counts")
{
    for (auto [N, n] : {std::pair{16, 9}, std::pair{32, 17}, std::pair{64, 33}}) {
        CubeDomain D = make_cube_domain(make_grid(1.0, N), 1.0);
        CHECK(D.n == n);
        CHECK(D.hull_side() == doctest::Approx(1.0));
        CHECK(D.point(0)[0] == doctest::Approx(-0.5));
    }
    CubeDomain D = make_cube_domain(make_grid(1.0, 16), 1.0);
    CHECK(D.node_weight(0) == 0.125);
    CHECK(D.node_weight(D.index(4, 4, 4)) == 1.0);
    CHECK(D.on_boundary(D.index(0, 3, 3)));
    CHECK_FALSE(D.on_boundary(D.index(1, 3, 3)));
    CHECK_THROWS_AS(make_cube_domain(make_grid(1.0, 8), 0.2), Error);
}

TEST_CASE("Dirichlet solve recovers a discrete solution")
{
    auto g = make_grid(1.0, 16);
    CubeDomain D = make_cube_domain(g, 1.0);
    PotentialPair P = generate_pair(g, 0.5, 3, 0.5, 0.5);
    CubeOperator op(D, P);
    std::vector<cplx> us(D.size());
    for (std::size_t l = 0; l < D.size(); ++l) {
        Vec3 x = D.point(l);
        us[l] = std::sin(x[0]) * std::cos(x[1]) + cplx(0, 1) * x[2] * x[2];
    }
    std::vector<cplx> F;
    op.apply_rows(us, F);
    DirichletProblem pr;
    pr.boundary = us;
    pr.source = F;
    DirichletSolution s = solve_dirichlet(op, pr);
    CHECK(s.rel_residual <= 1e-10);
    CHECK(max_diff(s.u, us) < 1e-8);
    CHECK(interior_residual(op, s.u, F) <= 1e-9);
}

TEST_CASE("bilinear form symmetry")
{
    auto g = make_grid(1.0, 16);
    CubeDomain D = make_cube_domain(g, 1.0);
    PotentialPair P = generate_pair(g, 0.5, 4, 0.5, 0.5);
    auto u = random_vector(D.size(), 1), v = random_vector(D.size(), 2);
    CubeOperator op0(D, vector_field(g), P.q);
    cplx a = op0.bilinear(u, v), b = op0.bilinear(v, u);
    CHECK(std::abs(a - b) <= 1e-12 * std::abs(a));
    CubeOperator op(D, P);
    CubeOperator opm = op.negated_magnetic();
    a = op.bilinear(u, v);
    b = opm.bilinear(v, u);
    CHECK(std::abs(a - b) <= 1e-12 * std::abs(a));
    // form_gradient is the derivative in the second slot
    auto gr = op.form_gradient(u);
    cplx s = 0;
    for (std::size_t i = 0; i < v.size(); ++i) s += gr[i] * v[i];
    CHECK(std::abs(s - a) <= 1e-12 * std::abs(a));
}

TEST_CASE("flux pairing does not depend on the extension")
{
    auto g = make_grid(1.0, 16);
    CubeDomain D = make_cube_domain(g, 1.0);
    PotentialPair P = generate_pair(g, 0.5, 5, 0.5, 0.5);
    CubeOperator op(D, P);
    DirichletProblem pr;
    pr.boundary = random_vector(D.size(), 3);
    auto u = solve_dirichlet(op, pr).u;
    auto f = random_vector(D.size(), 4);
    auto v0 = zero_extension(D, f);
    auto v1 = v0;
    auto extra = random_vector(D.size(), 5);
    for (std::size_t l = 0; l < D.size(); ++l)
        if (!D.on_boundary(l)) v1[l] = extra[l];
    FluxPairing p0 = flux_pairing(op, u, v0), p1 = flux_pairing(op, u, v1);
    CHECK(std::abs(p0.value - p1.value) <= 1e-8 * std::abs(p0.value));
    CHECK_FALSE(p0.warning);
}

TEST_CASE("interior eigenvalue is reported")
{
    auto g = make_grid(1.0, 16);
    CubeDomain D = make_cube_domain(g, 1.0);
    // lowest Dirichlet eigenvalue of the 7-point Laplacian on the node cube
    const double dx = g->spacing();
    double s = std::sin(kPi / (2.0 * (D.n - 1)));
    double lambda = 3 * 4 / (dx * dx) * s * s;
    CubeOperator op = CubeOperator::constant(D, -lambda);
    DirichletProblem pr;
    pr.boundary = std::vector<cplx>(D.size(), 1.0);
    CHECK_THROWS_AS(solve_dirichlet(op, pr), InteriorEigenvalueError);
    CubeOperator ok = CubeOperator::constant(D, 1.0);
    CHECK_NOTHROW(solve_dirichlet(ok, pr));
}

TEST_CASE("restriction and extension are inverse on the cube")
{
    auto g = make_grid(1.0, 16);
    CubeDomain D = make_cube_domain(g, 1.0);
    auto v = random_vector(D.size(), 9);
    ScalarField e = extend_to_box(D, v);
    CHECK(max_diff(restrict_to_cube(D, e), v) == 0.0);
    CHECK(l2_norm(e) == doctest::Approx(std::sqrt([&] {
              double s = 0;
              for (auto z : v) s += std::norm(z);
              return s * g->cell_volume();
          }())));
}
