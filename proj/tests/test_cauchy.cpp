#include "mstab/cauchy.hpp"
#include "mstab/potential.hpp"
#include "support.hpp"

#include <doctest.h>

#include <filesystem>

using namespace mstab;
using Eigen::MatrixXcd;
using Eigen::VectorXcd;

namespace {

struct Setup {
    GridPtr g = make_grid(1.0, 16);
    CubeDomain D = make_cube_domain(g, 1.0);
    PotentialPair P1 = generate_pair(g, 0.5, 3, 0.5, 0.5);
    PotentialPair P2 = generate_pair(g, 0.5, 4, 0.5, 0.5);
};

} // namespace

TEST_CASE("trace basis ordering")
{
    Setup s;
    TraceBasis B = make_trace_basis(s.D, 10);
    REQUIRE(B.modes.size() == 10);
    CHECK(B.modes[0] == std::array<int, 3>{0, 0, 0});
    for (std::size_t k = 1; k < B.modes.size(); ++k) {
        auto a = B.modes[k - 1], b = B.modes[k];
        CHECK(a[0] + a[1] + a[2] <= b[0] + b[1] + b[2]);
    }
    for (std::size_t l = 0; l < s.D.size(); ++l)
        CHECK(B.traces[0][l] == (s.D.on_boundary(l) ? cplx(1.0) : cplx(0.0)));
    CHECK_THROWS_AS(make_trace_basis(s.D, 0), Error);
    CHECK_THROWS_AS(make_trace_basis(s.D, 100000), Error);
}

TEST_CASE("trace norm of the constant")
{
    // the extension v = 1 has H^1 norm sqrt|Omega| = 1, the minimal one is smaller
    auto g = make_grid(1.0, 32);
    CubeDomain D = make_cube_domain(g, 1.0);
    double t = trace_norm(D, std::vector<cplx>(D.size(), 1.0));
    CHECK(t < 1.0);
    CHECK(t == doctest::Approx(0.990399).epsilon(1e-5));
    std::vector<cplx> ones(D.size(), 1.0);
    CHECK(h1_norm(D, ones) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("one-dimensional gap has a closed form")
{
    // inf_d sqrt(g)|c - d| + |a c - b d| / sqrt(g) = |c| |a - b| min(1/sqrt(g), sqrt(g)/|b|)
    for (auto [g, a, b] : {std::tuple{2.0, cplx(1.0, 0.5), cplx(3.0, -1.0)},
                           std::tuple{0.5, cplx(-2.0, 0.0), cplx(0.1, 0.2)}}) {
        MatrixXcd G(1, 1), Fj(1, 1), Fk(1, 1);
        G(0, 0) = g;
        Fj(0, 0) = a;
        Fk(0, 0) = b;
        VectorXcd c(1);
        c[0] = cplx(0.3, -0.4);
        double exact = std::abs(c[0]) * std::abs(a - b) * std::min(1 / std::sqrt(g), std::sqrt(g) / std::abs(b));
        CHECK(cauchy_gap(G, Fj, Fk, c) == doctest::Approx(exact).epsilon(1e-10));
    }
}

TEST_CASE("dist is a symmetric pseudo-metric on assembled data")
{
    Setup s;
    CauchyData C1 = assemble_cauchy(s.P1, s.D, 10);
    CauchyData C2 = assemble_cauchy(s.P2, s.D, 10);
    CHECK(C1.fingerprint == fingerprint(s.P1));
    DistResult self = dist_cauchy(C1, C1);
    CHECK(self.value <= 1e-10);
    DistResult a = dist_cauchy(C1, C2), b = dist_cauchy(C2, C1);
    CHECK(a.value > 1e-3);
    CHECK(a.value == b.value);
    CHECK(a.d12 == b.d21);
    CHECK(a.d21 == b.d12);
}

TEST_CASE("flux matrix transposes under A -> -A")
{
    Setup s;
    CauchyData C = assemble_cauchy(s.P1, s.D, 8);
    CauchyData Cm = assemble_cauchy(cplx(-1.0) * s.P1.A, s.P1.q, s.D, 8);
    CHECK((C.flux - Cm.flux.transpose()).norm() <= 1e-8 * C.flux.norm());
    CauchyData C0 = assemble_cauchy(vector_field(s.g), s.P1.q, s.D, 8);
    CHECK((C0.flux - C0.flux.transpose()).norm() <= 1e-8 * C0.flux.norm());
}

TEST_CASE("Cauchy data persistence")
{
    Setup s;
    CauchyData C = assemble_cauchy(s.P1, s.D, 6);
    auto dir = std::filesystem::temp_directory_path() / "mstab_test_cauchy";
    std::filesystem::create_directories(dir);
    auto path = (dir / "c.json").string();
    save_cauchy(path, C);
    CauchyData L = load_cauchy(path, s.g, C.fingerprint);
    CHECK(L.K() == 6);
    CHECK(L.flux == C.flux);
    CHECK(L.gram == C.gram);
    CHECK(L.basis.modes == C.basis.modes);
    CHECK_THROWS_WITH_AS(load_cauchy(path, s.g, C.fingerprint + 1), doctest::Contains("fingerprint"), Error);
    CHECK_THROWS_AS(load_cauchy((dir / "none.json").string()), Error);
}

TEST_CASE("gauge check rejects phi that does not vanish on the boundary")
{
    Setup s;
    ScalarField phi = from_function(s.g, [](const Vec3&) { return cplx(1.0); });
    CHECK_THROWS_AS(gauge_invariance_check(s.P1, phi, s.D, 4), Error);
}

TEST_CASE("bridge sample satisfies the identity")
{
    Setup s;
    CauchyData C1 = assemble_cauchy(s.P1, s.D, 10);
    CauchyData C2 = assemble_cauchy(s.P2, s.D, 10);
    double d = dist_cauchy(C1, C2).value;
    BridgeSample b = bridge_sample(s.P1, s.P2, C1, d, 7);
    CHECK(b.identity_gap <= 1e-6);
    CHECK(std::abs(b.volume) > 0.0);
    CHECK(b.ratio == doctest::Approx(std::abs(b.volume) / b.bound));
}
