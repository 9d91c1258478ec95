#include "mstab/field_io.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>

using namespace mstab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
    fs::path d = fs::temp_directory_path() / "mstab_test_field_io";
    fs::create_directories(d);
    return d / name;
}

std::vector<char> slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

void spit(const fs::path& p, const std::vector<char>& b)
{
    std::ofstream out(p, std::ios::binary);
    out.write(b.data(), std::streamsize(b.size()));
}

} // namespace

TEST_CASE("CGOF round trip is bitwise")
{
    auto g = make_grid(1.25, 8);
    for (int deg = 0; deg <= 2; ++deg) {
        Field u = testing::random_field(g, deg, 40 + deg);
        auto p = scratch("u" + std::to_string(deg) + ".cgof");
        save_field(p.string(), u);
        CHECK(fs::file_size(p) == 4 + 4 + 1 + 4 + 8 + std::size_t(u.ncomp()) * g->size() * 16);
        Field v = load_field(p.string(), g);
        CHECK(v.grid() == g);
        REQUIRE(v.degree() == deg);
        for (int c = 0; c < u.ncomp(); ++c)
            CHECK(std::memcmp(u.comp(c).data(), v.comp(c).data(), g->size() * sizeof(cplx)) == 0);
        Field w = load_field(p.string());
        CHECK(w.grid()->n() == 8);
        CHECK(w.grid()->half_width() == 1.25);
    }
}

TEST_CASE("CGOF header errors")
{
    auto g = make_grid(1.0, 8);
    auto p = scratch("bad.cgof");
    save_field(p.string(), testing::random_field(g, 1, 5));
    auto bytes = slurp(p);

    SUBCASE("truncated payload")
    {
        spit(p, std::vector<char>(bytes.begin(), bytes.end() - 16));
        CHECK_THROWS_AS(load_field(p.string()), Error);
    }
    SUBCASE("unknown version")
    {
        auto b = bytes;
        b[4] = 9;
        spit(p, b);
        CHECK_THROWS_WITH_AS(load_field(p.string()), doctest::Contains("version"), Error);
    }
    SUBCASE("wrong magic")
    {
        auto b = bytes;
        b[0] = 'X';
        spit(p, b);
        CHECK_THROWS_AS(load_field(p.string()), Error);
    }
    SUBCASE("missing file")
    {
        CHECK_THROWS_AS(load_field((p.string() + ".none")), Error);
    }
}

TEST_CASE("matrix blob round trip")
{
    std::vector<cplx> m{{1, 2}, {3, 4}, {5, 6}, {-1, 0.5}, {0, 0}, {1e-300, -1e300}};
    auto p = scratch("m.cgom");
    save_matrix(p.string(), 2, 3, m);
    int r = 0, c = 0;
    auto back = load_matrix(p.string(), r, c);
    CHECK(r == 2);
    CHECK(c == 3);
    CHECK(back == m);
}
