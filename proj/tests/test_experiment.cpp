#include "mstab/experiment.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace mstab;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string read_text(const fs::path& p)
{
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int count_fields(const std::string& line)
{
    return int(std::count(line.begin(), line.end(), ',')) + 1;
}

ExperimentConfig tiny_config(const std::string& out)
{
    ExperimentConfig c;
    c.L = 2.2;
    c.N = 28;
    c.K = 6;
    c.t_values = {1.0, 0.5};
    c.out_dir = out;
    return c;
}

} // namespace

TEST_CASE("default configuration is valid")
{
    ExperimentConfig c;
    CHECK_NOTHROW(c.validate());
}

TEST_CASE("configuration validation names the parameter")
{
    ExperimentConfig c;
    c.N = 33;
    CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("N must be even"), Error);
    c = {};
    c.eps = 1.0;
    CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("eps"), Error);
    c = {};
    c.balls = {1.0, 0.9};
    CHECK_THROWS_AS(c.validate(), Error);
    c = {};
    c.L = 1.5;
    CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("B must lie"), Error);
    c = {};
    c.N = 24;
    CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("too coarse"), Error);
    c = {};
    c.h_values = {0.5};
    CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("h_values"), Error);
    c = {};
    c.theta = 0.7;
    CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("configuration JSON round trip")
{
    ExperimentConfig c;
    c.L = 2.5;
    c.N = 32;
    c.r = 2.0;
    c.t_values = {0.8, 0.4};
    c.mode = ExtractMode::Boundary;
    c.seed = 17;
    json j = config_to_json(c);
    ExperimentConfig d = config_from_json(j);
    CHECK(config_to_json(d) == j);
    CHECK(d.mode == ExtractMode::Boundary);
    CHECK(d.r == 2.0);

    json k = config_to_json(ExperimentConfig{});
    CHECK(k["r"] == "inf");
    CHECK(config_from_json(k).r == kRInf);
    CHECK(config_from_json(json::object()).N == 40);
}

TEST_CASE("load_config errors")
{
    auto dir = fs::temp_directory_path() / "mstab_test_cfg";
    fs::create_directories(dir);
    CHECK_THROWS_AS(load_config((dir / "missing.json").string()), Error);
    std::ofstream(dir / "bad.json") << "{ not json";
    CHECK_THROWS_AS(load_config((dir / "bad.json").string()), Error);
    std::ofstream(dir / "range.json") << R"({"N": 7})";
    CHECK_THROWS_AS(load_config((dir / "range.json").string()), Error);
}

TEST_CASE("sweep CSV layout")
{
    auto cols = sweep_columns();
    CHECK(cols.size() == 13);
    CHECK(cols.front() == "t");
    CHECK(cols.back() == "k_used");
    std::string empty = sweep_csv({});
    CHECK(std::count(empty.begin(), empty.end(), '\n') == 1);
    CHECK(count_fields(empty.substr(0, empty.find('\n'))) == 13);
    SweepRow r;
    r.t = 0.5;
    r.k_used = 2;
    std::string two = sweep_csv({r, r});
    std::istringstream ss(two);
    std::string line;
    int n = 0;
    while (std::getline(ss, line)) {
        CHECK(count_fields(line) == 13);
        ++n;
    }
    CHECK(n == 3);
}

TEST_CASE("family perturbation is linear in t")
{
    ExperimentConfig c = tiny_config("unused");
    GridPtr g = make_grid(c.L, c.N);
    Family f = make_family(g, c, 3);
    PotentialPair p = f.at(0.5);
    CHECK(l2_norm(p.A - f.base.A - cplx(0.5) * f.dA) <= 1e-15 * l2_norm(f.dA));
    CHECK(l2_norm(p.q - f.base.q - cplx(0.5) * f.dq) <= 1e-15 * l2_norm(f.dq));
    CHECK(admissibility_check(f.at(1.0)).pass);
}

TEST_CASE("pair files round trip")
{
    GridPtr g = make_grid(2.2, 28);
    PotentialPair P = generate_pair(g, 0.4, 11, 0.5, 0.5);
    auto dir = fs::temp_directory_path() / "mstab_test_pair";
    fs::remove_all(dir);
    save_pair((dir / "p.json").string(), P);
    CHECK(fs::exists(dir / "p_A.cgof"));
    PotentialPair Q = load_pair((dir / "p.json").string(), g);
    CHECK(Q.grid() == g);
    CHECK(l2_norm(Q.A - P.A) == 0.0);
    CHECK(l2_norm(Q.q - P.q) == 0.0);
    CHECK(Q.eps == P.eps);
    CHECK(std::isinf(Q.r));
    CHECK(fingerprint(Q) == fingerprint(P));

    std::ofstream(dir / "bad.json") << R"({"format": "other"})";
    CHECK_THROWS_WITH_AS(load_pair((dir / "bad.json").string()), doctest::Contains("not a pair file"), Error);
    CHECK_THROWS_AS(load_pair((dir / "missing.json").string()), Error);
}

TEST_CASE("small experiment writes every declared output" * doctest::timeout(600))
{
    auto out = fs::temp_directory_path() / "mstab_test_experiment";
    fs::remove_all(out);
    ExperimentConfig c = tiny_config(out.string());
    ExperimentResult r = run_experiment(c);
    CHECK(r.holdout.points.size() == 2);
    CHECK(r.calibration.points.size() == 2);
    for (const char* f : {"manifest.json", "config.json", "report.json", "sweep.csv", "calibration.csv",
                          "fields/A1.cgof", "fields/dq.cgof", "cauchy/base.json", "pairs/base.json"})
        CHECK_MESSAGE(fs::exists(out / f), f);
    json m = json::parse(read_text(out / "manifest.json"));
    CHECK(m["status"] == "ok");
    CHECK(m["stages"].size() == 4);
    json rep = json::parse(read_text(out / "report.json"));
    CHECK(rep["columns"].size() == 13);
    CHECK(rep["holdout"]["points"].size() == 2);
    std::string csv = read_text(out / "sweep.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
    for (const auto& p : r.holdout.points) {
        CHECK(p.row.dist >= 0.0);
        CHECK(p.row.h_used > 0.0);
        CHECK(p.row.h_used <= 1.0);
    }
}
