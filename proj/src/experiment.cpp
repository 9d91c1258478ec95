#include "mstab/experiment.hpp"

#include "mstab/field_io.hpp"
#include "mstab/parallel.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>

namespace mstab {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json r_to_json(double r)
{
    if (std::isinf(r)) return "inf";
    return r;
}

double r_from_json(const json& j)
{
    if (j.is_string()) {
        if (j.get<std::string>() == "inf") return kRInf;
        throw Error("config: r must be 1, 2 or \"inf\"");
    }
    return j.get<double>();
}

json cplx_json(cplx z) { return json::array({z.real(), z.imag()}); }

json cvec_json(const std::vector<cplx>& v)
{
    json a = json::array();
    for (auto z : v) a.push_back(cplx_json(z));
    return a;
}

std::string fmt(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9e", v);
    return buf;
}

void write_text(const fs::path& p, const std::string& s)
{
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p);
    if (!out) throw Error("cannot write " + p.string());
    out << s;
}

} // namespace

void ExperimentConfig::validate() const
{
    auto fail = [](const std::string& m) { throw Error("config: " + m); };
    if (!(L > 0)) fail("L must be positive");
    if (N < 8 || N > 256 || N % 2) fail("N must be even and within 8..256");
    if (!(omega_side > 0)) fail("omega_side must be positive");
    if (!(std::sqrt(3.0) * omega_side / 2 < balls.inner)) fail("the closed cube must lie inside B'");
    if (!(balls.inner < balls.outer)) fail("B' must lie inside B");
    if (!(balls.outer + 2 * (2 * L / N) < L) || !(balls.outer + 0.1 < L)) fail("B must lie well inside the box");
    if (!(0.25 * (balls.outer - balls.inner) > std::sqrt(3.0) / 2 * (2 * L / N)))
        fail("grid too coarse for the shell between B' and B, increase N");
    if (!(eps > 0 && eps < 1)) fail("eps must lie in (0,1)");
    if (!(r == 1 || r == 2 || r == kRInf)) fail("r must be 1, 2 or inf");
    if (M < 0) fail("M must be nonnegative");
    if (A_amp < 0 || q_amp < 0 || dA_amp < 0 || dq_amp < 0) fail("amplitudes must be nonnegative");
    if (t_values.empty()) fail("t_values must not be empty");
    for (double t : t_values)
        if (!(t > 0)) fail("t values must be positive");
    if (!h_values.empty() && h_values.size() != t_values.size()) fail("h_values must match t_values");
    for (double h : h_values)
        if (!(h > 0 && h <= 1)) fail("h values must lie in (0,1]");
    if (!(lambda > 0 && lambda <= 1)) fail("lambda must lie in (0,1]");
    if (!(theta > 0 && theta < 2.0 / 3.0)) fail("theta must lie in (0, 2/n)");
    if (besov_delta < 0) fail("besov_delta must be nonnegative");
    if (c_prime < 0 || !(c_tilde > 0)) fail("c_prime must be >= 0 and c_tilde > 0");
    if (K < 1) fail("K must be positive");
    if (dist.starts < 1 || dist.ascent_steps < 0 || dist.polish_steps < 0) fail("dist options out of range");
}

ExperimentConfig config_from_json(const json& j)
{
    ExperimentConfig c;
    auto get = [&](const char* k, auto& v) {
        if (j.contains(k)) v = j.at(k).get<std::decay_t<decltype(v)>>();
    };
    get("L", c.L);
    get("N", c.N);
    get("omega_side", c.omega_side);
    if (j.contains("balls")) {
        c.balls.inner = j["balls"].value("inner", c.balls.inner);
        c.balls.outer = j["balls"].value("outer", c.balls.outer);
    }
    get("M", c.M);
    get("eps", c.eps);
    if (j.contains("r")) c.r = r_from_json(j["r"]);
    get("A_amp", c.A_amp);
    get("q_amp", c.q_amp);
    get("dA_amp", c.dA_amp);
    get("dq_amp", c.dq_amp);
    get("t_values", c.t_values);
    get("h_values", c.h_values);
    get("lambda", c.lambda);
    get("theta", c.theta);
    get("besov_delta", c.besov_delta);
    get("c_prime", c.c_prime);
    get("c_tilde", c.c_tilde);
    get("K", c.K);
    get("seed", c.seed);
    get("holdout_seed", c.holdout_seed);
    if (j.contains("mode")) {
        auto m = j["mode"].get<std::string>();
        if (m == "interior")
            c.mode = ExtractMode::Interior;
        else if (m == "boundary")
            c.mode = ExtractMode::Boundary;
        else
            throw Error("config: mode must be interior or boundary");
    }
    if (j.contains("dist")) {
        c.dist.starts = j["dist"].value("starts", c.dist.starts);
        c.dist.ascent_steps = j["dist"].value("ascent_steps", c.dist.ascent_steps);
        c.dist.polish_steps = j["dist"].value("polish_steps", c.dist.polish_steps);
    }
    get("threads", c.threads);
    get("out_dir", c.out_dir);
    return c;
}

json config_to_json(const ExperimentConfig& c)
{
    return {{"L", c.L},
            {"N", c.N},
            {"omega_side", c.omega_side},
            {"balls", {{"inner", c.balls.inner}, {"outer", c.balls.outer}}},
            {"M", c.M},
            {"eps", c.eps},
            {"r", r_to_json(c.r)},
            {"A_amp", c.A_amp},
            {"q_amp", c.q_amp},
            {"dA_amp", c.dA_amp},
            {"dq_amp", c.dq_amp},
            {"t_values", c.t_values},
            {"h_values", c.h_values},
            {"lambda", c.lambda},
            {"theta", c.theta},
            {"besov_delta", c.besov_delta},
            {"c_prime", c.c_prime},
            {"c_tilde", c.c_tilde},
            {"K", c.K},
            {"seed", c.seed},
            {"holdout_seed", c.holdout_seed},
            {"mode", c.mode == ExtractMode::Interior ? "interior" : "boundary"},
            {"dist",
             {{"starts", c.dist.starts}, {"ascent_steps", c.dist.ascent_steps}, {"polish_steps", c.dist.polish_steps}}},
            {"threads", c.threads},
            {"out_dir", c.out_dir}};
}

void save_pair(const std::string& path, const PotentialPair& P)
{
    fs::path head(path);
    std::string stem = head.stem().string();
    fs::path dir = head.parent_path();
    if (!dir.empty()) fs::create_directories(dir);
    save_field((dir / (stem + "_A.cgof")).string(), P.A);
    save_field((dir / (stem + "_q.cgof")).string(), P.q);
    json j = {{"format", "mstab-pair"},
              {"A", stem + "_A.cgof"},
              {"q", stem + "_q.cgof"},
              {"omega_side", P.omega_side},
              {"M", P.M},
              {"eps", P.eps},
              {"r", r_to_json(P.r)}};
    write_text(head, j.dump(2) + "\n");
}

PotentialPair load_pair(const std::string& path, const GridPtr& grid)
{
    std::ifstream in(path);
    if (!in) throw Error("load_pair: cannot open " + path);
    json j;
    try {
        in >> j;
        if (j.value("format", "") != "mstab-pair") throw Error("load_pair: " + path + " is not a pair file");
        fs::path dir = fs::path(path).parent_path();
        VectorField A = load_field((dir / j.at("A").get<std::string>()).string(), grid);
        ScalarField q = load_field((dir / j.at("q").get<std::string>()).string(), A.grid());
        if (A.degree() != 1 || q.degree() != 0) throw Error("load_pair: A must be a 1-form and q a scalar");
        return make_pair(std::move(A), std::move(q), j.at("omega_side").get<double>(), j.at("M").get<double>(),
                         j.at("eps").get<double>(), r_from_json(j.at("r")));
    } catch (const json::exception& e) {
        throw Error("load_pair: " + std::string(e.what()));
    }
}

ExperimentConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw Error("load_config: cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Error("load_config: " + std::string(e.what()));
    }
    ExperimentConfig c = config_from_json(j);
    c.validate();
    return c;
}

PotentialPair Family::at(double t) const
{
    return make_pair(base.A + cplx(t) * dA, base.q + cplx(t) * dq, base.omega_side, base.M, base.eps, base.r);
}

Family make_family(const GridPtr& g, const ExperimentConfig& c, std::uint64_t seed)
{
    Family f;
    f.base = generate_pair(g, c.eps, seed, c.A_amp, c.q_amp, c.omega_side, c.r);
    const double half = c.omega_side / 2;
    f.dA = c.dA_amp > 0 ? generate_regular(g, 1, c.eps, seed + 104729, c.dA_amp, half) : vector_field(g);
    f.dq = c.dq_amp > 0 ? generate_regular(g, 0, c.eps, seed + 130363, c.dq_amp, half) : scalar_field(g);
    double M = c.M;
    if (M <= 0) {
        double tmax = *std::max_element(c.t_values.begin(), c.t_values.end());
        PotentialPair P = f.at(tmax);
        M = std::max(f.base.M, 1.1 * admissibility_check(P).total);
    }
    f.base.M = M;
    return f;
}

std::vector<std::string> sweep_columns()
{
    return {"t",
            "dist",
            "dA_Hm1_direct",
            "dA_Hm1_bound",
            "dA_Besov_direct",
            "dA_Besov_bound",
            "q_Hlambda_direct",
            "q_Hlambda_bound",
            "q_Besov0_direct",
            "q_Besov0_bound",
            "h_used",
            "rho_used",
            "k_used"};
}

std::string sweep_csv(const std::vector<SweepRow>& rows)
{
    std::string s;
    auto cols = sweep_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) s += (i ? "," : "") + cols[i];
    s += "\n";
    for (const auto& r : rows) {
        for (double v : {r.t, r.dist, r.dA_Hm1_direct, r.dA_Hm1_bound, r.dA_Besov_direct, r.dA_Besov_bound,
                         r.q_Hlambda_direct, r.q_Hlambda_bound, r.q_Besov0_direct, r.q_Besov0_bound, r.h_used,
                         r.rho_used})
            s += fmt(v) + ",";
        s += std::to_string(r.k_used) + "\n";
    }
    return s;
}

namespace {

StabilityInputs make_inputs(const ExperimentConfig& c, const FittedConstants& fc, double dist, double M)
{
    StabilityInputs in;
    in.dist = dist;
    in.eps = c.eps;
    in.r = c.r;
    in.M = M;
    in.schedule.lambda = c.lambda;
    in.schedule.theta = c.theta;
    in.schedule.besov_delta = c.besov_delta;
    in.schedule.c_prime = fc.c_prime;
    in.schedule.c_tilde = c.c_tilde;
    in.dA_model = fc.dA_model;
    in.q_model = fc.q_model;
    in.extract.mode = c.mode;
    in.extract.balls = c.balls;
    return in;
}

void fill_row(SweepPoint& p)
{
    SweepRow& r = p.row;
    r.dist = p.dist.value;
    r.dA_Hm1_direct = p.dA.direct_sobolev;
    r.dA_Hm1_bound = p.dA.bound_sobolev;
    r.dA_Besov_direct = p.dA.direct_besov;
    r.dA_Besov_bound = p.dA.bound_besov;
    r.q_Hlambda_direct = p.q.direct_sobolev;
    r.q_Hlambda_bound = p.q.bound_sobolev;
    r.q_Besov0_direct = p.q.direct_besov;
    r.q_Besov0_bound = p.q.bound_besov;
    r.h_used = p.dA.h;
    r.rho_used = p.dA.rho;
    r.k_used = p.dA.k;
}

std::vector<SweepRow> rows_of(const FamilyRun& f)
{
    std::vector<SweepRow> rows;
    for (const auto& p : f.points) rows.push_back(p.row);
    return rows;
}

} // namespace

FamilyRun run_family(const ExperimentConfig& c, const GridPtr& g, std::uint64_t seed, const FittedConstants& fc,
                     const std::string& cauchy_dir)
{
    FamilyRun run;
    run.seed = seed;
    Family fam = make_family(g, c, seed);
    run.M = fam.base.M;
    CubeDomain D = make_cube_domain(g, c.omega_side);
    CauchyData C1 = assemble_cauchy(fam.base, D, c.K);
    if (!cauchy_dir.empty()) save_cauchy((fs::path(cauchy_dir) / "base.json").string(), C1);
    for (std::size_t i = 0; i < c.t_values.size(); ++i) {
        SweepPoint p;
        p.row.t = c.t_values[i];
        PotentialPair P2 = fam.at(p.row.t);
        CauchyData C2 = assemble_cauchy(P2, D, c.K);
        if (!cauchy_dir.empty()) save_cauchy((fs::path(cauchy_dir) / ("t" + std::to_string(i) + ".json")).string(), C2);
        p.dist = dist_cauchy(C1, C2, c.dist);
        p.inputs = make_inputs(c, fc, p.dist.value, run.M);
        if (!c.h_values.empty()) p.inputs.h_override = c.h_values[i];

        VectorField dAfield = fam.base.A - P2.A;
        std::unique_ptr<GaugeData> G;
        if (dAfield.max_abs() > 0) {
            HodgeDecomposition H = decompose_ball(dAfield, c.balls);
            p.coexact_share = H.u_L2 > 0 ? H.coexact_L2 / H.u_L2 : 0.0;
            G = std::make_unique<GaugeData>(gauge_phi(H, default_chi(g, c.balls)));
        }
        p.dA = assemble_dA_stability(fam.base, P2, p.inputs);
        p.q = assemble_q_stability(fam.base, P2, p.inputs, G.get(), p.dA.bound_sobolev);
        fill_row(p);
        run.points.push_back(std::move(p));
    }
    return run;
}

namespace {

void refit(const ExperimentConfig& c, FamilyRun& cal, const GridPtr& g, FittedConstants& fc)
{
    Family fam = make_family(g, c, cal.seed);
    std::vector<ExtractionRecord> rd, rq;
    for (auto& p : cal.points)
        rd.insert(rd.end(), p.dA.records.begin(), p.dA.records.end());
    fc.dA_model = fit_error_model(rd, c.eps, 1);
    for (auto& p : cal.points) {
        PotentialPair P2 = fam.at(p.row.t);
        p.inputs.dA_model = fc.dA_model;
        apply_dA_bounds(p.dA, fam.base, P2, p.inputs);
        apply_q_bounds(p.q, fam.base, P2, p.inputs, p.dA.bound_sobolev);
        rq.insert(rq.end(), p.q.records.begin(), p.q.records.end());
    }
    fc.q_model = fit_error_model(rq, c.eps, 0);
    for (auto& p : cal.points) {
        PotentialPair P2 = fam.at(p.row.t);
        p.inputs.q_model = fc.q_model;
        apply_q_bounds(p.q, fam.base, P2, p.inputs, p.dA.bound_sobolev);
        fill_row(p);
    }
}

bool monotone_dist(const FamilyRun& f)
{
    std::vector<std::pair<double, double>> td;
    for (const auto& p : f.points) td.push_back({p.row.t, p.row.dist});
    std::sort(td.begin(), td.end());
    for (std::size_t i = 1; i < td.size(); ++i)
        if (td[i].second < td[i - 1].second * (1 - 1e-9)) return false;
    return true;
}

bool bounds_hold(const FamilyRun& f)
{
    for (const auto& p : f.points) {
        const SweepRow& r = p.row;
        if (!(r.dA_Hm1_direct <= r.dA_Hm1_bound && r.dA_Besov_direct <= r.dA_Besov_bound &&
              r.q_Hlambda_direct <= r.q_Hlambda_bound && r.q_Besov0_direct <= r.q_Besov0_bound))
            return false;
    }
    return true;
}

std::string dat_table(const FamilyRun& f)
{
    std::string s = "#";
    for (const auto& c : sweep_columns()) s += " " + c;
    s += "\n";
    for (const auto& p : f.points) {
        const SweepRow& r = p.row;
        for (double v : {r.t, r.dist, r.dA_Hm1_direct, r.dA_Hm1_bound, r.dA_Besov_direct, r.dA_Besov_bound,
                         r.q_Hlambda_direct, r.q_Hlambda_bound, r.q_Besov0_direct, r.q_Besov0_bound, r.h_used,
                         r.rho_used})
            s += fmt(v) + " ";
        s += std::to_string(r.k_used) + "\n";
    }
    return s;
}

std::string dat_records(const std::vector<ExtractionRecord>& recs)
{
    std::string s = "# xi_norm h error value_norm truth_norm\n";
    for (const auto& r : recs) {
        double xn = std::sqrt(r.xi[0] * r.xi[0] + r.xi[1] * r.xi[1] + r.xi[2] * r.xi[2]);
        double vn = 0.0, tn = 0.0;
        for (auto z : r.value) vn += std::norm(z);
        for (auto z : r.truth) tn += std::norm(z);
        s += fmt(xn) + " " + fmt(r.h) + " " + fmt(r.error) + " " + fmt(std::sqrt(vn)) + " " + fmt(std::sqrt(tn)) + "\n";
    }
    return s;
}

} // namespace

json record_json(const ExtractionRecord& r)
{
    return {{"xi", r.xi},
            {"h", r.h},
            {"mode", r.mode == ExtractMode::Interior ? "interior" : "boundary"},
            {"pairings", cvec_json(r.pairings)},
            {"value", cvec_json(r.value)},
            {"truth", cvec_json(r.truth)},
            {"error", r.error},
            {"dist", r.dist},
            {"coupling", r.coupling},
            {"weight_max", r.weight_max},
            {"remainder", r.remainder},
            {"converged", r.converged},
            {"note", r.note}};
}

json section_json(const StabilitySection& s)
{
    json recs = json::array();
    for (const auto& r : s.records) recs.push_back(record_json(r));
    return {{"h", s.h},
            {"rho", s.rho},
            {"tau", s.tau},
            {"k", s.k},
            {"direct_sobolev", s.direct_sobolev},
            {"bound_sobolev", s.bound_sobolev},
            {"direct_besov", s.direct_besov},
            {"bound_besov", std::isfinite(s.bound_besov) ? json(s.bound_besov) : json(nullptr)},
            {"besov_skipped", s.besov_skipped},
            {"half", s.half},
            {"note", s.note},
            {"records", recs}};
}

json report_json(const ExperimentConfig& c, const ExperimentResult& r)
{
    auto fam = [&](const FamilyRun& f) {
        json pts = json::array();
        for (const auto& p : f.points) {
            pts.push_back({{"t", p.row.t},
                           {"dist", p.dist.value},
                           {"dist_low_confidence", p.dist.low_confidence},
                           {"coexact_share", p.coexact_share},
                           {"dA", section_json(p.dA)},
                           {"q", section_json(p.q)}});
        }
        return json{{"seed", f.seed}, {"M", f.M}, {"points", pts}};
    };
    auto model = [](const ErrorModel& m) { return json{{"C", m.C}, {"c", m.c}, {"xi_power", m.xi_power}}; };
    return {{"format", "mstab-report"},
            {"version", 1},
            {"config", config_to_json(c)},
            {"fitted",
             {{"c_prime", r.fitted.c_prime},
              {"h0", r.fitted.h0},
              {"dA_model", model(r.fitted.dA_model)},
              {"q_model", model(r.fitted.q_model)}}},
            {"columns", sweep_columns()},
            {"calibration", fam(r.calibration)},
            {"holdout", fam(r.holdout)},
            {"checks", {{"dist_monotone", r.dist_monotone}, {"bounds_hold", r.bounds_hold}}}};
}

ExperimentResult run_experiment(const ExperimentConfig& c)
{
    c.validate();
    if (c.threads != 0) set_threads(c.threads);
    const fs::path out(c.out_dir);
    fs::create_directories(out);
    ExperimentResult res;
    json& man = res.manifest;
    man = {{"format", "mstab-manifest"}, {"status", "running"}, {"stages", json::array()}};
    auto write_manifest = [&] { write_text(out / "manifest.json", man.dump(2) + "\n"); };
    auto stage = [&](const std::string& name, const std::function<std::vector<std::string>()>& fn) {
        auto t0 = std::chrono::steady_clock::now();
        json s{{"name", name}};
        try {
            s["outputs"] = fn();
            s["status"] = "ok";
        } catch (const std::exception& e) {
            s["status"] = "failed";
            s["error"] = e.what();
        }
        s["seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        man["stages"].push_back(s);
        write_manifest();
        if (s["status"] == "failed") {
            man["status"] = "failed";
            write_manifest();
            throw Error("run_experiment: stage " + name + " failed: " + s["error"].get<std::string>());
        }
    };

    GridPtr g;
    stage("setup", [&] {
        write_text(out / "config.json", config_to_json(c).dump(2) + "\n");
        g = make_grid(c.L, c.N);
        Family f = make_family(g, c, c.holdout_seed);
        fs::create_directories(out / "fields");
        save_field((out / "fields" / "A1.cgof").string(), f.base.A);
        save_field((out / "fields" / "q1.cgof").string(), f.base.q);
        save_field((out / "fields" / "dA.cgof").string(), f.dA);
        save_field((out / "fields" / "dq.cgof").string(), f.dq);
        save_pair((out / "pairs" / "base.json").string(), f.base);
        save_pair((out / "pairs" / "perturbed.json").string(), f.at(1.0));
        return std::vector<std::string>{"config.json",    "fields/A1.cgof",    "fields/q1.cgof",
                                        "fields/dA.cgof", "fields/dq.cgof",    "pairs/base.json",
                                        "pairs/perturbed.json"};
    });

    FittedConstants& fc = res.fitted;
    stage("calibration", [&] {
        Family fam = make_family(g, c, c.seed);
        double tmax = *std::max_element(c.t_values.begin(), c.t_values.end());
        CubeDomain D = make_cube_domain(g, c.omega_side);
        double dmax = dist_cauchy(assemble_cauchy(fam.base, D, c.K), assemble_cauchy(fam.at(tmax), D, c.K), c.dist).value;
        CGOOptions co;
        co.region = Region{Region::Kind::Ball, c.balls.outer};
        fc.h0 = calibrate_h_max(fam.base, {2.0, 0.0, 0.0}, co);
        fc.c_prime = c.c_prime > 0 ? c.c_prime : (dmax > 0 && dmax < 1 ? fc.h0 * std::abs(std::log(dmax)) : fc.h0);
        res.calibration = run_family(c, g, c.seed, fc);
        refit(c, res.calibration, g, fc);
        write_text(out / "calibration.csv", sweep_csv(rows_of(res.calibration)));
        return std::vector<std::string>{"calibration.csv"};
    });

    stage("holdout", [&] {
        fs::create_directories(out / "cauchy");
        res.holdout = run_family(c, g, c.holdout_seed, fc, (out / "cauchy").string());
        res.dist_monotone = monotone_dist(res.holdout);
        res.bounds_hold = bounds_hold(res.holdout);
        write_text(out / "sweep.csv", sweep_csv(rows_of(res.holdout)));
        return std::vector<std::string>{"sweep.csv", "cauchy/base.json"};
    });

    stage("report", [&] {
        write_text(out / "report.json", report_json(c, res).dump(2) + "\n");
        write_text(out / "dat" / "holdout.dat", dat_table(res.holdout));
        write_text(out / "dat" / "calibration.dat", dat_table(res.calibration));
        std::vector<ExtractionRecord> rd, rq;
        for (const auto& p : res.calibration.points) {
            rd.insert(rd.end(), p.dA.records.begin(), p.dA.records.end());
            rq.insert(rq.end(), p.q.records.begin(), p.q.records.end());
        }
        write_text(out / "dat" / "extraction_dA.dat", dat_records(rd));
        write_text(out / "dat" / "extraction_q.dat", dat_records(rq));
        return std::vector<std::string>{"report.json", "dat/holdout.dat", "dat/calibration.dat",
                                        "dat/extraction_dA.dat", "dat/extraction_q.dat"};
    });
    man["status"] = "ok";
    man["checks"] = {{"dist_monotone", res.dist_monotone}, {"bounds_hold", res.bounds_hold}};
    write_manifest();
    return res;
}

} // namespace mstab
