// Command line front end for the stability experiments.

#include "mstab/experiment.hpp"
#include "mstab/field_io.hpp"
#include "mstab/parallel.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

using namespace mstab;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Globals {
    std::string config;
    int threads = 0;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string out_dir;
};

ExperimentConfig resolve(const Globals& g)
{
    ExperimentConfig c = g.config.empty() ? ExperimentConfig{} : load_config(g.config);
    if (g.seed_set) c.seed = g.seed;
    if (!g.out_dir.empty()) c.out_dir = g.out_dir;
    if (g.threads != 0) c.threads = g.threads;
    c.validate();
    if (c.threads != 0) set_threads(c.threads);
    return c;
}

fs::path out_path(const ExperimentConfig& c, const std::string& name)
{
    fs::create_directories(c.out_dir);
    return fs::path(c.out_dir) / name;
}

Vec3 to_vec3(const std::vector<double>& v)
{
    if (v.size() != 3) throw Error("expected three components");
    return {v[0], v[1], v[2]};
}

json cplx_json(cplx z) { return json::array({z.real(), z.imag()}); }

void emit(const json& j) { std::cout << j.dump(2) << "\n"; }

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Stability experiments for the magnetic Schroedinger inverse problem"};
    app.require_subcommand(1);
    app.set_help_flag("--help", "print this help and exit");
    Globals G;
    app.add_option("--config", G.config, "experiment configuration (JSON)")->check(CLI::ExistingFile);
    app.add_option("--threads", G.threads, "worker threads, 0 for all cores");
    app.add_option_function<std::uint64_t>(
        "--seed", [&](const std::uint64_t& s) { G.seed = s, G.seed_set = true; }, "random seed of the base pair");
    app.add_option("--out-dir", G.out_dir, "output directory");

    std::string pair_path, out_file;
    auto* forward = app.add_subcommand("forward", "solve the Dirichlet problem on the cube");
    int fk = 0;
    std::string fboundary;
    forward->add_option("--pair", pair_path, "pair file; default is the configured base pair")->check(CLI::ExistingFile);
    forward->add_option("--boundary", fboundary, "CGOF field whose cube boundary values are the Dirichlet data")
        ->check(CLI::ExistingFile);
    forward->add_option("--index", fk, "trace basis index, used without --boundary")->check(CLI::NonNegativeNumber);
    forward->add_option("--out", out_file, "solution output (CGOF)");

    auto* cgo = app.add_subcommand("cgo", "build one CGO solution");
    std::vector<double> cxi{2.0, 0.0, 0.0};
    double ch = 0.25;
    int which = 1;
    bool reflect = false;
    std::string diag_file;
    cgo->add_option("--xi", cxi, "frequency")->expected(3)->delimiter(',');
    cgo->add_option("--pair", pair_path, "pair file; default is the configured base pair")->check(CLI::ExistingFile);
    cgo->add_option("--out", out_file, "b = a + r output (CGOF)");
    cgo->add_option("--diag", diag_file, "diagnostics output (JSON)");
    cgo->add_option("--h", ch, "semiclassical parameter");
    cgo->add_option("--which", which, "1 for (A,q), 2 for the conjugate pair")->check(CLI::IsMember({1, 2}));
    cgo->add_flag("--reflect", reflect, "use the reflected frame");

    auto* cauchy = app.add_subcommand("cauchy", "assemble and save Cauchy data of the base pair");
    double ct = 0.0;
    int cK = 0;
    cauchy->add_option("--t", ct, "perturbation scale, 0 for the base pair");
    cauchy->add_option("--pair", pair_path, "pair file instead of the configured family")->check(CLI::ExistingFile);
    cauchy->add_option("--K", cK, "trace basis size, default from the configuration")->check(CLI::PositiveNumber);
    cauchy->add_option("--out", out_file, "Cauchy data header (JSON)");

    auto* dist = app.add_subcommand("dist", "distance between two Cauchy data files, or base vs P(t)");
    std::string da, db;
    double dt = 1.0;
    dist->add_option("--a", da, "first Cauchy data file");
    dist->add_option("--b", db, "second Cauchy data file");
    dist->add_option("--t", dt, "perturbation scale when no files are given");

    auto* hodge = app.add_subcommand("hodge-check", "ball Hodge decomposition of A1 - A2 at scale t");
    double ht = 1.0;
    std::string pair_a, pair_b;
    hodge->add_option("--t", ht, "perturbation scale");
    hodge->add_option("--pair-a", pair_a, "first pair file")->check(CLI::ExistingFile);
    hodge->add_option("--pair-b", pair_b, "second pair file")->check(CLI::ExistingFile);
    hodge->add_option("--out", out_file, "report output (JSON)");

    auto* besov = app.add_subcommand("besov-norm", "Besov and Sobolev norms of a field");
    std::string bfield;
    double bs = 0.0, br = 2.0, seps = 0.0;
    besov->add_option("--field", bfield, "CGOF file; default is the base q")->check(CLI::ExistingFile);
    besov->add_option("--s", bs, "smoothness");
    besov->add_option("--r", br, "integrability index, 1, 2 or inf")->transform(CLI::Transformer({{"inf", "1e999"}}));
    besov->add_option("--seminorm-eps", seps, "also report the first-difference seminorm of this order")
        ->check(CLI::Range(0.0, 1.0));

    std::vector<double> xi{2.0, 0.0, 0.0};
    double eh = 0.25, et = 1.0;
    std::string emode = "interior";
    auto* exda = app.add_subcommand("extract-da", "estimate (dA1 - dA2)^(xi)");
    auto* exq = app.add_subcommand("extract-q", "estimate (q1 - q2)^(xi) with the Hodge gauge");
    for (auto* s : {exda, exq}) {
        s->add_option("--xi", xi, "frequency")->expected(3)->delimiter(',');
        s->add_option("--h", eh, "semiclassical parameter");
        s->add_option("--t", et, "perturbation scale");
        s->add_option("--mode", emode, "interior or boundary")->check(CLI::IsMember({"interior", "boundary"}));
    }

    auto* sweep = app.add_subcommand("sweep", "calibrate, sweep the perturbation family and write the report");

    CLI11_PARSE(app, argc, argv);

    try {
        ExperimentConfig c = resolve(G);
        GridPtr g = make_grid(c.L, c.N);
        auto family = [&] { return make_family(g, c, c.seed); };
        auto base_pair = [&] { return pair_path.empty() ? family().base : load_pair(pair_path, g); };
        auto output = [&](const std::string& dflt) { return out_file.empty() ? out_path(c, dflt) : fs::path(out_file); };

        if (*forward) {
            PotentialPair P = base_pair();
            CubeDomain D = make_cube_domain(P.grid(), c.omega_side);
            CubeOperator op(D, P);
            DirichletProblem pr;
            json info;
            if (!fboundary.empty()) {
                pr.boundary = restrict_to_cube(D, load_field(fboundary, P.grid()));
                info["boundary"] = fboundary;
            } else {
                TraceBasis B = make_trace_basis(D, fk + 1);
                if (fk >= int(B.modes.size())) throw Error("forward: basis index out of range");
                pr.boundary = B.traces[fk];
                info["mode"] = B.modes[fk];
            }
            DirichletSolution sol = solve_dirichlet(op, pr);
            auto fp = flux_pairing(op, sol.u, sol.u);
            auto path = output("forward_u.cgof");
            save_field(path.string(), extend_to_box(D, sol.u));
            info.update({{"iterations", sol.iterations},
                         {"rel_residual", sol.rel_residual},
                         {"cond_lower_bound", sol.cond_lower_bound},
                         {"flux_self_pairing", cplx_json(fp.value)},
                         {"h1_norm", h1_norm(D, sol.u)},
                         {"output", path.string()}});
            emit(info);
        } else if (*cgo) {
            PotentialPair P = base_pair();
            CGOOptions o;
            o.reflect = reflect;
            o.region = Region{Region::Kind::Cube, c.omega_side};
            CGOSolution sol = build_cgo(P, to_vec3(cxi), ch, which, o);
            auto path = output("cgo_b.cgof");
            save_field(path.string(), sol.b());
            json d = {{"converged", sol.converged},
                      {"iterations", sol.iterations},
                      {"tau", sol.tau},
                      {"remainder_H1scl", sol.remainder_H1scl},
                      {"w_Hm1scl", sol.w_Hm1scl},
                      {"residual_equation", sol.residual_equation},
                      {"transport_residual", sol.transport_residual},
                      {"weight_max", sol.weight_max},
                      {"note", sol.note},
                      {"output", path.string()}};
            if (!diag_file.empty()) std::ofstream(diag_file) << d.dump(2) << "\n";
            emit(d);
        } else if (*cauchy) {
            PotentialPair P;
            if (!pair_path.empty()) {
                P = load_pair(pair_path, g);
            } else {
                Family f = family();
                P = ct > 0 ? f.at(ct) : f.base;
            }
            CubeDomain D = make_cube_domain(P.grid(), c.omega_side);
            CauchyData C = assemble_cauchy(P, D, cK > 0 ? cK : c.K);
            auto path = output("cauchy.json");
            save_cauchy(path.string(), C);
            json rec = {{"K", C.K()}, {"max_iterations", C.max_iterations}, {"fingerprint", C.fingerprint},
                        {"output", path.string()}};
            if (pair_path.empty()) {
                fs::path pp = path.parent_path() / (path.stem().string() + "_pair.json");
                save_pair(pp.string(), P);
                rec["pair"] = pp.string();
            }
            emit(rec);
        } else if (*dist) {
            CauchyData C1, C2;
            if (!da.empty() || !db.empty()) {
                if (da.empty() || db.empty()) throw Error("dist: give both --a and --b");
                C1 = load_cauchy(da);
                C2 = load_cauchy(db, C1.domain.grid);
            } else {
                Family f = family();
                CubeDomain D = make_cube_domain(g, c.omega_side);
                C1 = assemble_cauchy(f.base, D, c.K);
                C2 = assemble_cauchy(f.at(dt), D, c.K);
            }
            DistResult r = dist_cauchy(C1, C2, c.dist);
            emit({{"dist", r.value}, {"d12", r.d12}, {"d21", r.d21}, {"low_confidence", r.low_confidence},
                  {"evaluations", r.evaluations}});
        } else if (*hodge) {
            VectorField u;
            if (!pair_a.empty() || !pair_b.empty()) {
                if (pair_a.empty() || pair_b.empty()) throw Error("hodge-check: give both --pair-a and --pair-b");
                PotentialPair Pa = load_pair(pair_a, g);
                u = Pa.A - load_pair(pair_b, Pa.grid()).A;
            } else {
                Family f = family();
                u = f.base.A - f.at(ht).A;
            }
            HodgeDecomposition H = decompose_ball(u, c.balls);
            GaugeData gd = gauge_phi(H, default_chi(u.grid(), c.balls));
            HelmholtzOracle o = helmholtz_oracle(u);
            auto ratio = [](double a, double b) { return b > 0 ? a / b : 0.0; };
            json rep = {{"residual", H.residual},
                        {"normal_trace_residual", H.normal_trace_residual},
                        {"u_L2", H.u_L2},
                        {"exact_L2", H.exact_L2},
                        {"coexact_L2", H.coexact_L2},
                        {"oracle_divfree_norm", o.divfree_spectral_norm},
                        {"du_Hm1", H.du_Hm1},
                        {"psi_shell_H1", H.psi_shell_H1},
                        {"active_cells", H.active_cells},
                        {"ratios",
                         {{"coexact_vs_oracle", ratio(H.coexact_L2, o.divfree_spectral_norm)},
                          {"coexact_vs_du_Hm1", ratio(H.coexact_L2, H.du_Hm1)},
                          {"psi_shell_vs_du_Hm1", ratio(H.psi_shell_H1, H.du_Hm1)},
                          {"product_rule", gd.product_rule_ratio}}}};
            if (!out_file.empty()) std::ofstream(out_file) << rep.dump(2) << "\n";
            emit(rep);
        } else if (*besov) {
            Field u = bfield.empty() ? family().base.q : load_field(bfield);
            double r = br > 1e300 ? kRInf : br;
            BesovResult b = besov_norm(u, {bs, r});
            json rec = {{"besov", b.value}, {"j_max", b.j_max}, {"tail_l2", b.tail_l2}, {"blocks", b.block_l2},
                        {"sobolev", sobolev_norm(u, bs)}};
            if (seps > 0) rec["seminorm"] = diff_seminorm(u, seps, r).value;
            std::cout << rec.dump() << "\n";
        } else if (*exda || *exq) {
            Family f = family();
            PotentialPair P2 = f.at(et);
            ExtractOptions o;
            o.mode = emode == "interior" ? ExtractMode::Interior : ExtractMode::Boundary;
            o.balls = c.balls;
            ExtractionRecord r;
            if (*exda) {
                r = extract_dA_hat(f.base, P2, to_vec3(xi), eh, o);
            } else {
                VectorField d = f.base.A - P2.A;
                std::unique_ptr<GaugeData> gd;
                if (d.max_abs() > 0)
                    gd = std::make_unique<GaugeData>(gauge_phi(decompose_ball(d, c.balls), default_chi(g, c.balls)));
                r = extract_q_hat(f.base, P2, to_vec3(xi), eh, gd.get(), o);
            }
            emit(record_json(r));
        } else if (*sweep) {
            ExperimentResult r = run_experiment(c);
            emit({{"out_dir", c.out_dir},
                  {"dist_monotone", r.dist_monotone},
                  {"bounds_hold", r.bounds_hold},
                  {"c_prime", r.fitted.c_prime},
                  {"rows", r.holdout.points.size()}});
        }
    } catch (const std::exception& e) {
        std::cerr << "mstab: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
