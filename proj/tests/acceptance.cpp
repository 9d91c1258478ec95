// Acceptance checks. Each criterion prints one PASS/FAIL line with the measured values.

#include "mstab/cauchy.hpp"
#include "mstab/experiment.hpp"
#include "mstab/mollify.hpp"
#include "mstab/parallel.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>

using namespace mstab;

namespace {

struct Outcome {
    bool pass = false;
    std::string measured;
};

std::string fmt(const char* f, double v)
{
    char b[64];
    std::snprintf(b, sizeof b, f, v);
    return b;
}

std::string list(const std::vector<double>& v, const char* f = "%.3g")
{
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + fmt(f, v[i]);
    return s + "]";
}

/// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y)
{
    const double n = double(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double a = std::log(x[i]), b = std::log(y[i]);
        sx += a, sy += b, sxx += a * a, sxy += a * b;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

Field random_field(const GridPtr& g, int degree, std::uint64_t seed)
{
    Field u(g, degree);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    for (int c = 0; c < u.ncomp(); ++c)
        for (auto& v : u.comp(c)) v = cplx(nd(rng), nd(rng));
    return u;
}

double vec3norm(const Vec3& v) { return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]); }

// 1. spectral calculus
Outcome spectral_calculus()
{
    auto g = make_grid(1.0, 32);
    double pars = 0, dd = 0, adj = 0;
    for (int s = 0; s < 20; ++s) {
        int deg = s % 3;
        Field u = random_field(g, deg, 1000 + s);
        double n2 = std::pow(l2_norm(u), 2);
        pars = std::max(pars, std::abs(n2 - parseval_sum(u)) / n2);
        Field f = random_field(g, 0, 2000 + s);
        dd = std::max(dd, l2_norm(d_form(d_form(f))) / l2_norm(d_form(f)));
        int ad = s % 2;
        Field v = random_field(g, ad, 3000 + s);
        Field F = random_field(g, ad + 1, 4000 + s);
        cplx lhs = inner_product(d_form(v), F), rhs = inner_product(v, delta_form(F));
        adj = std::max(adj, std::abs(lhs - rhs) / std::abs(lhs));
    }
    Outcome o;
    o.pass = pars <= 1e-12 && dd <= 1e-12 && adj <= 1e-12;
    o.measured = "parseval=" + fmt("%.2e", pars) + " dd=" + fmt("%.2e", dd) + " adjoint=" + fmt("%.2e", adj);
    return o;
}

// 2. Littlewood-Paley partition and norm equivalence
Outcome littlewood_paley()
{
    auto g = make_grid(1.0, 32);
    const int jm = lp_max_block(*g);
    const double band = std::exp2(jm);
    double part = 0;
    for (std::size_t i = 0; i < g->size(); ++i) {
        double t = vec3norm(g->frequency(i));
        if (t > band) continue;
        double s = 0;
        for (int j = 0; j <= jm; ++j) s += lp_multiplier(j, t);
        part = std::max(part, std::abs(s - 1));
    }
    bool within = true;
    std::string detail;
    for (double s : {-1.0, 0.0, 0.5}) {
        auto [lo, hi] = lp_equivalence_constants(*g, s);
        double rmin = 1e300, rmax = 0;
        for (int k = 0; k < 10; ++k) {
            Field u = random_field(g, 0, 500 + k);
            auto F = fft(*g, u.comp(0));
            for (std::size_t i = 0; i < F.size(); ++i)
                if (vec3norm(g->frequency(i)) > band) F[i] = 0.0;
            u.comp(0) = ifft(*g, F);
            double r = besov_norm(u, {s, 2.0}).value / sobolev_norm(u, s);
            rmin = std::min(rmin, r);
            rmax = std::max(rmax, r);
        }
        within = within && rmin >= lo * (1 - 1e-12) && rmax <= hi * (1 + 1e-12);
        detail += " s=" + fmt("%g", s) + ":ratio[" + fmt("%.4f", rmin) + "," + fmt("%.4f", rmax) + "]in[" +
                  fmt("%.4f", lo) + "," + fmt("%.4f", hi) + "]";
    }
    Outcome o;
    o.pass = part <= 1e-12 && within;
    o.measured = "partition=" + fmt("%.2e", part) + detail;
    return o;
}

// 3. mollifier rates
Outcome mollifier_rates()
{
    auto g = make_grid(1.0, 128);
    const double eps_list[5] = {0.3, 0.5, 0.7, 0.3, 0.5};
    std::vector<double> taus;
    for (int k = 1; k <= 5; ++k) taus.push_back(std::exp2(-k));
    bool pass = true;
    std::string detail;
    for (int p = 0; p < 5; ++p) {
        const double eps = eps_list[p];
        VectorField A = generate_regular(g, 1, eps, 70 + p, 0.5, 0.45);
        double semi = diff_seminorm(A, eps, kRInf).value;
        std::vector<double> flat;
        double worst = 0;
        for (double tau : taus) {
            double f = l2_norm(split(A, tau).flat);
            flat.push_back(f);
            worst = std::max(worst, f / std::pow(tau, eps) / semi);
        }
        double slope = loglog_slope(taus, flat);
        bool ok = worst <= 1.2 && std::abs(slope - eps) <= 0.1;
        pass = pass && ok;
        detail += " eps=" + fmt("%.1f", eps) + ":ratio=" + fmt("%.3f", worst) + ",slope=" + fmt("%.3f", slope);
    }
    return {pass, detail.substr(1)};
}

// 4. CGO invariants
Outcome cgo_invariants()
{
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> U(-4.0, 4.0), H(0.01, 1.0);
    double inv = 0;
    for (int n = 0; n < 100; ++n) {
        Vec3 xi{U(rng), U(rng), U(rng)};
        double h = H(rng) * std::min(1.0, 2.0 / vec3norm(xi));
        Zetas z = make_zetas(xi, h, n % 2 == 1);
        inv = std::max({inv, std::abs(cdot(z.zeta1, z.zeta1)), std::abs(cdot(z.zeta2, z.zeta2))});
        for (int k = 0; k < 3; ++k)
            inv = std::max(inv, std::abs((z.zeta1[k] + std::conj(z.zeta2[k])) / h - cplx(0, xi[k])));
    }
    auto g = make_grid(2.2, 32);
    PotentialPair P = generate_pair(g, 0.5, 1, 0.5, 0.5);
    double transport = 0;
    bool conv = true;
    for (Vec3 xi : {Vec3{2, 0, 0}, Vec3{1, 2, 0}, Vec3{1, -1, 1.5}})
        for (int which : {1, 2}) {
            CGOSolution s = build_cgo(P, xi, 0.25, which);
            transport = std::max(transport, s.transport_residual);
            conv = conv && s.converged;
        }
    PotentialPair F = make_pair(vector_field(g), scalar_field(g), 1.0, 1.0, 0.5, kRInf);
    CGOSolution free = build_cgo(F, {2, 1, 0}, 0.25, 1);
    double rfree = free.r.max_abs();
    Outcome o;
    o.pass = inv <= 1e-12 && transport <= 1e-8 && conv && rfree == 0.0;
    o.measured = "zeta=" + fmt("%.2e", inv) + " transport=" + fmt("%.2e", transport) +
                 " converged=" + (conv ? "yes" : "no") + " free_r=" + fmt("%.1e", rfree);
    return o;
}

// 5. remainder decay
Outcome remainder_decay()
{
    auto g = make_grid(2.2, 48);
    const double eps = 0.5;
    PotentialPair P = generate_pair(g, eps, 1, 0.5, 0.5);
    std::vector<double> hs, rs;
    bool conv = true;
    for (int k = 2; k <= 6; ++k) {
        double h = std::exp2(-k);
        CGOSolution s = build_cgo(P, {2.0, 1.0, 0.0}, h, 1);
        conv = conv && s.converged;
        hs.push_back(h);
        rs.push_back(s.remainder_H1scl);
    }
    double slope = loglog_slope(hs, rs);
    double target = eps / (eps + 2);
    Outcome o;
    o.pass = conv && std::abs(slope - target) <= 0.25 * target;
    o.measured = "slope=" + fmt("%.4f", slope) + " target=" + fmt("%.2f", target) + "+-25% r=" + list(rs);
    return o;
}

// 6. forward solver
Outcome forward_solver()
{
    const cplx I(0, 1);
    std::vector<double> errs, dxs;
    for (int N : {16, 32, 64}) {
        auto g = make_grid(1.0, N);
        CubeDomain D = make_cube_domain(g, 1.0);
        VectorField A = vector_field(g);
        ScalarField q = scalar_field(g);
        for (std::size_t p = 0; p < g->size(); ++p) {
            Vec3 x = g->point(p);
            A(0, p) = std::sin(x[1]);
            A(1, p) = x[0] * x[2];
            A(2, p) = 0.5 * x[0];
            q(0, p) = 1 + x[0] * x[0];
        }
        CubeOperator op(D, A, q);
        // u = sin(x+0.3) cos(y) exp(z/2); L u = -Lap u - 2i A.grad u - i div(A) u + (A.A + q) u, div A = 0
        DirichletProblem pr;
        pr.boundary.resize(D.size());
        pr.source.resize(D.size());
        for (std::size_t l = 0; l < D.size(); ++l) {
            Vec3 x = D.point(l);
            double s = std::sin(x[0] + 0.3), c = std::cos(x[0] + 0.3), cy = std::cos(x[1]), sy = std::sin(x[1]);
            double e = std::exp(0.5 * x[2]);
            double u = s * cy * e, ux = c * cy * e, uy = -s * sy * e, uz = 0.5 * u;
            double lap = -1.75 * u;
            double a0 = std::sin(x[1]), a1 = x[0] * x[2], a2 = 0.5 * x[0];
            pr.boundary[l] = u;
            pr.source[l] = -lap - 2.0 * I * (a0 * ux + a1 * uy + a2 * uz) + (a0 * a0 + a1 * a1 + a2 * a2 + q(0, D.box_index(l))) * u;
        }
        DirichletSolution s = solve_dirichlet(op, pr);
        double e = 0;
        for (std::size_t l = 0; l < D.size(); ++l) e = std::max(e, std::abs(s.u[l] - pr.boundary[l]));
        errs.push_back(e);
        dxs.push_back(g->spacing());
    }
    double order = loglog_slope(dxs, errs);

    auto g = make_grid(1.0, 32);
    CubeDomain D = make_cube_domain(g, 1.0);
    PotentialPair P = generate_pair(g, 0.5, 8, 0.5, 0.5);
    std::mt19937_64 rng(6);
    std::normal_distribution<double> nd;
    std::vector<cplx> u(D.size()), v(D.size());
    for (auto& z : u) z = nd(rng);
    for (auto& z : v) z = nd(rng);
    CubeOperator op0(D, vector_field(g), P.q);
    double sym0 = std::abs(op0.bilinear(u, v) - op0.bilinear(v, u)) / std::abs(op0.bilinear(u, v));
    CubeOperator op(D, P);
    double symA = std::abs(op.bilinear(u, v) - op.negated_magnetic().bilinear(v, u)) / std::abs(op.bilinear(u, v));
    Outcome o;
    o.pass = std::abs(order - 2.0) <= 0.2 && sym0 <= 1e-9 && symA <= 1e-9;
    o.measured = "order=" + fmt("%.3f", order) + " err=" + list(errs) + " sym(A=0)=" + fmt("%.1e", sym0) +
                 " sym(A,-A)=" + fmt("%.1e", symA);
    return o;
}

// 7. dist pseudo-metric
Outcome dist_checks()
{
    std::vector<double> gauge;
    double self = 0;
    bool symmetric = true;
    for (int N : {32, 64}) {
        auto g = make_grid(1.0, N);
        CubeDomain D = make_cube_domain(g, 1.0);
        PotentialPair P = generate_pair(g, 0.5, 3, 0.5, 0.5);
        if (N == 32) {
            PotentialPair P2 = generate_pair(g, 0.5, 4, 0.5, 0.5);
            CauchyData C1 = assemble_cauchy(P, D, 50), C2 = assemble_cauchy(P2, D, 50);
            self = dist_cauchy(C1, C1).value;
            DistResult a = dist_cauchy(C1, C2), b = dist_cauchy(C2, C1);
            symmetric = a.value == b.value;
        }
        // max |grad phi| equals the amplitude of A
        ScalarField phi = from_function(g, [](const Vec3& x) {
            double v = 0.125;
            for (int i = 0; i < 3; ++i) v *= std::abs(x[i]) < 0.5 ? std::pow(std::cos(kPi * x[i]), 4) : 0.0;
            return cplx(v);
        });
        gauge.push_back(gauge_invariance_check(P, phi, D, 50).dist);
    }
    double ratio = gauge[1] / gauge[0];
    Outcome o;
    o.pass = self <= 1e-10 && symmetric && gauge[0] <= 5e-3 && ratio <= 0.5;
    o.measured = "dist(C,C)=" + fmt("%.1e", self) + " symmetric=" + (symmetric ? "exact" : "no") +
                 " gauge N32=" + fmt("%.3e", gauge[0]) + " N64=" + fmt("%.3e", gauge[1]) + " ratio=" + fmt("%.3f", ratio);
    return o;
}

// 8. Hodge decomposition
Outcome hodge_checks()
{
    auto g = make_grid(2.0, 48);
    VectorField u0 = d_form(from_function(g, [](const Vec3& x) {
        return cplx(std::exp(-10.0 * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2])) * (1 + x[0]));
    }));
    double res = decompose_ball(u0).residual;
    double oracle_dev = 0;
    std::vector<double> ratios;
    for (int s = 0; s < 10; ++s) {
        PotentialPair P1 = generate_pair(g, 0.5, 100 + s, 0.5, 0.5);
        PotentialPair P2 = generate_pair(g, 0.5, 200 + s, 0.5, 0.5);
        VectorField u = P1.A - P2.A;
        HodgeDecomposition H = decompose_ball(u);
        HelmholtzOracle O = helmholtz_oracle(u);
        res = std::max(res, H.residual);
        oracle_dev = std::max(oracle_dev, std::abs(H.coexact_L2 / O.divfree_spectral_norm - 1));
        ratios.push_back(H.coexact_L2 / H.du_Hm1);
    }
    double mean = 0;
    for (double v : ratios) mean += v / ratios.size();
    double spread = 0;
    for (double v : ratios) spread = std::max(spread, std::abs(v / mean - 1));
    Outcome o;
    o.pass = res <= 1e-6 && oracle_dev <= 0.05 && spread <= 0.25;
    o.measured = "residual=" + fmt("%.1e", res) + " oracle_dev=" + fmt("%.4f", oracle_dev) +
                 " coexact_ratio mean=" + fmt("%.4f", mean) + " spread=" + fmt("%.4f", spread);
    return o;
}

// 9. extraction correctness
Outcome extraction()
{
    auto g = make_grid(2.2, 48);
    const double eps = 0.5, target = eps / (eps + 2);
    PotentialPair P1 = generate_pair(g, eps, 11, 0.5, 0.5);
    ScalarField win = cube_window(g, 0.5);
    const double u = g->freq_unit();
    const Vec3 xi{2 * u, u, 0};
    ScalarField mode = from_function(g, [&](const Vec3& x) { return cplx(std::cos(2 * u * x[0] + 0.3)); });

    PotentialPair PA = P1, PQ = P1, PG = P1;
    for (std::size_t i = 0; i < g->size(); ++i) {
        PA.A(1, i) += 0.3 * win(0, i) * mode(0, i);
        PQ.q(0, i) += 0.3 * win(0, i) * mode(0, i);
    }
    // gauge case: A2 = A1 + grad rho inside Omega, q differs by one mode
    ScalarField rho = from_function(g, [](const Vec3& x) {
        return cplx(0.4 * std::exp(-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / (2 * 0.12 * 0.12)));
    });
    for (std::size_t i = 0; i < g->size(); ++i) rho(0, i) *= win(0, i);
    VectorField grho = d_form(rho);
    for (std::size_t i = 0; i < g->size(); ++i) {
        Vec3 x = g->point(i);
        bool in = std::abs(x[0]) <= 0.5 && std::abs(x[1]) <= 0.5 && std::abs(x[2]) <= 0.5;
        for (int a = 0; a < 3; ++a) PG.A(a, i) += in ? grho(a, i).real() : 0.0;
        PG.q(0, i) += 0.3 * win(0, i) * mode(0, i);
    }
    BallPair balls{1.0, 1.6};
    HodgeDecomposition H = decompose_ball(P1.A - PG.A, balls);
    GaugeData G = gauge_phi(H, default_chi(g, balls));

    const std::vector<double> hs{0.4, 0.2, 0.1, 0.05};
    std::vector<double> eA, eQ, eG;
    for (double h : hs) {
        eA.push_back(extract_dA_hat(P1, PA, xi, h).error);
        eQ.push_back(extract_q_hat(P1, PQ, xi, h, nullptr).error);
        eG.push_back(extract_q_hat(P1, PG, xi, h, &G).error);
    }
    double sA = loglog_slope(hs, eA), sQ = loglog_slope(hs, eQ), sG = loglog_slope(hs, eG);
    auto ok = [&](double s) { return std::abs(s - target) <= 0.3 * target; };
    Outcome o;
    o.pass = ok(sA) && ok(sQ) && ok(sG);
    o.measured = "target=" + fmt("%.2f", target) + "+-30% slope dA=" + fmt("%.3f", sA) + " q=" + fmt("%.3f", sQ) +
                 " q_gauge=" + fmt("%.3f", sG) + " err dA=" + list(eA) + " q=" + list(eQ) + " q_gauge=" + list(eG) +
                 " coexact_share=" + fmt("%.1e", H.coexact_L2 / H.u_L2);
    return o;
}

// 10. end-to-end sweep
Outcome sweep(const std::string& out_dir)
{
    ExperimentConfig c;
    c.N = 48;
    c.out_dir = out_dir;
    ExperimentResult r = run_experiment(c);
    std::string detail = "monotone=" + std::string(r.dist_monotone ? "yes" : "no") +
                         " bounds_hold=" + (r.bounds_hold ? "yes" : "no");
    for (const auto& p : r.holdout.points) {
        const SweepRow& w = p.row;
        detail += " | t=" + fmt("%g", w.t) + " dist=" + fmt("%.2e", w.dist) + " dA " + fmt("%.2e", w.dA_Hm1_direct) +
                  "/" + fmt("%.2e", w.dA_Hm1_bound) + " " + fmt("%.2e", w.dA_Besov_direct) + "/" +
                  fmt("%.2e", w.dA_Besov_bound) + " q " + fmt("%.2e", w.q_Hlambda_direct) + "/" +
                  fmt("%.2e", w.q_Hlambda_bound) + " " + fmt("%.2e", w.q_Besov0_direct) + "/" +
                  fmt("%.2e", w.q_Besov0_bound);
    }
    return {r.dist_monotone && r.bounds_hold, detail};
}

// 11. integral identity bridge
Outcome bridge()
{
    auto g = make_grid(1.0, 32);
    CubeDomain D = make_cube_domain(g, 1.0);
    PotentialPair P1 = generate_pair(g, 0.5, 3, 0.5, 0.5);
    PotentialPair P2 = generate_pair(g, 0.5, 4, 0.5, 0.5);
    CauchyData C1 = assemble_cauchy(P1, D, 50), C2 = assemble_cauchy(P2, D, 50);
    double d = dist_cauchy(C1, C2).value;
    double gap = 0, ratio = 0;
    for (int s = 0; s < 10; ++s) {
        BridgeSample b = bridge_sample(P1, P2, C1, d, 100 + s);
        gap = std::max(gap, b.identity_gap);
        ratio = std::max(ratio, b.ratio);
    }
    Outcome o;
    o.pass = gap <= 1e-6 && ratio <= 1.3;
    o.measured = "dist=" + fmt("%.4e", d) + " gap=" + fmt("%.2e", gap) + " |volume|/bound max=" + fmt("%.4f", ratio);
    return o;
}

struct Criterion {
    int id;
    const char* name;
    double limit_s;
    std::function<Outcome()> run;
};

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"acceptance checks"};
    int which = 0, threads = 0;
    std::string out_dir = "acceptance_sweep";
    app.add_option("--criterion", which, "criterion number, 0 for all")->check(CLI::Range(0, 11));
    app.add_option("--threads", threads, "worker threads, 0 for all cores");
    app.add_option("--out-dir", out_dir, "output directory of the sweep");
    CLI11_PARSE(app, argc, argv);
    set_threads(threads);
    std::setvbuf(stdout, nullptr, _IOLBF, 0);

    const std::vector<Criterion> all{
        {1, "spectral calculus", 10, spectral_calculus},
        {2, "Littlewood-Paley", 30, littlewood_paley},
        {3, "mollifier rates", 120, mollifier_rates},
        {4, "CGO invariants", 60, cgo_invariants},
        {5, "remainder decay", 900, remainder_decay},
        {6, "forward solver", 300, forward_solver},
        {7, "dist pseudo-metric", 600, dist_checks},
        {8, "Hodge decomposition", 600, hodge_checks},
        {9, "extraction correctness", 1800, extraction},
        {10, "stability sweep", 7200, [&] { return sweep(out_dir); }},
        {11, "integral identity bridge", 600, bridge},
    };
    int failed = 0;
    for (const auto& c : all) {
        if (which != 0 && c.id != which) continue;
        auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        double el = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        bool pass = o.pass && el < c.limit_s;
        failed += !pass;
        std::printf("criterion %2d %-26s %s  %s  time=%.1fs limit=%.0fs\n", c.id, c.name, pass ? "PASS" : "FAIL",
                    o.measured.c_str(), el, c.limit_s);
    }
    return failed == 0 ? 0 : 1;
}
