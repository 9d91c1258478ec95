#include "mstab/reconstruct.hpp"

#include "mstab/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace mstab {

namespace {

const cplx I(0.0, 1.0);

double norm3(const Vec3& v) { return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]); }

double dot3(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

bool is_real(const Field& u)
{
    double m = u.max_abs(), im = 0.0;
    for (int c = 0; c < u.ncomp(); ++c)
        for (const auto& v : u.comp(c)) im = std::max(im, std::abs(v.imag()));
    return im <= 1e-14 * std::max(m, 1e-300);
}

/**
 * Volume form of the gauge-modified identity evaluated on CGO factors b1, b2.
 * With phi = 0 this is the plain integral of i(A1-A2).(u1 grad v - v grad u1) + (A1^2-A2^2+q1-q2) u1 v.
 */
cplx volume_pairing(const PotentialPair& P1, const PotentialPair& P2, const CGOSolution& s1, const CGOSolution& s2,
                    const ScalarField* phi, const VectorField* gphi)
{
    const Grid& g = *P1.grid();
    const double h = s1.zetas.h;
    ScalarField b1 = s1.b(), b2 = s2.b();
    VectorField gb1 = s1.grad_b(), gb2 = s2.grad_b();
    CVec3 dz;
    for (int a = 0; a < 3; ++a) dz[a] = (std::conj(s2.zeta[a]) - s1.zeta[a]) / h;
    const Vec3 xi = s1.zetas.xi;
    cplx sum = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        cplx gp[3] = {0.0, 0.0, 0.0};
        if (gphi)
            for (int a = 0; a < 3; ++a) gp[a] = (*gphi)(a, i);
        cplx dA[3];
        cplx sq = 0.0, cross = 0.0;
        bool any = P1.q(0, i) != P2.q(0, i);
        for (int a = 0; a < 3; ++a) {
            cplx a2 = P2.A(a, i) + gp[a];
            dA[a] = P1.A(a, i) - a2;
            sq += P1.A(a, i) * P1.A(a, i) - a2 * a2;
            cross += dA[a] * gp[a];
            any = any || dA[a] != 0.0 || gp[a] != 0.0;
        }
        if (!any) continue;
        cplx B = b1(0, i) * std::conj(b2(0, i));
        cplx mag = 0.0;
        for (int a = 0; a < 3; ++a)
            mag += dA[a] * (B * dz[a] + b1(0, i) * std::conj(gb2(a, i)) - std::conj(b2(0, i)) * gb1(a, i));
        cplx term = I * mag + (sq + P1.q(0, i) - P2.q(0, i) - cross) * B;
        if (phi) term *= std::exp(I * (*phi)(0, i));
        sum += std::exp(I * dot3(g.point(i), xi)) * term;
    }
    return sum * g.cell_volume();
}

/// Nodal values of e^{x.zeta/h} b on the cube.
std::vector<cplx> cgo_on_cube(const CubeDomain& D, const CGOSolution& s)
{
    ScalarField b = s.b();
    std::vector<cplx> v(D.size());
    for (std::size_t l = 0; l < D.size(); ++l) {
        Vec3 x = D.point(l);
        cplx e = 0.0;
        for (int a = 0; a < 3; ++a) e += x[a] * s.zeta[a];
        v[l] = std::exp(e / s.zetas.h) * b(0, D.box_index(l));
    }
    return v;
}

/// Boundary-pairing value for the traces of two CGO solutions, through discrete Dirichlet solves.
cplx boundary_pairing(const PotentialPair& P1, const PotentialPair& P2, const CGOSolution& s1, const CGOSolution& s2,
                      double* residual)
{
    CubeDomain D = make_cube_domain(P1.grid(), P1.omega_side);
    CubeOperator op1(D, P1);
    CubeOperator op2c = CubeOperator(D, P2).conjugated();
    DirichletProblem p1, p2;
    p1.boundary = cgo_on_cube(D, s1);
    p2.boundary = cgo_on_cube(D, s2);
    SolveOptions so;
    so.probe_condition = false;
    auto u1 = solve_dirichlet(op1, p1, so).u;
    auto u2 = solve_dirichlet(op2c, p2, so).u;
    IdentityCheck chk = integral_identity_check(P1, P2, D, u1, u2);
    if (residual) *residual = std::max(chk.residual1, chk.residual2);
    return chk.boundary;
}

struct FramePair {
    CGOSolution s1, s2;
};

FramePair build_frame(const PotentialPair& P1, const PotentialPair& P2, const Vec3& xi, double h, bool reflect,
                      const Region& U, const ExtractOptions& opt)
{
    CGOOptions co;
    co.region = U;
    co.reflect = reflect;
    co.max_iter = opt.max_iter;
    co.tol = opt.tol;
    return {build_cgo(P1, xi, h, 1, co), build_cgo(P2, xi, h, 2, co)};
}

void note_frame(ExtractionRecord& rec, const FramePair& f)
{
    for (const CGOSolution* s : {&f.s1, &f.s2}) {
        rec.weight_max = std::max(rec.weight_max, s->weight_max);
        rec.remainder = std::max(rec.remainder, s->remainder_H1scl);
        if (!s->converged) {
            rec.converged = false;
            if (rec.note.empty()) rec.note = "CGO remainder solve did not converge: " + s->note;
        }
    }
}

/// K1 = int Psi |z|^eps, K2 = int |grad Psi| |z|^eps for the unit bump.
std::pair<double, double> mollifier_moments(double eps)
{
    const int n = 4000;
    double m0 = 0.0, m1 = 0.0, m2 = 0.0;
    for (int i = 0; i < n; ++i) {
        double r = (i + 0.5) / n;
        double psi = std::exp(-1.0 / (1.0 - r * r));
        double w = 4.0 * kPi * r * r / n;
        m0 += w * psi;
        m1 += w * psi * std::pow(r, eps);
        m2 += w * psi * 2.0 * r / ((1.0 - r * r) * (1.0 - r * r)) * std::pow(r, eps);
    }
    return {m1 / m0, m2 / m0};
}

/// sum |k_j(y)| |y|^eps 2^{j eps} dx^3 for block j.
double block_difference_constant(const GridPtr& g, int j, double eps)
{
    ScalarField delta = scalar_field(g);
    const int N = g->n();
    delta(0, g->index(N / 2, N / 2, N / 2)) = 1.0;
    ScalarField k = lp_project(delta, j);
    const double L = g->half_width();
    double s = 0.0;
    for (std::size_t i = 0; i < g->size(); ++i) {
        Vec3 x = g->point(i);
        double r2 = 0.0;
        for (double v : x) {
            double w = std::min(std::abs(v), 2 * L - std::abs(v));
            r2 += w * w;
        }
        s += std::abs(k(0, i)) * std::pow(std::sqrt(r2), eps);
    }
    return s * std::pow(2.0, j * eps);
}

double combine_lr(const std::vector<double>& v, double r)
{
    if (std::isinf(r)) return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end());
    double acc = 0.0;
    for (double x : v) acc += std::pow(x, r);
    return std::pow(acc, 1.0 / r);
}

double cnorm2(const std::vector<cplx>& v)
{
    double s = 0.0;
    for (auto x : v) s += std::norm(x);
    return std::sqrt(s);
}

} // namespace

IdentityCheck integral_identity_check(const PotentialPair& P1, const PotentialPair& P2, const CubeDomain& D,
                                      const std::vector<cplx>& u1, const std::vector<cplx>& u2)
{
    if (u1.size() != D.size() || u2.size() != D.size())
        throw Error("integral_identity_check: solutions must have one value per cube node");
    CubeOperator op1(D, P1), op2(D, P2);
    CubeOperator op2c = op2.conjugated();
    std::vector<cplx> u1b(u1.size()), u2b(u2.size());
    for (std::size_t i = 0; i < u1.size(); ++i) {
        u1b[i] = std::conj(u1[i]);
        u2b[i] = std::conj(u2[i]);
    }
    IdentityCheck r;
    cplx b1 = op1.bilinear(u1, u2b), b2 = op2.bilinear(u1, u2b);
    r.volume = b1 - b2;
    r.boundary = op1.bilinear(u1, zero_extension(D, u2b)) - std::conj(op2c.bilinear(u2, zero_extension(D, u1b)));
    r.gap = std::abs(r.volume - r.boundary) / std::max(std::abs(b1) + std::abs(b2), 1e-300);
    r.residual1 = interior_residual(op1, u1);
    r.residual2 = interior_residual(op2c, u2);
    r.flagged = r.residual1 > 1e-8 || r.residual2 > 1e-8;
    return r;
}

std::array<cplx, 3> true_dA_hat(const PotentialPair& P1, const PotentialPair& P2, const Vec3& xi)
{
    require_same_grid(P1.A, P2.A);
    VectorField d = P1.A - P2.A;
    cplx Ah[3];
    for (int a = 0; a < 3; ++a) Ah[a] = fourier_hat(d, a, xi);
    std::array<cplx, 3> out;
    for (int j = 0; j < 3; ++j)
        for (int k = j + 1; k < 3; ++k) out[pair_index(j, k)] = -I * (xi[j] * Ah[k] - xi[k] * Ah[j]);
    return out;
}

cplx true_q_hat(const PotentialPair& P1, const PotentialPair& P2, const Vec3& xi)
{
    require_same_grid(P1.q, P2.q);
    return fourier_hat(P1.q - P2.q, 0, xi);
}

ExtractionRecord extract_dA_hat(const PotentialPair& P1, const PotentialPair& P2, const Vec3& xi, double h,
                                const ExtractOptions& opt)
{
    require_same_grid(P1.A, P2.A);
    ExtractionRecord rec;
    rec.xi = xi;
    rec.h = h;
    rec.mode = opt.mode;
    Region U{Region::Kind::Cube, std::max(P1.omega_side, P2.omega_side)};
    Zetas ref = make_zetas(xi, h, false);
    cplx E[2], a[2], b[2];
    for (int f = 0; f < 2; ++f) {
        FramePair fp = build_frame(P1, P2, xi, h, f == 1, U, opt);
        note_frame(rec, fp);
        cplx V;
        if (opt.mode == ExtractMode::Interior) {
            V = volume_pairing(P1, P2, fp.s1, fp.s2, nullptr, nullptr);
        } else {
            double res = 0.0;
            V = boundary_pairing(P1, P2, fp.s1, fp.s2, &res);
            if (res > 1e-8) rec.note = "discrete Dirichlet residual " + std::to_string(res);
        }
        rec.pairings.push_back(V);
        E[f] = h * V / (-2.0 * I);
        a[f] = b[f] = 0.0;
        for (int c = 0; c < 3; ++c) {
            cplx w = (fp.s1.zeta[c] - std::conj(fp.s2.zeta[c])) / 2.0;
            a[f] += w * ref.mu1[c];
            b[f] += w * ref.mu2[c];
        }
    }
    cplx det = a[0] * b[1] - a[1] * b[0];
    if (std::abs(det) < 1e-12) throw Error("extract_dA_hat: degenerate frame pair");
    cplx m1A = (E[0] * b[1] - E[1] * b[0]) / det;
    cplx m2A = (a[0] * E[1] - a[1] * E[0]) / det;
    CVec3 Aperp;
    for (int c = 0; c < 3; ++c) Aperp[c] = m1A * ref.mu1[c] + m2A * ref.mu2[c];
    rec.value.assign(3, 0.0);
    for (int j = 0; j < 3; ++j)
        for (int k = j + 1; k < 3; ++k) rec.value[pair_index(j, k)] = -I * (xi[j] * Aperp[k] - xi[k] * Aperp[j]);
    auto t = true_dA_hat(P1, P2, xi);
    rec.truth.assign(t.begin(), t.end());
    std::vector<cplx> diff(3);
    for (int c = 0; c < 3; ++c) diff[c] = rec.value[c] - rec.truth[c];
    rec.error = cnorm2(diff);
    return rec;
}

ExtractionRecord extract_q_hat(const PotentialPair& P1, const PotentialPair& P2, const Vec3& xi, double h,
                               const GaugeData* G, const ExtractOptions& opt)
{
    require_same_grid(P1.q, P2.q);
    ExtractionRecord rec;
    rec.xi = xi;
    rec.h = h;
    rec.mode = opt.mode;
    Region U{Region::Kind::Cube, std::max(P1.omega_side, P2.omega_side)};
    VectorField gphi;
    if (G) {
        require_same_grid(P1.q, G->phi);
        U = Region{Region::Kind::Ball, opt.balls.outer};
        gphi = d_form(G->phi);
        double bound = 0.0, m = std::max(P1.M, P2.M);
        for (std::size_t i = 0; i < gphi.grid()->size(); ++i) {
            double s = 0.0;
            for (int a = 0; a < 3; ++a) s += std::norm(P2.A(a, i) + gphi(a, i));
            bound = std::max(bound, std::sqrt(s));
        }
        if (bound > 2.0 * m)
            rec.note = "gauge-shifted magnetic potential reaches " + std::to_string(bound) + " > 2M";
    }
    cplx acc = 0.0;
    for (int f = 0; f < 2; ++f) {
        FramePair fp = build_frame(P1, P2, xi, h, f == 1, U, opt);
        note_frame(rec, fp);
        cplx V;
        if (opt.mode == ExtractMode::Interior) {
            V = G ? volume_pairing(P1, P2, fp.s1, fp.s2, &G->phi, &gphi)
                  : volume_pairing(P1, P2, fp.s1, fp.s2, nullptr, nullptr);
        } else {
            double res = 0.0;
            V = boundary_pairing(P1, P2, fp.s1, fp.s2, &res);
            if (res > 1e-8 && rec.note.empty()) rec.note = "discrete Dirichlet residual " + std::to_string(res);
        }
        rec.pairings.push_back(V);
        acc += V;
    }
    rec.value = {acc / 2.0};
    rec.truth = {true_q_hat(P1, P2, xi)};
    rec.error = std::abs(rec.value[0] - rec.truth[0]);
    return rec;
}

double ErrorModel::eval(double xi_norm, double h, double dist, double eps, double coupling) const
{
    double base = dist * std::exp(c / h) + std::pow(h, eps / (eps + 2.0));
    if (coupling > 0) base += coupling * std::pow(h, -(eps + 4.0) / (eps + 2.0));
    return C * std::pow(xi_norm, xi_power) * base;
}

ErrorModel fit_error_model(const std::vector<ExtractionRecord>& recs, double eps, int xi_power, double margin)
{
    ErrorModel best{0.0, 0.0, xi_power};
    double best_total = INFINITY;
    for (double c : {0.0, 0.02, 0.05, 0.1, 0.2}) {
        ErrorModel m{1.0, c, xi_power};
        double C = 0.0;
        for (const auto& r : recs) {
            double base = m.eval(norm3(r.xi), r.h, r.dist, eps, r.coupling);
            if (base > 0) C = std::max(C, r.error / base);
        }
        C *= margin;
        double total = 0.0;
        for (const auto& r : recs) total += C * m.eval(norm3(r.xi), r.h, r.dist, eps, r.coupling);
        if (total < best_total) {
            best_total = total;
            best = {C, c, xi_power};
        }
    }
    return best;
}

namespace {

double clamp_h(double h) { return std::clamp(h, 0.05, 1.0); }

double log_dist(double dist) { return std::abs(std::log(dist)); }

} // namespace

double schedule_h_dA(double dist, const ScheduleParams& s)
{
    if (!(dist > 0)) return 0.05;
    if (dist >= 1) return 1.0;
    return clamp_h(s.c_prime / log_dist(dist));
}

double schedule_rho_dA(double h, double eps, const ScheduleParams& s)
{
    const double n = s.n;
    return std::pow(h, -2.0 * eps * (1 + eps) / ((2 + eps) * (n + n * eps + 2 * eps)));
}

double schedule_h_q(double dist, double eps, const ScheduleParams& s)
{
    if (!(dist > 0)) return 0.05;
    if (dist >= 1) return clamp_h(s.c_prime);
    return clamp_h(s.c_prime * std::pow(log_dist(dist), -s.c_tilde * s.theta * eps * eps / (6.0 * s.n)));
}

double schedule_rho_q(double h, double eps, const ScheduleParams& s)
{
    return std::pow(h, -2.0 * eps / ((2 + eps) * (s.n + 2 * s.lambda)));
}

std::vector<Vec3> lattice_ball(const Grid& g, double radius, bool half)
{
    const double u = g.freq_unit();
    const int m = std::min(int(std::floor(radius / u)), g.n() / 2 - 1);
    std::vector<Vec3> out;
    for (int a = -m; a <= m; ++a)
        for (int b = -m; b <= m; ++b)
            for (int c = -m; c <= m; ++c) {
                if (a == 0 && b == 0 && c == 0) continue;
                if (half && (a < 0 || (a == 0 && (b < 0 || (b == 0 && c < 0))))) continue;
                Vec3 e{a * u, b * u, c * u};
                if (norm3(e) <= radius * (1 + 1e-12)) out.push_back(e);
            }
    return out;
}

namespace {

/// rho <= 2/h and 2^{-k} >= h, with k the largest block below rho.
void enforce_schedule(StabilitySection& S, int jmax)
{
    if (S.rho > 2.0 / S.h) {
        S.note = "rho reduced from " + std::to_string(S.rho) + " to 2/h";
        S.rho = 2.0 / S.h;
    }
    int k = std::max(0, int(std::floor(std::log2(S.rho))));
    int kh = std::max(0, int(std::floor(std::log2(1.0 / S.h))));
    S.k = std::min({k, kh, jmax});
}

std::vector<ExtractionRecord> run_extractions(const std::vector<Vec3>& pts, double h,
                                              const std::function<ExtractionRecord(const Vec3&, double)>& f)
{
    std::vector<ExtractionRecord> recs(pts.size());
    parallel_for(pts.size(), [&](std::size_t i) {
        double hx = std::min(h, 1.9 / norm3(pts[i]));
        recs[i] = f(pts[i], hx);
    });
    return recs;
}

} // namespace

StabilitySection assemble_dA_stability(const PotentialPair& P1, const PotentialPair& P2, const StabilityInputs& in)
{
    const GridPtr& g = P1.grid();
    require_same_grid(P1.A, P2.A);
    StabilitySection S;
    const double eps = in.eps;
    S.h = in.h_override > 0 ? in.h_override : schedule_h_dA(in.dist, in.schedule);
    S.rho = schedule_rho_dA(S.h, eps, in.schedule);
    enforce_schedule(S, lp_max_block(*g));
    S.tau = std::pow(S.rho, -1.0 / (eps + 1.0));
    const double radius = std::max(S.rho, std::ldexp(1.0, S.k + 1));
    S.half = in.use_symmetry && is_real(P1.A) && is_real(P2.A);
    auto pts = lattice_ball(*g, radius, S.half);
    S.records = run_extractions(pts, S.h, [&](const Vec3& xi, double h) {
        auto r = extract_dA_hat(P1, P2, xi, h, in.extract);
        r.dist = in.dist;
        return r;
    });
    apply_dA_bounds(S, P1, P2, in);
    return S;
}

void apply_dA_bounds(StabilitySection& S, const PotentialPair& P1, const PotentialPair& P2, const StabilityInputs& in)
{
    const GridPtr& g = P1.grid();
    const double eps = in.eps;
    const double delta = in.schedule.besov_delta > 0 ? in.schedule.besov_delta : 1.0 - eps / 2.0;
    const int jmax = lp_max_block(*g);
    TwoFormField dA = d_form(P1.A - P2.A);
    S.direct_sobolev = sobolev_norm(dA, -1.0);
    S.direct_besov = besov_norm(dA, {-delta, in.r}).value;

    const double box = std::pow(2.0 * g->half_width(), 3);
    const double mult = S.half ? 2.0 : 1.0;
    double low = 0.0;
    std::vector<double> blocks(std::size_t(jmax) + 1, 0.0);
    for (const auto& r : S.records) {
        double xn = norm3(r.xi);
        double v = cnorm2(r.value) + in.dA_model.eval(xn, r.h, r.dist, eps);
        if (xn <= S.rho) low += mult * v * v / (1.0 + xn * xn);
        for (int j = 0; j <= S.k; ++j) {
            double m = lp_multiplier(j, xn);
            blocks[j] += mult * m * m * v * v;
        }
    }
    auto [K1, K2] = mollifier_moments(eps);
    const double M2 = 2.0 * in.M;
    double tail = M2 * (K1 * std::pow(S.tau, eps) + K2 * std::pow(S.tau, eps - 1.0) / S.rho);
    S.bound_sobolev = std::sqrt(low / box) + tail;

    std::vector<double> weighted;
    for (int j = 0; j <= jmax; ++j) {
        double b;
        if (j <= S.k)
            b = std::sqrt(blocks[j] / box);
        else
            b = std::ldexp(1.0, j + 1) * block_difference_constant(g, j, eps) * std::pow(2.0, -j * eps) * M2;
        weighted.push_back(std::pow(2.0, -j * delta) * b);
    }
    S.bound_besov = combine_lr(weighted, in.r);
}

StabilitySection assemble_q_stability(const PotentialPair& P1, const PotentialPair& P2, const StabilityInputs& in,
                                      const GaugeData* G, double dA_bound)
{
    const GridPtr& g = P1.grid();
    require_same_grid(P1.q, P2.q);
    StabilitySection S;
    const double eps = in.eps;
    S.h = in.h_override > 0 ? in.h_override : schedule_h_q(in.dist, eps, in.schedule);
    S.rho = schedule_rho_q(S.h, eps, in.schedule);
    enforce_schedule(S, lp_max_block(*g));
    S.tau = std::pow(S.h, 1.0 / (eps + 2.0));
    const double radius = std::max(S.rho, std::ldexp(1.0, S.k + 1));
    S.half = in.use_symmetry && is_real(P1.q) && is_real(P2.q) && is_real(P1.A) && is_real(P2.A);
    auto pts = lattice_ball(*g, radius, S.half);
    // the zero mode is approached along e1, which keeps the CGO frame defined
    pts.insert(pts.begin(), Vec3{1e-3 * g->freq_unit(), 0.0, 0.0});
    S.records = run_extractions(pts, S.h, [&](const Vec3& xi, double h) {
        auto r = extract_q_hat(P1, P2, xi, h, G, in.extract);
        r.dist = in.dist;
        return r;
    });
    apply_q_bounds(S, P1, P2, in, dA_bound);
    return S;
}

void apply_q_bounds(StabilitySection& S, const PotentialPair& P1, const PotentialPair& P2, const StabilityInputs& in,
                    double dA_bound)
{
    const GridPtr& g = P1.grid();
    const double eps = in.eps;
    const ScheduleParams& sp = in.schedule;
    const int jmax = lp_max_block(*g);
    ScalarField dq = P1.q - P2.q;
    S.direct_sobolev = sobolev_norm(dq, -sp.lambda);
    S.direct_besov = besov_norm(dq, {0.0, in.r}).value;

    const double coupling = std::pow(std::max(dA_bound, 0.0), sp.theta);
    const double box = std::pow(2.0 * g->half_width(), 3);
    double low = 0.0;
    std::vector<double> blocks(std::size_t(jmax) + 1, 0.0);
    for (std::size_t i = 0; i < S.records.size(); ++i) {
        auto& r = S.records[i];
        r.coupling = coupling;
        double xn = i == 0 ? 0.0 : norm3(r.xi);
        double mult = (i == 0 || !S.half) ? 1.0 : 2.0;
        double v = std::abs(r.value[0]) + in.q_model.eval(xn, r.h, r.dist, eps, coupling);
        if (xn <= S.rho) low += mult * v * v * std::pow(1.0 + xn * xn, -sp.lambda);
        for (int j = 0; j <= S.k; ++j) {
            double m = lp_multiplier(j, xn);
            blocks[j] += mult * m * m * v * v;
        }
    }
    const double M2 = 2.0 * in.M;
    const double vol = std::pow(std::max(P1.omega_side, P2.omega_side), 3);
    S.bound_sobolev = std::sqrt(low / box) + M2 * std::sqrt(vol) * std::pow(S.rho, -sp.lambda);

    double b1 = besov_norm(P1.q, {eps, in.r}).value, b2 = besov_norm(P2.q, {eps, in.r}).value;
    S.besov_skipped = b1 > in.M || b2 > in.M;
    if (S.besov_skipped) {
        S.bound_besov = NAN;
        S.note = "q outside the B^{2,r}_eps ball of radius M (" + std::to_string(b1) + ", " + std::to_string(b2) +
                 "); Besov bound skipped";
        return;
    }
    std::vector<double> weighted;
    for (int j = 0; j <= jmax; ++j)
        weighted.push_back(j <= S.k ? std::sqrt(blocks[j] / box) : std::pow(2.0, -j * eps) * M2);
    S.bound_besov = combine_lr(weighted, in.r);
}

} // namespace mstab
