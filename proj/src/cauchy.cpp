#include "mstab/cauchy.hpp"

#include "mstab/field_io.hpp"
#include "mstab/parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

namespace mstab {

using Eigen::MatrixXcd;
using Eigen::VectorXcd;

TraceBasis make_trace_basis(const CubeDomain& D, int K)
{
    if (K < 1) throw Error("trace basis: K must be positive");
    std::vector<std::array<int, 3>> cand;
    const int maxdeg = D.n - 1;
    for (int s = 0; s <= 3 * maxdeg; ++s)
        for (int a = 0; a <= std::min(s, maxdeg); ++a)
            for (int b = 0; b <= std::min(s - a, maxdeg); ++b) {
                int c = s - a - b;
                if (c <= maxdeg) cand.push_back({a, b, c});
            }
    std::vector<std::size_t> bnd;
    for (std::size_t l = 0; l < D.size(); ++l)
        if (D.on_boundary(l)) bnd.push_back(l);

    const double x0 = D.grid->coord(D.i0);
    const double span = D.hull_side();
    TraceBasis B;
    std::vector<std::vector<double>> ortho;
    for (const auto& m : cand) {
        if (int(B.modes.size()) == K) break;
        std::vector<double> v(bnd.size());
        for (std::size_t t = 0; t < bnd.size(); ++t) {
            Vec3 x = D.point(bnd[t]);
            double val = 1.0;
            for (int a = 0; a < 3; ++a) val *= std::cos(m[a] * kPi * (x[a] - x0) / span);
            v[t] = val;
        }
        std::vector<double> r = v;
        double n0 = 0.0;
        for (double z : r) n0 += z * z;
        for (const auto& o : ortho) {
            double s = 0.0;
            for (std::size_t t = 0; t < r.size(); ++t) s += o[t] * r[t];
            for (std::size_t t = 0; t < r.size(); ++t) r[t] -= s * o[t];
        }
        double n1 = 0.0;
        for (double z : r) n1 += z * z;
        if (n1 <= 1e-12 * n0) continue;
        for (auto& z : r) z /= std::sqrt(n1);
        ortho.push_back(std::move(r));
        B.modes.push_back(m);
        std::vector<cplx> f(D.size(), cplx(0.0));
        for (std::size_t t = 0; t < bnd.size(); ++t) f[bnd[t]] = v[t];
        B.traces.push_back(std::move(f));
    }
    if (int(B.modes.size()) < K)
        throw Error("trace basis: only " + std::to_string(B.modes.size()) + " independent modes on this grid, K = "
                    + std::to_string(K) + " requested");
    return B;
}

std::vector<cplx> trace_extension(const CubeDomain& D, const std::vector<cplx>& f)
{
    CubeOperator op = CubeOperator::constant(D, 1.0);
    DirichletProblem pr;
    pr.boundary = zero_extension(D, f);
    SolveOptions opt;
    opt.probe_condition = false;
    return solve_dirichlet(op, pr, opt).u;
}

double h1_norm(const CubeDomain& D, const std::vector<cplx>& v)
{
    CubeOperator op = CubeOperator::constant(D, 1.0);
    std::vector<cplx> vb(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) vb[i] = std::conj(v[i]);
    return std::sqrt(std::max(0.0, op.bilinear(v, vb).real()));
}

double trace_norm(const CubeDomain& D, const std::vector<cplx>& f)
{
    bool zero = std::all_of(f.begin(), f.end(), [](cplx z) { return z == cplx(0.0); });
    if (zero) return 0.0;
    return h1_norm(D, trace_extension(D, f));
}

namespace {

std::vector<cplx> combine(const TraceBasis& B, const VectorXcd& c)
{
    std::vector<cplx> f(B.traces[0].size(), cplx(0.0));
    for (int k = 0; k < c.size(); ++k)
        for (std::size_t p = 0; p < f.size(); ++p) f[p] += c[k] * B.traces[k][p];
    return f;
}

MatrixXcd gram_matrix(const CubeDomain& D, const TraceBasis& B)
{
    const int K = int(B.modes.size());
    CubeOperator op = CubeOperator::constant(D, 1.0);
    std::vector<std::vector<cplx>> grad(K);
    parallel_for(std::size_t(K), [&](std::size_t k) { grad[k] = op.form_gradient(trace_extension(D, B.traces[k])); });
    MatrixXcd G(K, K);
    for (int k = 0; k < K; ++k)
        for (int l = 0; l < K; ++l) {
            cplx s = 0.0;
            for (std::size_t p = 0; p < grad[k].size(); ++p) s += grad[k][p] * B.traces[l][p];
            G(k, l) = s;
        }
    MatrixXcd Gs = 0.5 * (G + G.transpose());
    return Gs.real().cast<cplx>();
}

} // namespace

CauchyData assemble_cauchy(const VectorField& A, const ScalarField& q, const CubeDomain& D, int K,
                           std::uint64_t fp)
{
    CauchyData C;
    C.domain = D;
    C.basis = make_trace_basis(D, K);
    C.fingerprint = fp;
    CubeOperator op(D, A, q);
    std::vector<std::vector<cplx>> grad(K);
    std::vector<int> iters(K, 0);
    parallel_for(std::size_t(K), [&](std::size_t k) {
        DirichletProblem pr;
        pr.boundary = C.basis.traces[k];
        DirichletSolution s;
        try {
            s = solve_dirichlet(op, pr);
        } catch (const InteriorEigenvalueError& e) {
            throw InteriorEigenvalueError("assemble_cauchy: basis function k = " + std::to_string(k) + ": " + e.what());
        }
        iters[k] = s.iterations;
        grad[k] = op.form_gradient(s.u);
    });
    C.max_iterations = *std::max_element(iters.begin(), iters.end());
    C.flux.resize(K, K);
    for (int k = 0; k < K; ++k)
        for (int l = 0; l < K; ++l) {
            cplx s = 0.0;
            for (std::size_t p = 0; p < grad[k].size(); ++p) s += grad[k][p] * C.basis.traces[l][p];
            C.flux(k, l) = s;
        }
    C.gram = gram_matrix(D, C.basis);
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(C.gram);
    double lo = es.eigenvalues().minCoeff(), hi = es.eigenvalues().maxCoeff();
    if (!(lo > 1e-12 * hi)) throw Error("assemble_cauchy: trace Gram matrix is not positive definite");
    return C;
}

CauchyData assemble_cauchy(const PotentialPair& P, const CubeDomain& D, int K)
{
    return assemble_cauchy(P.A, P.q, D, K, fingerprint(P));
}

double trace_dual_norm(const CauchyData& C, const VectorXcd& g)
{
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(C.gram);
    double lo = es.eigenvalues().minCoeff(), hi = es.eigenvalues().maxCoeff();
    if (!(lo > 1e-12 * hi))
        throw Error("trace_dual_norm: Gram matrix ill-conditioned, condition estimate " + std::to_string(hi / lo));
    VectorXcd y = es.eigenvectors().adjoint() * g;
    double s = 0.0;
    for (int i = 0; i < y.size(); ++i) s += std::norm(y[i]) / es.eigenvalues()[i];
    return std::sqrt(s);
}

double trace_coeff_norm(const CauchyData& C, const VectorXcd& c)
{
    return std::sqrt(std::max(0.0, (c.adjoint() * C.gram * c)(0, 0).real()));
}

namespace {

/// Gap problem in whitened coordinates z = L^H c, with G = L L^H.
struct GapProblem {
    MatrixXcd Tj, Tk;
    MatrixXcd TkH_Tk, TkH_Tj;
    Eigen::LLT<MatrixXcd> stacked;
    Eigen::CompleteOrthogonalDecomposition<MatrixXcd> pinvTk;
    int polish = 20;

    GapProblem(const MatrixXcd& G, const MatrixXcd& Fj, const MatrixXcd& Fk, int polish_steps)
        : polish(polish_steps)
    {
        Eigen::LLT<MatrixXcd> llt(G);
        if (llt.info() != Eigen::Success) throw Error("cauchy gap: Gram matrix is not positive definite");
        MatrixXcd L = llt.matrixL();
        auto whiten = [&](const MatrixXcd& F) {
            MatrixXcd X = L.triangularView<Eigen::Lower>().solve(MatrixXcd(F.transpose()));
            // X L^{-H}: solve from the right
            MatrixXcd Y = L.triangularView<Eigen::Lower>().solve(MatrixXcd(X.adjoint())).adjoint();
            return Y;
        };
        Tj = whiten(Fj);
        Tk = whiten(Fk);
        TkH_Tk = Tk.adjoint() * Tk;
        TkH_Tj = Tk.adjoint() * Tj;
        const int K = int(G.rows());
        stacked.compute(MatrixXcd::Identity(K, K) + TkH_Tk);
        pinvTk.compute(Tk);
    }

    double objective(const VectorXcd& z, const VectorXcd& Tz, const VectorXcd& w) const
    {
        return (z - w).norm() + (Tz - Tk * w).norm();
    }

    /// Returns the gap and the minimizer w.
    double solve(const VectorXcd& z, VectorXcd& wbest) const
    {
        const int K = int(z.size());
        VectorXcd Tz = Tj * z;
        VectorXcd cands[3] = {z, stacked.solve(z + Tk.adjoint() * Tz), pinvTk.solve(Tz)};
        double best = 1e300;
        for (auto& w : cands) {
            double f = objective(z, Tz, w);
            if (f < best) {
                best = f;
                wbest = w;
            }
        }
        VectorXcd w = cands[1];
        const double tiny = 1e-14 * (z.norm() + Tz.norm());
        for (int it = 0; it < polish; ++it) {
            double r1 = std::max((z - w).norm(), tiny), r2 = std::max((Tz - Tk * w).norm(), tiny);
            MatrixXcd M = (1.0 / r1) * MatrixXcd::Identity(K, K) + (1.0 / r2) * TkH_Tk;
            VectorXcd rhs = z / r1 + (Tk.adjoint() * Tz) / r2;
            w = M.llt().solve(rhs);
            double f = objective(z, Tz, w);
            if (f < best) {
                best = f;
                wbest = w;
            }
        }
        return best;
    }

    /// Ascent direction of the gap at z given its minimizer w.
    VectorXcd gradient(const VectorXcd& z, const VectorXcd& w) const
    {
        VectorXcd r1 = z - w, r2 = Tj * z - Tk * w;
        VectorXcd g = VectorXcd::Zero(z.size());
        if (r1.norm() > 0) g += r1 / r1.norm();
        if (r2.norm() > 0) g += Tj.adjoint() * r2 / r2.norm();
        return g;
    }
};

double one_sided(const CauchyData& Cj, const CauchyData& Ck, const DistOptions& opt, bool& low, int& evals)
{
    GapProblem gp(Cj.gram, Cj.flux, Ck.flux, opt.polish_steps);
    const int K = Cj.K();
    // squared-surrogate residual operator for [I; Tj] z fitted by [I; Tk] w
    MatrixXcd S(2 * K, K), R(2 * K, K);
    S << MatrixXcd::Identity(K, K), gp.Tj;
    R << MatrixXcd::Identity(K, K), gp.Tk;
    Eigen::HouseholderQR<MatrixXcd> qr(R);
    MatrixXcd Q = qr.householderQ() * MatrixXcd::Identity(2 * K, K);
    MatrixXcd Res = S - Q * (Q.adjoint() * S);
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(Res.adjoint() * Res);

    double best = 0.0;
    const int starts = std::min(opt.starts, K);
    for (int s = 0; s < starts; ++s) {
        VectorXcd z = es.eigenvectors().col(K - 1 - s);
        z /= z.norm();
        VectorXcd w;
        double f = gp.solve(z, w);
        ++evals;
        double step = 0.5;
        bool settled = false;
        for (int it = 0; it < opt.ascent_steps && step > 1e-6; ++it) {
            VectorXcd g = gp.gradient(z, w);
            g -= z * z.dot(g).real();
            if (g.norm() < 1e-12) {
                settled = true;
                break;
            }
            VectorXcd zn = z + step * g / g.norm();
            zn /= zn.norm();
            VectorXcd wn;
            double fn = gp.solve(zn, wn);
            ++evals;
            if (fn > f) {
                double gain = fn - f;
                z = zn;
                w = wn;
                f = fn;
                step = std::min(1.0, step * 1.5);
                if (gain <= 1e-9 * std::max(f, 1e-300)) {
                    settled = true;
                    break;
                }
            } else {
                step *= 0.5;
            }
        }
        if (step <= 1e-6) settled = true;
        if (!settled) low = true;
        best = std::max(best, f);
    }
    return best;
}

} // namespace

double cauchy_gap(const MatrixXcd& G, const MatrixXcd& Fj, const MatrixXcd& Fk, const VectorXcd& c, int polish_steps)
{
    GapProblem gp(G, Fj, Fk, polish_steps);
    Eigen::LLT<MatrixXcd> llt(G);
    MatrixXcd L = llt.matrixL();
    VectorXcd z = L.adjoint() * c;
    VectorXcd w;
    return gp.solve(z, w);
}

DistResult dist_cauchy(const CauchyData& C1, const CauchyData& C2, const DistOptions& opt)
{
    if (C1.K() != C2.K() || C1.basis.modes != C2.basis.modes || C1.domain.n != C2.domain.n
        || C1.domain.grid->n() != C2.domain.grid->n()
        || C1.domain.grid->half_width() != C2.domain.grid->half_width())
        throw Error("dist_cauchy: Cauchy data use different grids or bases");
    if ((C1.gram - C2.gram).norm() > 1e-9 * C1.gram.norm())
        throw Error("dist_cauchy: trace Gram matrices differ");
    DistResult r;
    // evaluate in a fixed order so that swapping the arguments reproduces the same numbers
    bool first = C1.fingerprint <= C2.fingerprint;
    const CauchyData& X = first ? C1 : C2;
    const CauchyData& Y = first ? C2 : C1;
    bool low = false;
    double xy = one_sided(X, Y, opt, low, r.evaluations);
    double yx = one_sided(Y, X, opt, low, r.evaluations);
    r.d12 = first ? xy : yx;
    r.d21 = first ? yx : xy;
    r.value = std::max(xy, yx);
    r.low_confidence = low;
    return r;
}

GaugeReport gauge_invariance_check(const PotentialPair& P, const ScalarField& phi, const CubeDomain& D, int K)
{
    if (phi.degree() != 0) throw Error("gauge check: phi must be a scalar field");
    require_same_grid(phi, P.A);
    GaugeReport rep;
    double scale = std::max(phi.max_abs(), 1e-300);
    for (std::size_t l = 0; l < D.size(); ++l)
        if (D.on_boundary(l)) rep.phi_boundary_max = std::max(rep.phi_boundary_max, std::abs(phi(0, D.box_index(l))));
    if (rep.phi_boundary_max > 1e-10 * scale)
        throw Error("gauge check: phi does not vanish on the boundary of Omega (max "
                    + std::to_string(rep.phi_boundary_max) + ")");
    VectorField A2 = P.A + d_form(phi);
    CauchyData C1 = assemble_cauchy(P.A, P.q, D, K, 1);
    CauchyData C2 = assemble_cauchy(A2, P.q, D, K, 2);
    rep.detail = dist_cauchy(C1, C2);
    rep.dist = rep.detail.value;
    return rep;
}

BridgeSample bridge_sample(const PotentialPair& P1, const PotentialPair& P2, const CauchyData& C1, double dist,
                           std::uint64_t seed)
{
    const CubeDomain& D = C1.domain;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    const int K = C1.K();
    VectorXcd c(K), e(K);
    for (int k = 0; k < K; ++k) {
        c[k] = cplx(nd(rng), nd(rng));
        e[k] = cplx(nd(rng), nd(rng));
    }
    CubeOperator op1(D, P1), op2(D, P2);
    CubeOperator op2c = op2.conjugated();
    DirichletProblem p1, p2;
    p1.boundary = combine(C1.basis, c);
    p2.boundary = combine(C1.basis, e);
    auto u1 = solve_dirichlet(op1, p1).u;
    auto u2 = solve_dirichlet(op2c, p2).u;
    std::vector<cplx> u2b(u2.size()), u1b(u1.size());
    for (std::size_t i = 0; i < u2.size(); ++i) {
        u2b[i] = std::conj(u2[i]);
        u1b[i] = std::conj(u1[i]);
    }
    BridgeSample s;
    cplx b1 = op1.bilinear(u1, u2b), b2 = op2.bilinear(u1, u2b);
    s.volume = b1 - b2;
    s.boundary = op1.bilinear(u1, zero_extension(D, u2b)) - std::conj(op2c.bilinear(u2, zero_extension(D, u1b)));
    s.identity_gap = std::abs(s.volume - s.boundary) / std::max(std::abs(b1) + std::abs(b2), 1e-300);
    s.u1_h1 = h1_norm(D, u1);
    s.u2_h1 = h1_norm(D, u2);
    double a2 = 0.0, q2 = 0.0;
    for (std::size_t l = 0; l < D.size(); ++l) {
        std::size_t b = D.box_index(l);
        double n2 = 0.0;
        for (int a = 0; a < 3; ++a) n2 += std::norm(P2.A(a, b));
        a2 = std::max(a2, n2);
        q2 = std::max(q2, std::abs(P2.q(0, b)));
    }
    s.bound = 2.0 * dist * (1.0 + a2 + q2) * s.u1_h1 * s.u2_h1;
    s.ratio = s.bound > 0 ? std::abs(s.volume) / s.bound : (std::abs(s.volume) > 0 ? INFINITY : 0.0);
    return s;
}

void save_cauchy(const std::string& path, const CauchyData& C)
{
    namespace fs = std::filesystem;
    const int K = C.K();
    std::string flux = fs::path(path).filename().string() + ".flux.cgom";
    std::string gram = fs::path(path).filename().string() + ".gram.cgom";
    fs::path dir = fs::path(path).parent_path();
    if (!dir.empty()) fs::create_directories(dir);
    auto blob = [K](const MatrixXcd& M) {
        std::vector<cplx> v(std::size_t(K) * K);
        for (int i = 0; i < K; ++i)
            for (int j = 0; j < K; ++j) v[std::size_t(i) * K + j] = M(i, j);
        return v;
    };
    save_matrix((dir / flux).string(), K, K, blob(C.flux));
    save_matrix((dir / gram).string(), K, K, blob(C.gram));
    nlohmann::json j;
    j["format"] = "mstab-cauchy";
    j["version"] = 1;
    j["L"] = C.domain.grid->half_width();
    j["N"] = C.domain.grid->n();
    j["omega_side"] = C.domain.side;
    j["K"] = K;
    j["modes"] = C.basis.modes;
    j["fingerprint"] = C.fingerprint;
    j["max_iterations"] = C.max_iterations;
    j["flux"] = flux;
    j["gram"] = gram;
    std::ofstream out(path);
    if (!out) throw Error("save_cauchy: cannot open " + path);
    out << j.dump(2) << "\n";
}

CauchyData load_cauchy(const std::string& path, const GridPtr& grid, std::uint64_t expected)
{
    namespace fs = std::filesystem;
    std::ifstream in(path);
    if (!in) throw Error("load_cauchy: cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw Error(std::string("load_cauchy: malformed JSON: ") + e.what());
    }
    if (j.value("format", "") != "mstab-cauchy") throw Error("load_cauchy: not a Cauchy data file");
    if (j.value("version", 0) != 1) throw Error("load_cauchy: unsupported version");
    double L = j.at("L");
    int N = j.at("N");
    GridPtr g = (grid && grid->n() == N && grid->half_width() == L) ? grid : make_grid(L, N);
    CauchyData C;
    C.domain = make_cube_domain(g, j.at("omega_side").get<double>());
    C.fingerprint = j.at("fingerprint").get<std::uint64_t>();
    if (expected != 0 && expected != C.fingerprint)
        throw Error("load_cauchy: fingerprint mismatch, data were assembled for different potentials");
    C.max_iterations = j.value("max_iterations", 0);
    int K = j.at("K");
    C.basis = make_trace_basis(C.domain, K);
    auto modes = j.at("modes").get<std::vector<std::array<int, 3>>>();
    if (modes != C.basis.modes) throw Error("load_cauchy: stored basis does not match the regenerated one");
    fs::path dir = fs::path(path).parent_path();
    auto read = [&](const std::string& name) {
        int r = 0, c = 0;
        auto v = load_matrix((dir / name).string(), r, c);
        if (r != K || c != K) throw Error("load_cauchy: matrix " + name + " has the wrong shape");
        MatrixXcd M(K, K);
        for (int a = 0; a < K; ++a)
            for (int b = 0; b < K; ++b) M(a, b) = v[std::size_t(a) * K + b];
        return M;
    };
    C.flux = read(j.at("flux").get<std::string>());
    C.gram = read(j.at("gram").get<std::string>());
    return C;
}

} // namespace mstab
