#include "mstab/forward.hpp"

#include <cmath>
#include <random>

namespace mstab {

std::size_t CubeDomain::box_index(std::size_t local) const
{
    int k = int(local % n), j = int((local / n) % n), i = int(local / (std::size_t(n) * n));
    return grid->index(i0 + i, i0 + j, i0 + k);
}

Vec3 CubeDomain::point(std::size_t local) const
{
    int k = int(local % n), j = int((local / n) % n), i = int(local / (std::size_t(n) * n));
    return {grid->coord(i0 + i), grid->coord(i0 + j), grid->coord(i0 + k)};
}

bool CubeDomain::on_boundary(std::size_t local) const
{
    int k = int(local % n), j = int((local / n) % n), i = int(local / (std::size_t(n) * n));
    return i == 0 || j == 0 || k == 0 || i == n - 1 || j == n - 1 || k == n - 1;
}

double CubeDomain::node_weight(std::size_t local) const
{
    int c[3] = {int(local / (std::size_t(n) * n)), int((local / n) % n), int(local % n)};
    double w = 1.0;
    for (int a = 0; a < 3; ++a)
        if (c[a] == 0 || c[a] == n - 1) w *= 0.5;
    return w;
}

CubeDomain make_cube_domain(const GridPtr& g, double side)
{
    CubeDomain D;
    D.grid = g;
    D.side = side;
    const double half = side / 2 + 1e-9;
    int first = -1, count = 0;
    for (int i = 0; i < g->n(); ++i)
        if (std::abs(g->coord(i)) <= half) {
            if (first < 0) first = i;
            ++count;
        }
    if (count < 3) throw Error("cube domain: fewer than 3 nodes per axis inside Omega");
    if (first < 1 || first + count > g->n() - 1) throw Error("cube domain: Omega must lie strictly inside the box");
    D.i0 = first;
    D.n = count;
    return D;
}

std::vector<cplx> restrict_to_cube(const CubeDomain& D, const Field& u, int comp)
{
    std::vector<cplx> v(D.size());
    for (std::size_t l = 0; l < D.size(); ++l) v[l] = u(comp, D.box_index(l));
    return v;
}

ScalarField extend_to_box(const CubeDomain& D, const std::vector<cplx>& v)
{
    ScalarField out = scalar_field(D.grid);
    for (std::size_t l = 0; l < D.size(); ++l) out(0, D.box_index(l)) = v[l];
    return out;
}

std::vector<cplx> zero_extension(const CubeDomain& D, const std::vector<cplx>& v)
{
    std::vector<cplx> out(D.size(), cplx(0.0));
    for (std::size_t l = 0; l < D.size(); ++l)
        if (D.on_boundary(l)) out[l] = v[l];
    return out;
}

CubeOperator::CubeOperator(const CubeDomain& D, const VectorField& A, const ScalarField& q) : D_(D)
{
    if (A.degree() != 1 || q.degree() != 0) throw Error("CubeOperator: expected a 1-form and a scalar");
    for (int a = 0; a < 3; ++a) Anode_[a] = restrict_to_cube(D, A, a);
    pot_ = restrict_to_cube(D, q, 0);
    for (std::size_t l = 0; l < D.size(); ++l)
        pot_[l] += Anode_[0][l] * Anode_[0][l] + Anode_[1][l] * Anode_[1][l] + Anode_[2][l] * Anode_[2][l];
}

CubeOperator CubeOperator::constant(const CubeDomain& D, cplx c)
{
    VectorField A = vector_field(D.grid);
    ScalarField q = scalar_field(D.grid);
    for (auto& v : q.comp(0)) v = c;
    return CubeOperator(D, A, q);
}

CubeOperator CubeOperator::negated_magnetic() const
{
    CubeOperator o = *this;
    for (auto& comp : o.Anode_)
        for (auto& v : comp) v = -v;
    return o;
}

CubeOperator CubeOperator::conjugated() const
{
    CubeOperator o = *this;
    for (auto& comp : o.Anode_)
        for (auto& v : comp) v = std::conj(v);
    for (auto& v : o.pot_) v = std::conj(v);
    return o;
}

std::vector<std::size_t> CubeOperator::interior_nodes() const
{
    std::vector<std::size_t> idx;
    for (std::size_t l = 0; l < D_.size(); ++l)
        if (!D_.on_boundary(l)) idx.push_back(l);
    return idx;
}

void CubeOperator::apply_rows(const std::vector<cplx>& u, std::vector<cplx>& out) const
{
    const int n = D_.n;
    const double dx = D_.spacing();
    const double idx2 = 1.0 / (dx * dx);
    const cplx ih(0.0, 1.0 / dx);
    out.assign(D_.size(), cplx(0.0));
    const std::size_t st[3] = {std::size_t(n) * n, std::size_t(n), 1};
    for (int i = 1; i < n - 1; ++i)
        for (int j = 1; j < n - 1; ++j)
            for (int k = 1; k < n - 1; ++k) {
                std::size_t p = D_.index(i, j, k);
                cplx acc = pot_[p] * u[p];
                for (int d = 0; d < 3; ++d) {
                    std::size_t pp = p + st[d], pm = p - st[d];
                    acc += (2.0 * u[p] - u[pp] - u[pm]) * idx2;
                    cplx Ap = 0.5 * (Anode_[d][p] + Anode_[d][pp]);
                    cplx Am = 0.5 * (Anode_[d][p] + Anode_[d][pm]);
                    acc -= ih * (Ap * u[pp] - Am * u[pm]);
                }
                out[p] = acc;
            }
}

std::vector<cplx> CubeOperator::form_gradient(const std::vector<cplx>& u) const
{
    const int n = D_.n;
    const double dx = D_.spacing();
    const double vol = dx * dx * dx;
    const std::size_t st[3] = {std::size_t(n) * n, std::size_t(n), 1};
    auto om = [n](int c) { return (c == 0 || c == n - 1) ? 0.5 : 1.0; };
    const cplx I(0.0, 1.0);
    std::vector<cplx> g(D_.size(), cplx(0.0));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                int c[3] = {i, j, k};
                std::size_t p = D_.index(i, j, k);
                g[p] += vol * om(i) * om(j) * om(k) * pot_[p] * u[p];
                for (int d = 0; d < 3; ++d) {
                    if (c[d] == n - 1) continue;
                    double w = vol;
                    for (int a = 0; a < 3; ++a)
                        if (a != d) w *= om(c[a]);
                    std::size_t q = p + st[d];
                    cplx Ae = 0.5 * (Anode_[d][p] + Anode_[d][q]);
                    cplx du = (u[q] - u[p]) / (dx * dx);
                    g[q] += w * (du + I * Ae * u[p] / dx);
                    g[p] -= w * (du + I * Ae * u[q] / dx);
                }
            }
    return g;
}

cplx CubeOperator::bilinear(const std::vector<cplx>& u, const std::vector<cplx>& v) const
{
    auto g = form_gradient(u);
    cplx acc = 0.0;
    for (std::size_t p = 0; p < g.size(); ++p) acc += g[p] * v[p];
    return acc;
}

double interior_residual(const CubeOperator& op, const std::vector<cplx>& u, const std::vector<cplx>& source)
{
    const CubeDomain& D = op.domain();
    std::vector<cplx> Lu;
    op.apply_rows(u, Lu);
    double r = 0.0, un = 0.0, fn = 0.0;
    for (std::size_t l = 0; l < D.size(); ++l) {
        un += std::norm(u[l]);
        if (D.on_boundary(l)) continue;
        cplx f = source.empty() ? cplx(0.0) : source[l];
        r += std::norm(Lu[l] - f);
        fn += std::norm(f);
    }
    double scale = 6.0 / (D.spacing() * D.spacing()) * std::sqrt(un) + std::sqrt(fn);
    return scale > 0 ? std::sqrt(r) / scale : 0.0;
}

DirichletSolution solve_dirichlet(const CubeOperator& op, const DirichletProblem& prob, const SolveOptions& opt)
{
    const CubeDomain& D = op.domain();
    if (prob.boundary.size() != D.size()) throw Error("solve_dirichlet: boundary data has the wrong length");
    if (!prob.source.empty() && prob.source.size() != D.size())
        throw Error("solve_dirichlet: source has the wrong length");
    for (const auto& v : prob.boundary)
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) throw Error("solve_dirichlet: non-finite boundary data");
    auto inner = op.interior_nodes();
    const std::size_t m = inner.size();

    std::vector<cplx> ub = zero_extension(D, prob.boundary);
    std::vector<cplx> Lb;
    op.apply_rows(ub, Lb);
    CVector b(m);
    for (std::size_t t = 0; t < m; ++t) {
        cplx f = prob.source.empty() ? cplx(0.0) : prob.source[inner[t]];
        b[t] = f - Lb[inner[t]];
    }
    auto make_op = [&](const CubeOperator& o) {
        return [&o, &inner, &D, m](const CVector& x, CVector& y) {
            std::vector<cplx> full(D.size(), cplx(0.0)), rows;
            for (std::size_t t = 0; t < m; ++t) full[inner[t]] = x[t];
            o.apply_rows(full, rows);
            y.resize(m);
            for (std::size_t t = 0; t < m; ++t) y[t] = rows[inner[t]];
        };
    };
    LinOp Aop = make_op(op);
    CVector x(m, cplx(0.0));
    DirichletSolution sol;
    KrylovResult kr = bicgstab(Aop, b, x, opt.tol, opt.max_iter);
    if (!kr.converged && !kr.breakdown) {
        // one restart from the current iterate before giving up
        KrylovResult k2 = bicgstab(Aop, b, x, opt.tol, opt.max_iter);
        k2.iterations += kr.iterations;
        kr = k2;
    }
    sol.iterations = kr.iterations;
    sol.rel_residual = kr.rel_residual;
    if (kr.breakdown && !kr.converged)
        throw InteriorEigenvalueError("solve_dirichlet: Krylov breakdown, 0 is (close to) an interior eigenvalue");
    if (!kr.converged)
        throw InteriorEigenvalueError("solve_dirichlet: no convergence in " + std::to_string(kr.iterations)
                                      + " iterations (residual " + std::to_string(kr.rel_residual)
                                      + "), suspected interior eigenvalue");
    if (opt.probe_condition && vnorm(b) > 0) {
        CubeOperator adj = op.negated_magnetic().conjugated();
        LinOp Hop = make_op(adj);
        std::mt19937_64 rng(12345);
        std::normal_distribution<double> nd;
        CVector v(m), t1, t2;
        for (auto& c : v) c = cplx(nd(rng), nd(rng));
        double sig2 = 0.0;
        for (int it = 0; it < 15; ++it) {
            double nv = vnorm(v);
            for (auto& c : v) c /= nv;
            Aop(v, t1);
            Hop(t1, t2);
            sig2 = vnorm(t2);
            v = t2;
        }
        double smax = std::sqrt(sig2);
        sol.cond_lower_bound = smax * vnorm(x) / vnorm(b);
        if (sol.cond_lower_bound > 1e12)
            throw InteriorEigenvalueError("solve_dirichlet: condition estimate "
                                          + std::to_string(sol.cond_lower_bound) + " exceeds 1e12");
    }
    sol.u = ub;
    for (std::size_t t = 0; t < m; ++t) sol.u[inner[t]] = x[t];
    return sol;
}

FluxPairing flux_pairing(const CubeOperator& op, const std::vector<cplx>& u, const std::vector<cplx>& v)
{
    FluxPairing fp;
    fp.value = op.bilinear(u, v);
    fp.residual = interior_residual(op, u);
    fp.warning = fp.residual > 1e-8;
    return fp;
}

} // namespace mstab
