#include "mstab/hodge.hpp"

#include "mstab/besov.hpp"

#include <Eigen/Sparse>

#include <Eigen/IterativeLinearSolvers>

#include <array>
#include <string>
#include <cmath>

namespace mstab {

HelmholtzOracle helmholtz_oracle(const VectorField& u)
{
    if (u.degree() != 1) throw Error("helmholtz_oracle: 1-form expected");
    const Grid& g = *u.grid();
    std::vector<std::vector<cplx>> U(3);
    for (int c = 0; c < 3; ++c) U[c] = fft(g, u.comp(c));
    std::vector<cplx> P(g.size(), cplx(0.0));
    const int N = g.n();
    double spec = 0.0;
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j)
            for (int k = 0; k < N; ++k) {
                std::size_t idx = g.index(i, j, k);
                double e[3] = {g.dfreq(i), g.dfreq(j), g.dfreq(k)};
                double e2 = e[0] * e[0] + e[1] * e[1] + e[2] * e[2];
                cplx uh[3] = {U[0][idx], U[1][idx], U[2][idx]};
                if (e2 == 0.0) {
                    spec += std::norm(uh[0]) + std::norm(uh[1]) + std::norm(uh[2]);
                    continue;
                }
                cplx eu = e[0] * uh[0] + e[1] * uh[1] + e[2] * uh[2];
                P[idx] = cplx(0.0, -1.0) * eu / e2;
                cplx w[3] = {e[1] * uh[2] - e[2] * uh[1], e[2] * uh[0] - e[0] * uh[2], e[0] * uh[1] - e[1] * uh[0]};
                spec += (std::norm(w[0]) + std::norm(w[1]) + std::norm(w[2])) / e2;
            }
    HelmholtzOracle o;
    o.psi = scalar_field(u.grid());
    o.psi.comp(0) = ifft(g, P);
    o.divfree = u - d_form(o.psi);
    o.divfree_spectral_norm = std::sqrt(spec * g.cell_volume() / double(g.size()));
    return o;
}

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Eigen::VectorXcd;
using Eigen::VectorXd;

struct Complex {
    GridPtr g;
    int N = 0;
    double dx = 0.0;
    std::vector<int> cell, node, edge, face;
    std::vector<std::size_t> nodes, cells;
    std::vector<std::pair<std::size_t, int>> edges, faces;
    VectorXd M0, M1, M2, M3;
    SpMat D0, D1, D2;
    std::vector<char> boundary_face, boundary_node;

    std::size_t shift(std::size_t p, int d, int s) const
    {
        const std::size_t st[3] = {std::size_t(N) * N, std::size_t(N), 1};
        return s > 0 ? p + st[d] : p - st[d];
    }
    int coord(std::size_t p, int d) const
    {
        if (d == 0) return int(p / (std::size_t(N) * N));
        if (d == 1) return int((p / N) % N);
        return int(p % N);
    }
    bool cell_on(std::size_t p, const int off[3]) const
    {
        int c[3];
        for (int a = 0; a < 3; ++a) {
            c[a] = coord(p, a) - off[a];
            if (c[a] < 0 || c[a] > N - 2) return false;
        }
        return cell[g->index(c[0], c[1], c[2])] >= 0;
    }
};

Complex build_complex(const GridPtr& g, double R)
{
    Complex X;
    X.g = g;
    X.N = g->n();
    X.dx = g->spacing();
    const int N = X.N;
    const double dx = X.dx;
    if (R + 2 * dx >= g->half_width()) throw Error("hodge: ball B must lie inside the box with a two-cell margin");
    const std::size_t S = g->size();
    X.cell.assign(S, -1);
    X.node.assign(S, -1);
    X.edge.assign(3 * S, -1);
    X.face.assign(3 * S, -1);
    for (int i = 0; i < N - 1; ++i)
        for (int j = 0; j < N - 1; ++j)
            for (int k = 0; k < N - 1; ++k) {
                double c0 = g->coord(i) + dx / 2, c1 = g->coord(j) + dx / 2, c2 = g->coord(k) + dx / 2;
                if (c0 * c0 + c1 * c1 + c2 * c2 < R * R) {
                    std::size_t p = g->index(i, j, k);
                    X.cell[p] = int(X.cells.size());
                    X.cells.push_back(p);
                }
            }
    const double vol = dx * dx * dx;
    std::vector<double> m0(S, 0.0), m1(3 * S, 0.0), m2(3 * S, 0.0);
    for (std::size_t p : X.cells) {
        int c[3] = {X.coord(p, 0), X.coord(p, 1), X.coord(p, 2)};
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b)
                for (int e = 0; e < 2; ++e) {
                    std::size_t q = g->index(c[0] + a, c[1] + b, c[2] + e);
                    m0[q] += vol / 8;
                    int o[3] = {a, b, e};
                    for (int d = 0; d < 3; ++d) {
                        if (o[d] == 0) m1[3 * q + d] += vol / 4;
                        // face with normal d through q belongs to this cell when the other offsets are 0
                        bool base = true;
                        for (int t = 0; t < 3; ++t)
                            if (t != d && o[t] != 0) base = false;
                        if (base) m2[3 * q + d] += vol / 2;
                    }
                }
    }
    std::vector<double> M0v, M1v, M2v;
    for (std::size_t p = 0; p < S; ++p) {
        if (m0[p] > 0) {
            X.node[p] = int(X.nodes.size());
            X.nodes.push_back(p);
            M0v.push_back(m0[p]);
        }
        for (int d = 0; d < 3; ++d) {
            if (m1[3 * p + d] > 0) {
                X.edge[3 * p + d] = int(X.edges.size());
                X.edges.push_back({p, d});
                M1v.push_back(m1[3 * p + d]);
            }
            if (m2[3 * p + d] > 0) {
                X.face[3 * p + d] = int(X.faces.size());
                X.faces.push_back({p, d});
                M2v.push_back(m2[3 * p + d]);
            }
        }
    }
    X.M0 = Eigen::Map<VectorXd>(M0v.data(), Eigen::Index(M0v.size()));
    X.M1 = Eigen::Map<VectorXd>(M1v.data(), Eigen::Index(M1v.size()));
    X.M2 = Eigen::Map<VectorXd>(M2v.data(), Eigen::Index(M2v.size()));
    X.M3 = VectorXd::Constant(Eigen::Index(X.cells.size()), vol);

    using Trip = Eigen::Triplet<double>;
    std::vector<Trip> t0, t1, t2;
    for (std::size_t e = 0; e < X.edges.size(); ++e) {
        auto [p, d] = X.edges[e];
        t0.emplace_back(int(e), X.node[X.shift(p, d, 1)], 1.0 / dx);
        t0.emplace_back(int(e), X.node[p], -1.0 / dx);
    }
    for (std::size_t f = 0; f < X.faces.size(); ++f) {
        auto [p, m] = X.faces[f];
        int j = m == 0 ? 1 : 0, k = m == 2 ? 1 : 2;
        // (dA)_{jk} = d_j A_k - d_k A_j
        t1.emplace_back(int(f), X.edge[3 * X.shift(p, j, 1) + k], 1.0 / dx);
        t1.emplace_back(int(f), X.edge[3 * p + k], -1.0 / dx);
        t1.emplace_back(int(f), X.edge[3 * X.shift(p, k, 1) + j], -1.0 / dx);
        t1.emplace_back(int(f), X.edge[3 * p + j], 1.0 / dx);
    }
    for (std::size_t c = 0; c < X.cells.size(); ++c) {
        std::size_t p = X.cells[c];
        // dF = d_1 F_23 - d_2 F_13 + d_3 F_12, face normal m carries the pair without m
        const double sg[3] = {1.0, -1.0, 1.0};
        for (int m = 0; m < 3; ++m) {
            t2.emplace_back(int(c), X.face[3 * X.shift(p, m, 1) + m], sg[m] / dx);
            t2.emplace_back(int(c), X.face[3 * p + m], -sg[m] / dx);
        }
    }
    X.D0.resize(Eigen::Index(X.edges.size()), Eigen::Index(X.nodes.size()));
    X.D1.resize(Eigen::Index(X.faces.size()), Eigen::Index(X.edges.size()));
    X.D2.resize(Eigen::Index(X.cells.size()), Eigen::Index(X.faces.size()));
    X.D0.setFromTriplets(t0.begin(), t0.end());
    X.D1.setFromTriplets(t1.begin(), t1.end());
    X.D2.setFromTriplets(t2.begin(), t2.end());

    X.boundary_face.assign(X.faces.size(), 0);
    X.boundary_node.assign(X.nodes.size(), 0);
    for (std::size_t f = 0; f < X.faces.size(); ++f) {
        auto [p, m] = X.faces[f];
        const int z[3] = {0, 0, 0};
        int o[3] = {0, 0, 0};
        o[m] = 1;
        bool a = X.cell_on(p, z), b = X.cell_on(p, o);
        if (a != b) {
            X.boundary_face[f] = 1;
            int j = m == 0 ? 1 : 0, k = m == 2 ? 1 : 2;
            std::size_t corners[4] = {p, X.shift(p, j, 1), X.shift(p, k, 1), X.shift(X.shift(p, j, 1), k, 1)};
            for (std::size_t q : corners) X.boundary_node[X.node[q]] = 1;
        }
    }
    return X;
}

VectorXcd spmv(const SpMat& A, const VectorXcd& x)
{
    VectorXd re = A * x.real(), im = A * x.imag();
    VectorXcd y(re.size());
    y.real() = re;
    y.imag() = im;
    return y;
}

/// Preconditioned CG on real and imaginary parts, relative residual 1e-13.
VectorXcd solve_spd(const SpMat& A, const VectorXcd& b, const char* what)
{
    Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper, Eigen::IncompleteCholesky<double>> cg;
    cg.setTolerance(1e-13);
    cg.setMaxIterations(20000);
    cg.compute(A);
    if (cg.info() != Eigen::Success) throw Error(std::string("decompose_ball: preconditioner setup failed for the ") + what);
    VectorXcd y(b.size());
    for (int part = 0; part < 2; ++part) {
        VectorXd rhs = part == 0 ? VectorXd(b.real()) : VectorXd(b.imag());
        VectorXd x = VectorXd::Zero(rhs.size());
        if (rhs.norm() > 0) {
            x = cg.solve(rhs);
            if (cg.info() != Eigen::Success && cg.error() > 1e-9)
                throw Error(std::string("decompose_ball: no convergence for the ") + what + ", residual "
                            + std::to_string(cg.error()));
        }
        if (part == 0) y.real() = x;
        else y.imag() = x;
    }
    return y;
}

double mnorm(const VectorXd& M, const VectorXcd& x)
{
    double s = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) s += M[i] * std::norm(x[i]);
    return std::sqrt(s);
}

double radius(const Vec3& x) { return std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]); }

/// H^1 norm over the shell r > R' of a node cochain, nodes and edge midpoints tested against R'.
double shell_h1(const Complex& X, const VectorXcd& v, double Rin, double* grad_only = nullptr)
{
    double s0 = 0.0, s1 = 0.0;
    for (std::size_t n = 0; n < X.nodes.size(); ++n)
        if (radius(X.g->point(X.nodes[n])) > Rin) s0 += X.M0[Eigen::Index(n)] * std::norm(v[Eigen::Index(n)]);
    VectorXcd dv = spmv(X.D0, v);
    for (std::size_t e = 0; e < X.edges.size(); ++e) {
        auto [p, d] = X.edges[e];
        Vec3 x = X.g->point(p);
        x[d] += X.dx / 2;
        if (radius(x) > Rin) s1 += X.M1[Eigen::Index(e)] * std::norm(dv[Eigen::Index(e)]);
    }
    if (grad_only) *grad_only = std::sqrt(s1);
    return std::sqrt(s0 + s1);
}

/// Mean of each component along the edge from x to x + dx e_d, as a Fourier multiplier.
std::array<std::vector<cplx>, 3> edge_averages(const VectorField& u)
{
    const Grid& g = *u.grid();
    const int N = g.n();
    const double dx = g.spacing();
    std::array<std::vector<cplx>, 3> out;
    for (int d = 0; d < 3; ++d) {
        auto U = fft(g, u.comp(d));
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < N; ++j)
                for (int k = 0; k < N; ++k) {
                    int c[3] = {i, j, k};
                    double eta = g.freq(c[d]);
                    if (c[d] == N / 2) eta = 0.0;
                    cplx m = eta == 0.0 ? cplx(1.0) : (std::exp(cplx(0, eta * dx)) - 1.0) / cplx(0, eta * dx);
                    U[g.index(i, j, k)] *= m;
                }
        out[d] = ifft(g, U);
    }
    return out;
}

double smooth_step01(double s)
{
    if (s <= 0) return 0.0;
    if (s >= 1) return 1.0;
    double a = std::exp(-1.0 / s), b = std::exp(-1.0 / (1.0 - s));
    return a / (a + b);
}

} // namespace

HodgeDecomposition decompose_ball(const VectorField& u, const BallPair& balls)
{
    if (u.degree() != 1) throw Error("decompose_ball: 1-form expected");
    if (!(balls.inner > 0 && balls.outer > balls.inner)) throw Error("decompose_ball: need 0 < R' < R");
    const GridPtr& g = u.grid();
    const double umax = u.max_abs();
    for (std::size_t p = 0; p < g->size(); ++p)
        if (radius(g->point(p)) > balls.inner)
            for (int c = 0; c < 3; ++c)
                if (std::abs(u(c, p)) > 1e-3 * umax)
                    throw Error("decompose_ball: u does not vanish outside B'");
    Complex X = build_complex(g, balls.outer);

    auto avg = edge_averages(u);
    VectorXcd ue(Eigen::Index(X.edges.size()));
    for (std::size_t e = 0; e < X.edges.size(); ++e) {
        auto [p, d] = X.edges[e];
        ue[Eigen::Index(e)] = avg[d][p];
    }
    VectorXd M1inv = X.M1.cwiseInverse();
    SpMat K = SpMat(X.D2.transpose() * X.M3.asDiagonal() * X.D2)
              + SpMat(X.M2.asDiagonal() * X.D1 * M1inv.asDiagonal() * X.D1.transpose() * X.M2.asDiagonal());
    VectorXcd rhs = X.M2.asDiagonal() * spmv(X.D1, ue);
    VectorXcd Fv = solve_spd(K, rhs, "2-form problem");
    VectorXcd co = M1inv.asDiagonal() * spmv(SpMat(X.D1.transpose()), VectorXcd(X.M2.asDiagonal() * Fv));

    // Neumann problem for psi, one node pinned then the weighted mean removed
    SpMat L0 = X.D0.transpose() * X.M1.asDiagonal() * X.D0;
    const Eigen::Index V = L0.rows();
    SpMat L0r = L0.bottomRightCorner(V - 1, V - 1);
    VectorXcd r0 = spmv(SpMat(X.D0.transpose()), VectorXcd(X.M1.asDiagonal() * (ue - co)));
    VectorXcd psi = VectorXcd::Zero(V);
    psi.tail(V - 1) = solve_spd(L0r, VectorXcd(r0.tail(V - 1)), "Neumann problem");
    cplx mean = X.M0.dot(psi.real()) / X.M0.sum() + cplx(0, 1) * X.M0.dot(psi.imag()) / X.M0.sum();
    psi.array() -= mean;
    VectorXcd ex = spmv(X.D0, psi);

    HodgeDecomposition H;
    H.grid = g;
    H.balls = balls;
    H.active_cells = int(X.cells.size());
    H.psi = scalar_field(g);
    for (std::size_t n = 0; n < X.nodes.size(); ++n) H.psi(0, X.nodes[n]) = psi[Eigen::Index(n)];
    H.F = twoform_field(g);
    for (std::size_t f = 0; f < X.faces.size(); ++f) {
        auto [p, m] = X.faces[f];
        int j = m == 0 ? 1 : 0, k = m == 2 ? 1 : 2;
        H.F(pair_index(j, k), p) = Fv[Eigen::Index(f)];
    }
    H.coexact = vector_field(g);
    H.exact = vector_field(g);
    for (std::size_t e = 0; e < X.edges.size(); ++e) {
        auto [p, d] = X.edges[e];
        H.coexact(d, p) = co[Eigen::Index(e)];
        H.exact(d, p) = ex[Eigen::Index(e)];
    }
    H.u_L2 = mnorm(X.M1, ue);
    H.coexact_L2 = mnorm(X.M1, co);
    H.exact_L2 = mnorm(X.M1, ex);
    H.residual = H.u_L2 > 0 ? mnorm(X.M1, ue - ex - co) / H.u_L2 : 0.0;

    // faces transverse to the staircase surface: not boundary faces themselves but sharing a boundary edge
    std::vector<char> bedge(X.edges.size(), 0);
    for (int col = 0; col < X.D1.outerSize(); ++col)
        for (SpMat::InnerIterator it(X.D1, col); it; ++it)
            if (X.boundary_face[std::size_t(it.row())]) bedge[std::size_t(it.col())] = 1;
    double perp = 0.0, tot = 0.0;
    std::vector<char> touches(X.faces.size(), 0);
    for (int col = 0; col < X.D1.outerSize(); ++col)
        for (SpMat::InnerIterator it(X.D1, col); it; ++it)
            if (bedge[std::size_t(it.col())]) touches[std::size_t(it.row())] = 1;
    for (std::size_t f = 0; f < X.faces.size(); ++f) {
        double w = X.M2[Eigen::Index(f)] * std::norm(Fv[Eigen::Index(f)]);
        tot += w;
        if (touches[f] && !X.boundary_face[f]) perp += w;
    }
    H.normal_trace_residual = tot > 0 ? std::sqrt(perp / tot) : 0.0;

    H.du_Hm1 = sobolev_norm(d_form(u), -1.0);
    double sw = 0.0;
    cplx ss = 0.0;
    for (std::size_t n = 0; n < X.nodes.size(); ++n)
        if (radius(g->point(X.nodes[n])) > balls.inner) {
            sw += X.M0[Eigen::Index(n)];
            ss += X.M0[Eigen::Index(n)] * psi[Eigen::Index(n)];
        }
    H.psi_star = sw > 0 ? ss / sw : cplx(0.0);
    VectorXcd shifted = psi.array() - H.psi_star;
    H.psi_shell_H1 = shell_h1(X, shifted, balls.inner);
    return H;
}

ScalarField default_chi(const GridPtr& g, const BallPair& balls)
{
    const double r1 = balls.inner + 0.75 * (balls.outer - balls.inner);
    return from_function(g, [&](const Vec3& x) {
        double r = radius(x);
        return cplx(smooth_step01((r1 - r) / (r1 - balls.inner)));
    });
}

GaugeData gauge_phi(const HodgeDecomposition& H, const ScalarField& chi)
{
    if (chi.degree() != 0) throw Error("gauge_phi: chi must be a scalar field");
    require_same_grid(chi, H.psi);
    Complex X = build_complex(H.grid, H.balls.outer);
    for (std::size_t n = 0; n < X.nodes.size(); ++n) {
        std::size_t p = X.nodes[n];
        double r = radius(H.grid->point(p));
        if (r <= H.balls.inner && std::abs(chi(0, p) - 1.0) > 1e-12)
            throw Error("gauge_phi: chi must equal 1 on B'");
        if (X.boundary_node[n] && std::abs(chi(0, p)) > 1e-12)
            throw Error("gauge_phi: chi must vanish near the boundary of B");
    }
    GaugeData G;
    G.chi = chi;
    G.phi = scalar_field(H.grid);
    G.phi_prime = scalar_field(H.grid);
    VectorXcd pp(Eigen::Index(X.nodes.size())), shifted(Eigen::Index(X.nodes.size())),
        ch(Eigen::Index(X.nodes.size()));
    for (std::size_t n = 0; n < X.nodes.size(); ++n) {
        std::size_t p = X.nodes[n];
        cplx s = H.psi(0, p) - H.psi_star;
        G.phi(0, p) = chi(0, p) * s;
        G.phi_prime(0, p) = (1.0 - chi(0, p)) * s;
        pp[Eigen::Index(n)] = G.phi_prime(0, p);
        shifted[Eigen::Index(n)] = s;
        ch[Eigen::Index(n)] = chi(0, p);
    }
    shell_h1(X, pp, H.balls.inner, &G.grad_phi_prime_shell);
    G.psi_shell_H1 = shell_h1(X, shifted, H.balls.inner);
    VectorXcd dch = spmv(X.D0, ch);
    G.grad_chi_max = dch.size() ? dch.cwiseAbs().maxCoeff() : 0.0;
    double den = G.psi_shell_H1 * (1.0 + G.grad_chi_max);
    G.product_rule_ratio = den > 0 ? G.grad_phi_prime_shell / den : 0.0;
    return G;
}

} // namespace mstab
