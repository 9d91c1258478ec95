#include "mstab/cgo.hpp"
#include "mstab/mollify.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mstab {

namespace {

double norm3(const Vec3& v) { return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]); }

Vec3 cross(const Vec3& a, const Vec3& b)
{
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

double smooth_step(double s)
{
    if (s <= 0) return 0.0;
    if (s >= 1) return 1.0;
    double a = std::exp(-1.0 / s);
    double b = std::exp(-1.0 / (1.0 - s));
    return a / (a + b);
}

// Per-axis frequency tables, optionally shifted by kappa.
struct Freqs {
    int N;
    std::array<std::vector<double>, 3> k;

    Freqs(const Grid& g, const Vec3& kappa, bool derivative_convention)
        : N(g.n())
    {
        for (int a = 0; a < 3; ++a) {
            k[a].resize(N);
            for (int i = 0; i < N; ++i)
                k[a][i] = (derivative_convention ? g.dfreq(i) : g.freq(i)) + kappa[a];
        }
    }
    Vec3 at(std::size_t idx) const
    {
        int kk = int(idx % N), jj = int((idx / N) % N), ii = int(idx / (std::size_t(N) * N));
        return {k[0][ii], k[1][jj], k[2][kk]};
    }
};

// Spectral realization of P_zeta = P0 + V in a basis shifted by kappa.
class ConjugatedOp {
public:
    ConjugatedOp(const VectorField& A, const ScalarField& q, const CVec3& zeta, double h, const Vec3& kappa)
        : g_(*A.grid()), f_(g_, kappa, false), zeta_(zeta), h_(h)
    {
        const std::size_t n = g_.size();
        ScalarField divA = delta_form(A);
        divA *= -1.0;
        ScalarField A2 = dot(A, A);
        ScalarField zA = dot(zeta, A);
        c0_.resize(n);
        for (int a = 0; a < 3; ++a) {
            mag_[a].resize(n);
            for (std::size_t i = 0; i < n; ++i) mag_[a][i] = cplx(0.0, -2.0 * h * h) * A(a, i);
        }
        for (std::size_t i = 0; i < n; ++i)
            c0_[i] = cplx(0.0, -2.0 * h) * zA(0, i) + cplx(0.0, -h * h) * divA(0, i) + h * h * (A2(0, i) + q(0, i));
        sym_.resize(n);
        inv_sym_.resize(n);
        wt_.resize(n);
        const double delta = 1e-8 * g_.freq_unit() * h;
        for (std::size_t i = 0; i < n; ++i) {
            Vec3 e = f_.at(i);
            double e2 = e[0] * e[0] + e[1] * e[1] + e[2] * e[2];
            cplx ze = zeta[0] * e[0] + zeta[1] * e[1] + zeta[2] * e[2];
            sym_[i] = h * h * e2 - cplx(0.0, 2.0 * h) * ze;
            inv_sym_[i] = std::conj(sym_[i]) / (std::norm(sym_[i]) + delta * delta);
            wt_[i] = 1.0 / (1.0 + h * h * e2);
        }
    }

    /// gradient in the shifted basis, from the spectrum X
    void grad_from_spectrum(const CVector& X, std::array<CVector, 3>& out) const
    {
        for (int a = 0; a < 3; ++a) {
            out[a] = X;
            for (std::size_t i = 0; i < X.size(); ++i) out[a][i] *= cplx(0.0, f_.at(i)[a]);
            g_.backward(out[a].data());
        }
    }

    void apply_V(const CVector& x, const CVector& X, CVector& out) const
    {
        std::array<CVector, 3> gr;
        grad_from_spectrum(X, gr);
        out.resize(x.size());
        for (std::size_t i = 0; i < x.size(); ++i)
            out[i] = c0_[i] * x[i] + mag_[0][i] * gr[0][i] + mag_[1][i] * gr[1][i] + mag_[2][i] * gr[2][i];
    }

    void apply_P0(const CVector& X, CVector& out) const
    {
        out = X;
        for (std::size_t i = 0; i < out.size(); ++i) out[i] *= sym_[i];
        g_.backward(out.data());
    }

    void apply(const CVector& x, CVector& out) const
    {
        CVector X = fft(g_, x);
        CVector v, p0;
        apply_V(x, X, v);
        apply_P0(X, p0);
        out.resize(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) out[i] = p0[i] + v[i];
    }

    void apply_parts(const CVector& x, CVector& p0, CVector& v) const
    {
        CVector X = fft(g_, x);
        apply_V(x, X, v);
        apply_P0(X, p0);
    }

    /// x + P0^{-1} V x
    void apply_preconditioned(const CVector& x, CVector& out) const
    {
        CVector X = fft(g_, x);
        CVector v;
        apply_V(x, X, v);
        precondition(v);
        out.resize(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] + v[i];
    }

    void precondition(CVector& v) const
    {
        g_.forward(v.data());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] *= inv_sym_[i];
        g_.backward(v.data());
    }

    double hm1scl(const CVector& v) const
    {
        CVector V = fft(g_, v);
        double s = 0.0;
        for (std::size_t i = 0; i < V.size(); ++i) s += wt_[i] * std::norm(V[i]);
        return std::sqrt(s * g_.cell_volume() / double(g_.size()));
    }

    const Freqs& freqs() const { return f_; }

private:
    const Grid& g_;
    Freqs f_;
    CVec3 zeta_;
    double h_;
    std::array<CVector, 3> mag_;
    CVector c0_, sym_, inv_sym_;
    std::vector<double> wt_;
};

/// Smallest |h^2 |e|^2 - 2ih zeta.e| over the lattice shifted by kappa.
double min_symbol(const Grid& g, const CVec3& zeta, double h, const Vec3& kappa)
{
    double m = INFINITY;
    for (std::size_t i = 0; i < g.size(); ++i) {
        Vec3 k = g.frequency(i);
        Vec3 e = {k[0] + kappa[0], k[1] + kappa[1], k[2] + kappa[2]};
        cplx ze = zeta[0] * e[0] + zeta[1] * e[1] + zeta[2] * e[2];
        m = std::min(m, std::abs(h * h * (e[0] * e[0] + e[1] * e[1] + e[2] * e[2]) - cplx(0.0, 2.0 * h) * ze));
    }
    return m;
}

Vec3 choose_kappa(const Vec3& mu1, const Grid& g, const CVec3& zeta, double h)
{
    // smallest integer vector parallel to mu1, if one with small entries exists
    double amax = std::max({std::abs(mu1[0]), std::abs(mu1[1]), std::abs(mu1[2])});
    for (int scale = 1; scale <= 6; ++scale) {
        Vec3 p;
        bool ok = true;
        for (int a = 0; a < 3; ++a) {
            double v = mu1[a] / amax * scale;
            p[a] = std::round(v);
            if (std::abs(v - p[a]) > 1e-9) ok = false;
        }
        if (!ok) continue;
        double p2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
        double c = g.freq_unit() / (2.0 * p2);
        return {c * p[0], c * p[1], c * p[2]};
    }
    // no short lattice direction: shift along mu1 by the fraction of a lattice unit that keeps the symbol largest
    Vec3 best{0.0, 0.0, 0.0};
    double best_min = -1.0;
    for (int j = 1; j < 16; ++j) {
        double c = g.freq_unit() * j / 16.0;
        Vec3 k = {c * mu1[0], c * mu1[1], c * mu1[2]};
        double m = min_symbol(g, zeta, h, k);
        if (m > best_min) {
            best_min = m;
            best = k;
        }
    }
    return best;
}

ScalarField quasi_phase(const GridPtr& g, const Vec3& kappa, double sign)
{
    return from_function(g, [&](const Vec3& x) {
        return std::polar(1.0, sign * (kappa[0] * x[0] + kappa[1] * x[1] + kappa[2] * x[2]));
    });
}

std::vector<std::size_t> region_nodes(const Grid& g, const Region& U)
{
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (U.contains(g.point(i))) idx.push_back(i);
    return idx;
}

} // namespace

cplx cdot(const CVec3& a, const CVec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

Zetas make_zetas(const Vec3& xi, double h, bool reflect)
{
    double nx = norm3(xi);
    if (!(nx > 0)) throw Error("make_zetas: xi must be nonzero");
    double cap = std::min(1.0, 2.0 / nx);
    if (!(h > 0) || h > cap * (1 + 1e-14))
        throw Error("make_zetas: h = " + std::to_string(h) + " outside (0, " + std::to_string(cap) + "]");
    Zetas z;
    z.xi = xi;
    z.h = h;
    int ax = 0;
    for (int a = 1; a < 3; ++a)
        if (std::abs(xi[a]) < std::abs(xi[ax])) ax = a;
    Vec3 xn = {xi[0] / nx, xi[1] / nx, xi[2] / nx};
    Vec3 e = {0, 0, 0};
    e[ax] = 1.0;
    double p = xn[ax];
    Vec3 m1 = {e[0] - p * xn[0], e[1] - p * xn[1], e[2] - p * xn[2]};
    double n1 = norm3(m1);
    for (auto& v : m1) v /= n1;
    // clean round-off so that axis-aligned frames are exact
    for (auto& v : m1)
        if (std::abs(v) < 1e-15) v = 0.0;
    Vec3 m2 = cross(xn, m1);
    for (auto& v : m2)
        if (std::abs(v) < 1e-15) v = 0.0;
    if (reflect)
        for (auto& v : m2) v = -v;
    z.mu1 = m1;
    z.mu2 = m2;
    double s = std::sqrt(std::max(0.0, 1.0 - h * h * nx * nx / 4.0));
    const cplx I(0.0, 1.0);
    for (int a = 0; a < 3; ++a) {
        z.zeta1[a] = I * h * xi[a] / 2.0 + m1[a] + I * s * m2[a];
        z.zeta2[a] = -I * h * xi[a] / 2.0 - m1[a] + I * s * m2[a];
        z.zeta0_1[a] = m1[a] + I * m2[a];
        z.zeta0_2[a] = -m1[a] + I * m2[a];
    }
    return z;
}

ScalarField dbar_inverse(const CVec3& zeta0, const ScalarField& f, DbarDiagnostics* diag)
{
    if (f.degree() != 0) throw Error("dbar_inverse: scalar field expected");
    Vec3 re = {zeta0[0].real(), zeta0[1].real(), zeta0[2].real()};
    Vec3 im = {zeta0[0].imag(), zeta0[1].imag(), zeta0[2].imag()};
    if (std::abs(norm3(re) - 1) > 1e-10 || std::abs(norm3(im) - 1) > 1e-10
        || std::abs(re[0] * im[0] + re[1] * im[1] + re[2] * im[2]) > 1e-10)
        throw Error("dbar_inverse: Re zeta0 and Im zeta0 must be orthonormal");
    const Grid& g = *f.grid();
    Freqs fr(g, {0, 0, 0}, true);
    const double delta = 1e-8 * g.freq_unit();
    const double thresh = 1e-6 * g.freq_unit();
    auto F = fft(g, f.comp(0));
    double tot = 0.0, chr = 0.0;
    int nchar = 0;
    for (std::size_t i = 0; i < F.size(); ++i) {
        Vec3 e = fr.at(i);
        cplx sigma = cplx(0.0, 1.0) * (zeta0[0] * e[0] + zeta0[1] * e[1] + zeta0[2] * e[2]);
        double p = std::norm(F[i]);
        tot += p;
        if (std::abs(sigma) < thresh) {
            ++nchar;
            chr += p;
        }
        if (e[0] == 0 && e[1] == 0 && e[2] == 0)
            F[i] = 0.0;
        else
            F[i] *= std::conj(sigma) / (std::norm(sigma) + delta * delta);
    }
    if (diag) {
        diag->characteristic_modes = nchar;
        diag->characteristic_energy = tot > 0 ? chr / tot : 0.0;
    }
    g.backward(F.data());
    ScalarField out(f.grid(), 0);
    out.comp(0) = std::move(F);
    return out;
}

PhaseResult phase(const CVec3& zeta0, const VectorField& A)
{
    PhaseResult res;
    ScalarField f = dot(zeta0, A);
    f *= cplx(0.0, -1.0);
    res.phi = dbar_inverse(zeta0, f, &res.dbar);
    const Grid& g = *A.grid();
    Freqs fr(g, {0, 0, 0}, true);
    auto Fp = fft(g, res.phi.comp(0));
    auto Ff = fft(g, f.comp(0));
    const double thresh = 1e-6 * g.freq_unit();
    double num = 0.0, den = 0.0, num_off = 0.0, den_off = 0.0;
    for (std::size_t i = 0; i < Fp.size(); ++i) {
        Vec3 e = fr.at(i);
        cplx sigma = cplx(0.0, 1.0) * (zeta0[0] * e[0] + zeta0[1] * e[1] + zeta0[2] * e[2]);
        cplx lhs = sigma * Fp[i];
        double d = std::norm(lhs - Ff[i]);
        num += d;
        den += std::norm(Ff[i]);
        if (std::abs(sigma) >= thresh) {
            num_off += d;
            den_off += std::norm(Ff[i]);
        }
    }
    res.residual = den > 0 ? std::sqrt(num / den) : 0.0;
    res.residual_off_characteristic = den_off > 0 ? std::sqrt(num_off / den_off) : 0.0;
    return res;
}

std::pair<double, double> scl_norms(const ScalarField& u, double h)
{
    const Grid& g = *u.grid();
    auto F = fft(g, u.comp(0));
    double s1 = 0.0, sm1 = 0.0;
    for (std::size_t i = 0; i < F.size(); ++i) {
        Vec3 k = g.frequency(i);
        double w = 1.0 + h * h * (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]);
        s1 += w * std::norm(F[i]);
        sm1 += std::norm(F[i]) / w;
    }
    double pf = g.cell_volume() / double(g.size());
    return {std::sqrt(s1 * pf), std::sqrt(sm1 * pf)};
}

bool Region::contains(const Vec3& x) const
{
    if (kind == Kind::Cube) {
        double hs = size / 2 + 1e-12;
        return std::abs(x[0]) <= hs && std::abs(x[1]) <= hs && std::abs(x[2]) <= hs;
    }
    return norm3(x) <= size + 1e-12;
}

double Region::circumradius() const { return kind == Kind::Cube ? std::sqrt(3.0) * size / 2 : size; }

ScalarField region_cutoff(const GridPtr& g, const Region& U)
{
    const double r1 = U.circumradius() + 0.1;
    const double L = g->half_width();
    if (r1 >= L) throw Error("region_cutoff: the box is too small for the region");
    const double width = std::min(1.0, 0.8 * (L - r1));
    return from_function(g, [&](const Vec3& x) { return cplx(smooth_step((r1 + width - norm3(x)) / width)); });
}

VectorField CGOSolution::grad_b() const
{
    VectorField gb = multiply(a, grad_phi);
    gb += grad_r;
    return gb;
}

ScalarField conjugated_operator(const VectorField& A, const ScalarField& q, const CVec3& zeta, double h,
                                const ScalarField& v)
{
    ConjugatedOp op(A, q, zeta, h, {0, 0, 0});
    ScalarField out(v.grid(), 0);
    op.apply(v.comp(0), out.comp(0));
    return out;
}

CGOSolution build_cgo(const PotentialPair& P, const Vec3& xi, double h, int which, const CGOOptions& opt)
{
    if (which != 1 && which != 2) throw Error("build_cgo: which must be 1 or 2");
    const GridPtr& gp = P.grid();
    const Grid& g = *gp;
    CGOSolution s;
    s.which = which;
    s.zetas = make_zetas(xi, h, opt.reflect);
    s.zeta = which == 1 ? s.zetas.zeta1 : s.zetas.zeta2;
    s.zeta0 = which == 1 ? s.zetas.zeta0_1 : s.zetas.zeta0_2;
    s.tau = opt.tau > 0 ? opt.tau : std::pow(h, 1.0 / (P.eps + 2.0));
    s.note = "remainder solved on the periodic box and restricted to U";

    VectorField A = which == 1 ? P.A : P.A.conj();
    ScalarField q = which == 1 ? P.q : P.q.conj();

    Mollifier mol = make_mollifier(gp, s.tau);
    SplitResult sp = split(A, mol);
    PhaseResult ph = phase(s.zeta0, sp.sharp);
    s.phi = std::move(ph.phi);
    s.dbar = ph.dbar;
    s.transport_residual_spectral = ph.residual_off_characteristic;
    s.grad_phi = d_form(s.phi);
    s.a = s.phi;
    for (auto& v : s.a.comp(0)) v = std::exp(v);
    s.weight_max = s.a.max_abs();

    // chain-rule transport residual a (zeta0.grad phi + i zeta0.A_sharp), off the characteristic set
    {
        ScalarField zg = dot(s.zeta0, s.grad_phi);
        ScalarField f = dot(s.zeta0, sp.sharp);
        f *= cplx(0.0, -1.0);
        Freqs fr(g, {0, 0, 0}, true);
        auto F = fft(g, f.comp(0));
        const double thresh = 1e-6 * g.freq_unit();
        for (std::size_t i = 0; i < F.size(); ++i) {
            Vec3 e = fr.at(i);
            cplx sigma = cplx(0.0, 1.0) * (s.zeta0[0] * e[0] + s.zeta0[1] * e[1] + s.zeta0[2] * e[2]);
            if (std::abs(sigma) < thresh) F[i] = 0.0;
        }
        g.backward(F.data());
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            num += std::norm(s.a(0, i) * (zg(0, i) - F[i]));
            den += std::norm(s.a(0, i) * F[i]);
        }
        s.transport_residual = den > 0 ? std::sqrt(num / den) : 0.0;
    }

    // w = -P_zeta a on the box, cut off outside a neighbourhood of U
    ConjugatedOp op0(A, q, s.zeta, h, {0, 0, 0});
    ScalarField chi = region_cutoff(gp, opt.region);
    s.w = scalar_field(gp);
    op0.apply(s.a.comp(0), s.w.comp(0));
    for (std::size_t i = 0; i < g.size(); ++i) s.w(0, i) *= -chi(0, i).real();
    s.w_Hm1scl = scl_norms(s.w, h).second;

    // quasi-periodic shift keeps the Faddeev symbol away from zero
    Vec3 mu = which == 1 ? s.zetas.mu1 : Vec3{-s.zetas.mu1[0], -s.zetas.mu1[1], -s.zetas.mu1[2]};
    s.kappa = choose_kappa(mu, g, s.zeta, h);
    ConjugatedOp op(A, q, s.zeta, h, s.kappa);
    ScalarField em = quasi_phase(gp, s.kappa, -1.0);
    CVector wt(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) wt[i] = em(0, i) * s.w(0, i);
    CVector rhs = wt;
    op.precondition(rhs);
    CVector x(g.size(), cplx(0.0));
    LinOp A_op = [&op](const CVector& in, CVector& out) { op.apply_preconditioned(in, out); };

    double wn = op.hm1scl(wt);
    double gm_tol = 1e-2 * opt.tol;
    int used = 0;
    s.converged = false;
    if (wn == 0.0) {
        s.converged = true;
    } else {
        for (int attempt = 0; attempt < 4 && used < opt.max_iter; ++attempt) {
            KrylovResult kr = gmres(A_op, rhs, x, gm_tol, opt.max_iter - used, opt.restart);
            used += kr.iterations;
            s.history.insert(s.history.end(), kr.history.begin(), kr.history.end());
            CVector Px;
            op.apply(x, Px);
            for (std::size_t i = 0; i < Px.size(); ++i) Px[i] = wt[i] - Px[i];
            s.residual_equation = op.hm1scl(Px) / wn;
            if (s.residual_equation <= opt.tol) {
                s.converged = true;
                break;
            }
            gm_tol *= 0.1;
        }
    }
    s.iterations = used;

    // r = e^{i kappa x} r_periodic and its gradient
    ScalarField ep = quasi_phase(gp, s.kappa, 1.0);
    s.r = scalar_field(gp);
    s.grad_r = vector_field(gp);
    {
        CVector X = fft(g, x);
        std::array<CVector, 3> gr;
        op.grad_from_spectrum(X, gr);
        for (std::size_t i = 0; i < g.size(); ++i) {
            s.r(0, i) = ep(0, i) * x[i];
            for (int c = 0; c < 3; ++c) s.grad_r(c, i) = ep(0, i) * gr[c][i];
        }
    }

    // norms on U
    auto nodes = region_nodes(g, opt.region);
    double l2 = 0.0, gl2 = 0.0;
    Vec3 rz = {s.zeta[0].real(), s.zeta[1].real(), s.zeta[2].real()};
    std::vector<double> logterms;
    logterms.reserve(nodes.size());
    for (std::size_t i : nodes) {
        l2 += std::norm(s.r(0, i));
        double gg = 0.0;
        for (int c = 0; c < 3; ++c) gg += std::norm(s.grad_r(c, i));
        gl2 += gg;
        Vec3 xp = g.point(i);
        cplx b = s.a(0, i) + s.r(0, i);
        double mag = std::norm(b);
        for (int c = 0; c < 3; ++c) {
            cplx gb = s.zeta[c] / h * b + s.a(0, i) * s.grad_phi(c, i) + s.grad_r(c, i);
            mag += std::norm(gb);
        }
        double ex = 2.0 * (rz[0] * xp[0] + rz[1] * xp[1] + rz[2] * xp[2]) / h;
        logterms.push_back(ex + std::log(std::max(mag, 1e-300)));
    }
    s.remainder_H1scl = std::sqrt((l2 + h * h * gl2) * g.cell_volume());
    if (!logterms.empty()) {
        double mx = *std::max_element(logterms.begin(), logterms.end());
        double acc = 0.0;
        for (double t : logterms) acc += std::exp(t - mx);
        s.log_u_H1 = 0.5 * (mx + std::log(acc * g.cell_volume()));
    }

    // agreement of the grid w with the closed-form functional on a bump inside U
    {
        ScalarField test = ball_bump(gp, {0, 0, 0}, 0.9 * (opt.region.kind == Region::Kind::Cube ? opt.region.size / 2 : opt.region.size));
        cplx grid_val = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) grid_val += s.w(0, i) * test(0, i);
        grid_val *= g.cell_volume();
        cplx form_val = w_functional(P.A, P.q, s, test);
        double scale = std::max(std::abs(grid_val), 1e-300);
        s.w_formula_gap = std::abs(grid_val - form_val) / scale;
        if (std::abs(grid_val) == 0.0 && std::abs(form_val) == 0.0) s.w_formula_gap = 0.0;
    }
    return s;
}

cplx w_functional(const VectorField& A_in, const ScalarField& q_in, const CGOSolution& s, const ScalarField& test)
{
    const GridPtr& gp = A_in.grid();
    const Grid& g = *gp;
    VectorField A = s.which == 1 ? A_in : A_in.conj();
    ScalarField q = s.which == 1 ? q_in : q_in.conj();
    const double h = s.zetas.h;
    Mollifier mol = make_mollifier(gp, s.tau);
    SplitResult sp = split(A, mol);
    ScalarField lapphi = delta_form(s.grad_phi);
    VectorField gtest = d_form(test);
    CVec3 zc;
    for (int a = 0; a < 3; ++a) zc[a] = s.zeta[a] - s.zeta0[a];
    const cplx I(0.0, 1.0);
    cplx acc = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        cplx a = s.a(0, i);
        CVec3 ga;
        cplx gg = 0.0;
        for (int c = 0; c < 3; ++c) {
            ga[c] = a * s.grad_phi(c, i);
            gg += s.grad_phi(c, i) * s.grad_phi(c, i);
        }
        cplx lap_a = a * (-lapphi(0, i) + gg);
        cplx A2 = 0.0, Aga = 0.0, zcga = 0.0, z0Af = 0.0, zcA = 0.0, Agt = 0.0;
        for (int c = 0; c < 3; ++c) {
            A2 += A(c, i) * A(c, i);
            Aga += A(c, i) * ga[c];
            zcga += zc[c] * ga[c];
            z0Af += s.zeta0[c] * sp.flat(c, i);
            zcA += zc[c] * A(c, i);
            Agt += A(c, i) * gtest(c, i);
        }
        cplx wv = h * h * lap_a + I * h * h * Aga - h * h * (A2 + q(0, i)) * a + 2.0 * h * zcga
                  + 2.0 * h * I * z0Af * a + 2.0 * h * I * zcA * a;
        acc += wv * test(0, i) - h * h * I * a * Agt;
    }
    return acc * g.cell_volume();
}

double cgo_equation_residual(const PotentialPair& P, const CGOSolution& s, const Region& U)
{
    const GridPtr& gp = P.grid();
    const Grid& g = *gp;
    VectorField A = s.which == 1 ? P.A : P.A.conj();
    ScalarField q = s.which == 1 ? P.q : P.q.conj();
    const double h = s.zetas.h;
    ConjugatedOp op0(A, q, s.zeta, h, {0, 0, 0});
    ConjugatedOp opk(A, q, s.zeta, h, s.kappa);
    CVector pa0, va, pr0, vr;
    op0.apply_parts(s.a.comp(0), pa0, va);
    ScalarField em = quasi_phase(gp, s.kappa, -1.0);
    CVector rt(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) rt[i] = em(0, i) * s.r(0, i);
    opk.apply_parts(rt, pr0, vr);
    double res = 0.0, m1 = 0.0, m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!U.contains(g.point(i))) continue;
        cplx ph = std::conj(em(0, i));
        cplx tot = pa0[i] + va[i] + ph * (pr0[i] + vr[i]);
        res += std::norm(tot);
        m1 += std::norm(pa0[i]);
        m2 += std::norm(va[i]);
        m3 += std::norm(pr0[i]);
        m4 += std::norm(vr[i]);
    }
    double mag = std::sqrt(m1) + std::sqrt(m2) + std::sqrt(m3) + std::sqrt(m4);
    return mag > 0 ? std::sqrt(res) / mag : 0.0;
}

double calibrate_h_max(const PotentialPair& P, const Vec3& xi, const CGOOptions& opt, int steps)
{
    double cap = std::min(1.0, 2.0 / norm3(xi));
    double hmin = 0.0;
    {
        double tau_min = 2.0 * P.grid()->spacing();
        hmin = std::pow(tau_min, P.eps + 2.0);
    }
    auto ok = [&](double h) {
        try {
            return build_cgo(P, xi, h, 1, opt).converged;
        } catch (const Error&) {
            return false;
        }
    };
    double hi = cap;
    if (ok(hi)) return hi;
    double lo = hi / 2;
    while (lo > hmin && !ok(lo)) {
        hi = lo;
        lo /= 2;
    }
    if (lo <= hmin) return 0.0;
    for (int i = 0; i < steps; ++i) {
        double mid = 0.5 * (lo + hi);
        if (ok(mid))
            lo = mid;
        else
            hi = mid;
    }
    return lo;
}

} // namespace mstab
