#include "mstab/besov.hpp"
#include "mstab/potential.hpp"

#include <algorithm>
#include <cmath>

namespace mstab {

namespace {

double smooth_step(double s)
{
    if (s <= 0) return 0.0;
    if (s >= 1) return 1.0;
    double a = std::exp(-1.0 / s);
    double b = std::exp(-1.0 / (1.0 - s));
    return a / (a + b);
}

double norm3(const Vec3& v) { return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]); }

std::vector<std::vector<double>> power_spectra(const Field& u)
{
    const Grid& g = *u.grid();
    std::vector<std::vector<double>> P(u.ncomp());
    for (int c = 0; c < u.ncomp(); ++c) {
        auto F = fft(g, u.comp(c));
        P[c].resize(F.size());
        for (std::size_t i = 0; i < F.size(); ++i) P[c][i] = std::norm(F[i]);
    }
    return P;
}

// Parseval factor turning sum |F|^2 into an L^2 norm squared.
double parseval_factor(const Grid& g) { return g.cell_volume() / double(g.size()); }

struct Direction {
    Vec3 v;
    double w;
};

// 26-point Lebedev rule (exact up to degree 7), weights sum to 1.
std::vector<Direction> lebedev26()
{
    std::vector<Direction> d;
    for (int a = -1; a <= 1; ++a)
        for (int b = -1; b <= 1; ++b)
            for (int c = -1; c <= 1; ++c) {
                int nz = (a != 0) + (b != 0) + (c != 0);
                if (nz == 0) continue;
                double len = std::sqrt(double(nz));
                double w = nz == 1 ? 1.0 / 21.0 : (nz == 2 ? 4.0 / 105.0 : 9.0 / 280.0);
                d.push_back({{a / len, b / len, c / len}, w});
            }
    return d;
}

} // namespace

double lp_eta(double t) { return smooth_step(2.0 - t); }

double lp_kappa(double t) { return lp_eta(t) - lp_eta(2.0 * t); }

double lp_multiplier(int j, double t)
{
    if (j == 0) return lp_eta(t);
    return lp_eta(std::ldexp(t, -j)) - lp_eta(std::ldexp(t, -(j - 1)));
}

int lp_max_block(const Grid& g) { return int(std::floor(std::log2(g.nyquist()))) - 1; }

double lattice_corner_radius(const Grid& g) { return std::sqrt(3.0) * g.nyquist(); }

Field lp_project(const Field& u, int j)
{
    const Grid& g = *u.grid();
    int jm = lp_max_block(g);
    if (j < 0) throw Error("lp_project: block index must be >= 0");
    if (j > jm)
        throw Error("lp_project: block " + std::to_string(j) + " exceeds the Nyquist limit; maximal block is "
                    + std::to_string(jm));
    Field out(u.grid(), u.degree());
    for (int c = 0; c < u.ncomp(); ++c) {
        auto F = fft(g, u.comp(c));
        for (std::size_t i = 0; i < F.size(); ++i) F[i] *= lp_multiplier(j, norm3(g.frequency(i)));
        g.backward(F.data());
        out.comp(c) = std::move(F);
    }
    return out;
}

BesovResult besov_norm(const Field& u, const BesovParams& p)
{
    if (!(p.r == 1 || p.r == 2 || p.r == kRInf)) throw Error("besov_norm: r must be 1, 2 or inf");
    if (!std::isfinite(p.s)) throw Error("besov_norm: s must be finite");
    const Grid& g = *u.grid();
    BesovResult res;
    res.j_max = lp_max_block(g);
    auto P = power_spectra(u);
    const double pf = parseval_factor(g);
    res.block_l2.assign(res.j_max + 1, 0.0);
    double tail = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        double t = norm3(g.frequency(i));
        double tot = 0.0;
        for (int c = 0; c < u.ncomp(); ++c) tot += P[c][i];
        double covered = 0.0;
        for (int j = 0; j <= res.j_max; ++j) {
            double m = lp_multiplier(j, t);
            covered += m;
            res.block_l2[j] += m * m * tot;
        }
        tail += (1.0 - covered) * (1.0 - covered) * tot;
    }
    res.tail_l2 = std::sqrt(tail * pf);
    double acc = 0.0;
    for (int j = 0; j <= res.j_max; ++j) {
        res.block_l2[j] = std::sqrt(res.block_l2[j] * pf);
        double v = std::exp2(p.s * j) * res.block_l2[j];
        if (p.r == kRInf)
            acc = std::max(acc, v);
        else
            acc += std::pow(v, p.r);
    }
    res.value = p.r == kRInf ? acc : std::pow(acc, 1.0 / p.r);
    return res;
}

double sobolev_norm(const Field& u, double s)
{
    const Grid& g = *u.grid();
    auto P = power_spectra(u);
    double acc = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        Vec3 k = g.frequency(i);
        double w = std::pow(1.0 + k[0] * k[0] + k[1] * k[1] + k[2] * k[2], s);
        for (int c = 0; c < u.ncomp(); ++c) acc += w * P[c][i];
    }
    return std::sqrt(acc * parseval_factor(g));
}

std::pair<double, double> lp_equivalence_constants(const Grid& g, double s)
{
    int jm = lp_max_block(g);
    double band = std::exp2(jm);
    double lo = 1e300, hi = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        double t = norm3(g.frequency(i));
        if (t > band) continue;
        double wb = 0.0;
        for (int j = 0; j <= jm; ++j) {
            double m = lp_multiplier(j, t);
            wb += std::exp2(2.0 * s * j) * m * m;
        }
        double wh = std::pow(1.0 + t * t, s);
        double ratio = std::sqrt(wb / wh);
        lo = std::min(lo, ratio);
        hi = std::max(hi, ratio);
    }
    return {lo, hi};
}

SeminormResult diff_seminorm(const Field& u, double eps, double r)
{
    if (!(eps > 0 && eps < 1)) throw Error("diff_seminorm: eps must lie in (0,1)");
    if (!(r == 1 || r == 2 || r == kRInf)) throw Error("diff_seminorm: r must be 1, 2 or inf");
    const Grid& g = *u.grid();
    const int N = g.n();
    SeminormResult res;
    res.radial_order = 4;
    res.r_out = std::exp2(std::floor(std::log2(g.half_width())));
    const int m_min = 1 - int(std::lround(std::log2(res.r_out)));
    const int m_max = int(std::floor(std::log2(1.0 / g.spacing())));
    res.shells = m_max - m_min + 1;
    const double pf = parseval_factor(g);
    auto P = power_spectra(u);
    auto dirs = lebedev26();
    const int nc = u.ncomp();

    std::vector<double> kf(N);
    for (int k = 0; k < N; ++k) kf[k] = g.dfreq(k);

    // squared L^2 norm of u_c(.+y) - u_c for every component
    auto diff_sq = [&](const Vec3& y) {
        std::vector<cplx> e0(N), e1(N), e2(N);
        for (int k = 0; k < N; ++k) {
            e0[k] = std::polar(1.0, kf[k] * y[0]);
            e1[k] = std::polar(1.0, kf[k] * y[1]);
            e2[k] = std::polar(1.0, kf[k] * y[2]);
        }
        std::vector<double> out(nc, 0.0);
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < N; ++j) {
                cplx eij = e0[i] * e1[j];
                for (int k = 0; k < N; ++k) {
                    double cs = (eij * e2[k]).real();
                    double w = 2.0 - 2.0 * cs;
                    std::size_t idx = g.index(i, j, k);
                    for (int c = 0; c < nc; ++c) out[c] += w * P[c][idx];
                }
            }
        for (auto& v : out) v *= pf;
        return out;
    };

    static const double gl_x[4] = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
                                   0.8611363115940526};
    static const double gl_w[4] = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
                                   0.3478548451374538};

    std::vector<double> integral(nc, 0.0), sup(nc, 0.0);
    for (int m = m_min; m <= m_max; ++m) {
        double a = std::log(std::exp2(-m));
        double b = a + std::log(2.0);
        std::vector<std::pair<double, double>> nodes;
        for (int q = 0; q < 4; ++q) nodes.push_back({std::exp(0.5 * (a + b) + 0.5 * (b - a) * gl_x[q]), 0.5 * (b - a) * gl_w[q]});
        if (r == kRInf) {
            nodes.push_back({std::exp(a), 0.0});
            nodes.push_back({std::exp(b), 0.0});
        }
        for (auto [t, wq] : nodes) {
            for (const auto& d : dirs) {
                Vec3 y = {t * d.v[0], t * d.v[1], t * d.v[2]};
                auto ds = diff_sq(y);
                for (int c = 0; c < nc; ++c) {
                    double nrm = std::sqrt(ds[c]);
                    if (r == kRInf) {
                        sup[c] = std::max(sup[c], nrm / std::pow(t, eps));
                    } else {
                        // dy = 4 pi t^3 d(log t) times the angular weight
                        integral[c] += 4.0 * kPi * d.w * wq * std::pow(t, -r * eps) * std::pow(nrm, r);
                    }
                }
            }
        }
    }

    // region below the smallest shell, linearized through directional derivatives
    const double rho0 = std::exp2(-m_max);
    std::vector<double> inner(nc, 0.0);
    for (const auto& d : dirs) {
        for (int c = 0; c < nc; ++c) {
            double s = 0.0;
            for (std::size_t i = 0; i < g.size(); ++i) {
                int ii = int(i / (std::size_t(N) * N)), jj = int((i / N) % N), kk = int(i % N);
                double th = d.v[0] * kf[ii] + d.v[1] * kf[jj] + d.v[2] * kf[kk];
                s += th * th * P[c][i];
            }
            double grad = std::sqrt(s * pf);
            if (r == kRInf)
                inner[c] = std::max(inner[c], grad * std::pow(rho0, 1.0 - eps));
            else
                inner[c] += 4.0 * kPi * d.w * std::pow(grad, r) * std::pow(rho0, r * (1.0 - eps)) / (r * (1.0 - eps));
        }
    }

    // beyond r_out the translates have disjoint supports when the field is compact
    double diam = 0.0;
    {
        Vec3 lo = {1e300, 1e300, 1e300}, hi = {-1e300, -1e300, -1e300};
        bool any = false;
        for (std::size_t i = 0; i < g.size(); ++i) {
            bool nz = false;
            for (int c = 0; c < nc; ++c) nz = nz || u(c, i) != cplx(0.0);
            if (!nz) continue;
            any = true;
            Vec3 x = g.point(i);
            for (int a = 0; a < 3; ++a) {
                lo[a] = std::min(lo[a], x[a]);
                hi[a] = std::max(hi[a], x[a]);
            }
        }
        if (any) {
            Vec3 ext = {hi[0] - lo[0] + g.spacing(), hi[1] - lo[1] + g.spacing(), hi[2] - lo[2] + g.spacing()};
            diam = norm3(ext);
            if (ext[0] >= 2 * g.half_width() - g.spacing() || ext[1] >= 2 * g.half_width() - g.spacing()
                || ext[2] >= 2 * g.half_width() - g.spacing())
                diam = 1e300;
        }
    }
    res.outer_tail_exact = diam <= res.r_out;
    std::vector<double> outer(nc, 0.0);
    if (res.outer_tail_exact) {
        for (int c = 0; c < nc; ++c) {
            double l2sq = 0.0;
            for (double v : P[c]) l2sq += v;
            double far = std::sqrt(2.0 * l2sq * pf);
            if (r == kRInf)
                outer[c] = far * std::pow(res.r_out, -eps);
            else
                outer[c] = 4.0 * kPi * std::pow(far, r) * std::pow(res.r_out, -r * eps) / (r * eps);
        }
    }

    double total = 0.0;
    for (int c = 0; c < nc; ++c) {
        if (r == kRInf) {
            double v = std::max(sup[c], outer[c]);
            total += v * v;
            res.inner_tail = std::max(res.inner_tail, inner[c]);
            res.outer_tail = std::max(res.outer_tail, outer[c]);
        } else {
            double v = std::pow(integral[c] + inner[c] + outer[c], 1.0 / r);
            total += v * v;
            res.inner_tail += inner[c];
            res.outer_tail += outer[c];
        }
    }
    res.value = std::sqrt(total);
    return res;
}

AdmissibilityReport admissibility_check(const PotentialPair& P)
{
    AdmissibilityReport rep;
    const Grid& g = *P.A.grid();
    for (std::size_t i = 0; i < g.size(); ++i) {
        double a = 0.0;
        for (int c = 0; c < 3; ++c) a += std::norm(P.A(c, i));
        rep.A_sup = std::max(rep.A_sup, std::sqrt(a));
        rep.q_sup = std::max(rep.q_sup, std::abs(P.q(0, i)));
    }
    rep.A_seminorm = diff_seminorm(P.A, P.eps, P.r).value;
    rep.total = rep.A_sup + rep.A_seminorm + rep.q_sup;
    rep.M = P.M;
    rep.pass = rep.total <= P.M;
    return rep;
}

} // namespace mstab
