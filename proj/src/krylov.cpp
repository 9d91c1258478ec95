#include "mstab/krylov.hpp"

#include <cmath>

namespace mstab {

cplx vdot(const CVector& a, const CVector& b)
{
    cplx s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
    return s;
}

double vnorm(const CVector& a)
{
    double s = 0.0;
    for (const auto& v : a) s += std::norm(v);
    return std::sqrt(s);
}

KrylovResult gmres(const LinOp& A, const CVector& b, CVector& x, double tol, int max_iter, int restart)
{
    KrylovResult res;
    const std::size_t n = b.size();
    if (x.size() != n) x.assign(n, cplx(0.0));
    const double bn = vnorm(b);
    if (bn == 0.0) {
        x.assign(n, cplx(0.0));
        res.converged = true;
        return res;
    }
    CVector Ax(n), r(n), w(n);
    while (res.iterations < max_iter) {
        A(x, Ax);
        for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - Ax[i];
        double beta = vnorm(r);
        res.rel_residual = beta / bn;
        if (res.history.empty()) res.history.push_back(res.rel_residual);
        if (res.rel_residual <= tol) {
            res.converged = true;
            return res;
        }
        const int m = restart;
        std::vector<CVector> V(m + 1, CVector(n));
        std::vector<std::vector<cplx>> H(m + 1, std::vector<cplx>(m, cplx(0.0)));
        std::vector<cplx> cs(m), sn(m), g(m + 1, cplx(0.0));
        for (std::size_t i = 0; i < n; ++i) V[0][i] = r[i] / beta;
        g[0] = beta;
        int k = 0;
        for (; k < m && res.iterations < max_iter; ++k) {
            ++res.iterations;
            A(V[k], w);
            for (int j = 0; j <= k; ++j) {
                H[j][k] = vdot(V[j], w);
                for (std::size_t i = 0; i < n; ++i) w[i] -= H[j][k] * V[j][i];
            }
            double hn = vnorm(w);
            H[k + 1][k] = hn;
            if (hn > 0)
                for (std::size_t i = 0; i < n; ++i) V[k + 1][i] = w[i] / hn;
            for (int j = 0; j < k; ++j) {
                cplx t = std::conj(cs[j]) * H[j][k] + std::conj(sn[j]) * H[j + 1][k];
                H[j + 1][k] = -sn[j] * H[j][k] + cs[j] * H[j + 1][k];
                H[j][k] = t;
            }
            double den = std::sqrt(std::norm(H[k][k]) + std::norm(H[k + 1][k]));
            if (den == 0.0) {
                res.breakdown = true;
                ++k;
                break;
            }
            cs[k] = H[k][k] / den;
            sn[k] = H[k + 1][k] / den;
            H[k][k] = den;
            H[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] = std::conj(cs[k]) * g[k];
            res.rel_residual = std::abs(g[k + 1]) / bn;
            res.history.push_back(res.rel_residual);
            if (res.rel_residual <= tol || hn == 0.0) {
                ++k;
                break;
            }
        }
        std::vector<cplx> y(k);
        for (int i = k - 1; i >= 0; --i) {
            cplx s = g[i];
            for (int j = i + 1; j < k; ++j) s -= H[i][j] * y[j];
            y[i] = s / H[i][i];
        }
        for (int j = 0; j < k; ++j)
            for (std::size_t i = 0; i < n; ++i) x[i] += y[j] * V[j][i];
        if (res.breakdown) break;
        if (res.rel_residual <= tol) {
            A(x, Ax);
            for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - Ax[i];
            res.rel_residual = vnorm(r) / bn;
            res.converged = res.rel_residual <= 10 * tol;
            if (res.converged) return res;
        }
    }
    A(x, Ax);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - Ax[i];
    res.rel_residual = vnorm(r) / bn;
    res.converged = res.rel_residual <= tol;
    return res;
}

KrylovResult bicgstab(const LinOp& A, const CVector& b, CVector& x, double tol, int max_iter)
{
    KrylovResult res;
    const std::size_t n = b.size();
    if (x.size() != n) x.assign(n, cplx(0.0));
    const double bn = vnorm(b);
    if (bn == 0.0) {
        x.assign(n, cplx(0.0));
        res.converged = true;
        return res;
    }
    CVector r(n), rhat(n), p(n, 0.0), v(n, 0.0), s(n), t(n);
    A(x, t);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - t[i];
    rhat = r;
    cplx rho = 1.0, alpha = 1.0, omega = 1.0;
    res.rel_residual = vnorm(r) / bn;
    res.history.push_back(res.rel_residual);
    while (res.iterations < max_iter && res.rel_residual > tol) {
        ++res.iterations;
        cplx rho_new = vdot(rhat, r);
        if (std::abs(rho_new) < 1e-300 || std::abs(omega) < 1e-300) {
            res.breakdown = true;
            break;
        }
        cplx beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
        A(p, v);
        cplx den = vdot(rhat, v);
        if (std::abs(den) < 1e-300) {
            res.breakdown = true;
            break;
        }
        alpha = rho / den;
        for (std::size_t i = 0; i < n; ++i) s[i] = r[i] - alpha * v[i];
        if (vnorm(s) / bn <= tol) {
            for (std::size_t i = 0; i < n; ++i) x[i] += alpha * p[i];
            r = s;
            res.rel_residual = vnorm(r) / bn;
            res.history.push_back(res.rel_residual);
            break;
        }
        A(s, t);
        double tt = vdot(t, t).real();
        if (tt == 0.0) {
            res.breakdown = true;
            break;
        }
        omega = vdot(t, s) / tt;
        for (std::size_t i = 0; i < n; ++i) {
            x[i] += alpha * p[i] + omega * s[i];
            r[i] = s[i] - omega * t[i];
        }
        res.rel_residual = vnorm(r) / bn;
        res.history.push_back(res.rel_residual);
    }
    // true residual
    A(x, t);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - t[i];
    res.rel_residual = vnorm(r) / bn;
    res.converged = res.rel_residual <= tol * 1.5;
    return res;
}

KrylovResult cg(const LinOp& A, const CVector& b, CVector& x, double tol, int max_iter,
                const std::vector<double>* inv_diag)
{
    KrylovResult res;
    const std::size_t n = b.size();
    if (x.size() != n) x.assign(n, cplx(0.0));
    const double bn = vnorm(b);
    if (bn == 0.0) {
        x.assign(n, cplx(0.0));
        res.converged = true;
        return res;
    }
    CVector r(n), z(n), p(n), Ap(n);
    A(x, Ap);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - Ap[i];
    auto precond = [&](const CVector& in, CVector& out) {
        if (inv_diag)
            for (std::size_t i = 0; i < n; ++i) out[i] = in[i] * (*inv_diag)[i];
        else
            out = in;
    };
    precond(r, z);
    p = z;
    cplx rz = vdot(r, z);
    res.rel_residual = vnorm(r) / bn;
    res.history.push_back(res.rel_residual);
    while (res.iterations < max_iter && res.rel_residual > tol) {
        ++res.iterations;
        A(p, Ap);
        cplx pAp = vdot(p, Ap);
        if (std::abs(pAp) < 1e-300) {
            res.breakdown = true;
            break;
        }
        cplx alpha = rz / pAp;
        for (std::size_t i = 0; i < n; ++i) {
            x[i] += alpha * p[i];
            r[i] -= alpha * Ap[i];
        }
        res.rel_residual = vnorm(r) / bn;
        res.history.push_back(res.rel_residual);
        precond(r, z);
        cplx rz_new = vdot(r, z);
        cplx beta = rz_new / rz;
        rz = rz_new;
        for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
    A(x, Ap);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - Ap[i];
    res.rel_residual = vnorm(r) / bn;
    res.converged = res.rel_residual <= tol * 1.5;
    return res;
}

} // namespace mstab
