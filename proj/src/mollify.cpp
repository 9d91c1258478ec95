#include "mstab/mollify.hpp"

#include <cmath>

namespace mstab {

double Mollifier::integral() const
{
    cplx s = 0.0;
    for (const auto& v : kernel.comp(0)) s += v;
    return s.real() * grid->cell_volume();
}

Mollifier make_mollifier(const GridPtr& g, double tau)
{
    const double hmin = 2.0 * g->spacing();
    if (!(tau <= 1.0)) throw Error("make_mollifier: tau must be <= 1");
    if (!(tau >= hmin))
        throw Error("make_mollifier: tau = " + std::to_string(tau) + " is below the resolvable scale; minimal tau is "
                    + std::to_string(hmin));
    if (tau >= g->half_width()) throw Error("make_mollifier: tau exceeds the box");
    Mollifier m;
    m.grid = g;
    m.tau = tau;
    m.kernel = scalar_field(g);
    const int N = g->n();
    const double dx = g->spacing();
    auto off = [&](int i) { return (i < N / 2 ? i : i - N) * dx; };
    double sum = 0.0;
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j)
            for (int k = 0; k < N; ++k) {
                double x = off(i), y = off(j), z = off(k);
                double r2 = (x * x + y * y + z * z) / (tau * tau);
                double v = r2 < 1.0 ? std::exp(-1.0 / (1.0 - r2)) : 0.0;
                m.kernel(0, g->index(i, j, k)) = v;
                sum += v;
            }
    m.kernel *= 1.0 / (sum * g->cell_volume());
    m.hat = fft(*g, m.kernel.comp(0));
    for (auto& v : m.hat) v *= g->cell_volume();
    return m;
}

Field convolve(const Mollifier& m, const Field& u)
{
    require_same_grid(m.kernel, u);
    const Grid& g = *u.grid();
    Field out(u.grid(), u.degree());
    for (int c = 0; c < u.ncomp(); ++c) {
        auto F = fft(g, u.comp(c));
        for (std::size_t i = 0; i < F.size(); ++i) F[i] *= m.hat[i];
        g.backward(F.data());
        out.comp(c) = std::move(F);
    }
    return out;
}

SplitResult split(const VectorField& A, const Mollifier& m)
{
    if (A.degree() != 1) throw Error("split: 1-form expected");
    const Grid& g = *A.grid();
    const double lim = g.half_width() - m.tau - g.spacing();
    for (std::size_t i = 0; i < g.size(); ++i) {
        Vec3 x = g.point(i);
        if (std::abs(x[0]) <= lim && std::abs(x[1]) <= lim && std::abs(x[2]) <= lim) continue;
        for (int c = 0; c < 3; ++c)
            if (A(c, i) != cplx(0.0))
                throw Error("split: support reaches the tau-collar of the box, wrap-around would contaminate A_sharp");
    }
    SplitResult s;
    s.sharp = convolve(m, A);
    s.flat = A - s.sharp;
    return s;
}

SplitResult split(const VectorField& A, double tau) { return split(A, make_mollifier(A.grid(), tau)); }

std::pair<double, double> mollifier_derivative_constants(const Mollifier& m)
{
    const Grid& g = *m.grid;
    auto l1 = [&](const ScalarField& f) {
        double s = 0.0;
        for (const auto& v : f.comp(0)) s += std::abs(v);
        return s * g.cell_volume();
    };
    VectorField grad = d_form(m.kernel);
    double c1 = 0.0, c2 = 0.0;
    for (int a = 0; a < 3; ++a) {
        ScalarField ga = component(grad, a);
        c1 = std::max(c1, l1(ga));
        VectorField hess = d_form(ga);
        for (int b = 0; b < 3; ++b) c2 = std::max(c2, l1(component(hess, b)));
    }
    return {c1 * m.tau, c2 * m.tau * m.tau};
}

} // namespace mstab
