#include "mstab/grid.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>

namespace mstab {

namespace {

std::mutex& planner_mutex()
{
    static std::mutex m;
    return m;
}

} // namespace

struct Grid::Plans {
    fftw_plan fwd = nullptr;
    fftw_plan bwd = nullptr;
};

Grid::Grid(double L, int N) : L_(L), N_(N), plans_(std::make_unique<Plans>())
{
    std::vector<cplx> scratch(size());
    auto* p = reinterpret_cast<fftw_complex*>(scratch.data());
    std::lock_guard<std::mutex> lock(planner_mutex());
    unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    plans_->fwd = fftw_plan_dft_3d(N, N, N, p, p, FFTW_FORWARD, flags);
    plans_->bwd = fftw_plan_dft_3d(N, N, N, p, p, FFTW_BACKWARD, flags);
    if (!plans_->fwd || !plans_->bwd)
        throw Error("FFTW plan creation failed");
}

Grid::~Grid()
{
    std::lock_guard<std::mutex> lock(planner_mutex());
    if (plans_->fwd) fftw_destroy_plan(plans_->fwd);
    if (plans_->bwd) fftw_destroy_plan(plans_->bwd);
}

std::shared_ptr<const Grid> Grid::make(double L, int N)
{
    if (N % 2 != 0) throw Error("grid: N must be even, got " + std::to_string(N));
    if (N < 8 || N > 256) throw Error("grid: N must lie in [8, 256], got " + std::to_string(N));
    if (!(L > 0.0) || !std::isfinite(L)) throw Error("grid: half width must be positive");
    return std::shared_ptr<const Grid>(new Grid(L, N));
}

GridPtr make_grid(double L, int N) { return Grid::make(L, N); }

Vec3 Grid::point(std::size_t idx) const
{
    int k = int(idx % N_);
    int j = int((idx / N_) % N_);
    int i = int(idx / (std::size_t(N_) * N_));
    return {coord(i), coord(j), coord(k)};
}

Vec3 Grid::frequency(std::size_t idx) const
{
    int k = int(idx % N_);
    int j = int((idx / N_) % N_);
    int i = int(idx / (std::size_t(N_) * N_));
    return {freq(i), freq(j), freq(k)};
}

void Grid::forward(cplx* data) const
{
    auto* p = reinterpret_cast<fftw_complex*>(data);
    fftw_execute_dft(plans_->fwd, p, p);
}

void Grid::backward(cplx* data) const
{
    auto* p = reinterpret_cast<fftw_complex*>(data);
    fftw_execute_dft(plans_->bwd, p, p);
    const double s = 1.0 / double(size());
    for (std::size_t i = 0; i < size(); ++i) data[i] *= s;
}

Field::Field(GridPtr grid, int degree) : grid_(std::move(grid)), degree_(degree)
{
    if (!grid_) throw Error("field: null grid");
    if (degree < 0 || degree > 2) throw Error("field: degree must be 0, 1 or 2");
    comps_.assign(degree == 0 ? 1 : 3, std::vector<cplx>(grid_->size(), cplx(0.0)));
}

bool Field::finite() const
{
    for (const auto& c : comps_)
        for (const auto& v : c)
            if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
    return true;
}

double Field::max_abs() const
{
    double m = 0.0;
    for (const auto& c : comps_)
        for (const auto& v : c) m = std::max(m, std::abs(v));
    return m;
}

Field Field::conj() const
{
    Field out = *this;
    for (auto& c : out.comps_)
        for (auto& v : c) v = std::conj(v);
    return out;
}

Field Field::real_part() const
{
    Field out = *this;
    for (auto& c : out.comps_)
        for (auto& v : c) v = v.real();
    return out;
}

void require_same_grid(const Field& a, const Field& b)
{
    if (a.grid() != b.grid()) {
        if (!a.grid() || !b.grid() || a.grid()->n() != b.grid()->n()
            || a.grid()->half_width() != b.grid()->half_width())
            throw Error("grid mismatch between fields");
    }
}

static void require_same_shape(const Field& a, const Field& b)
{
    require_same_grid(a, b);
    if (a.degree() != b.degree()) throw Error("form degree mismatch");
}

Field& Field::operator+=(const Field& o)
{
    require_same_shape(*this, o);
    for (int c = 0; c < ncomp(); ++c)
        for (std::size_t i = 0; i < comps_[c].size(); ++i) comps_[c][i] += o.comps_[c][i];
    return *this;
}

Field& Field::operator-=(const Field& o)
{
    require_same_shape(*this, o);
    for (int c = 0; c < ncomp(); ++c)
        for (std::size_t i = 0; i < comps_[c].size(); ++i) comps_[c][i] -= o.comps_[c][i];
    return *this;
}

Field& Field::operator*=(cplx s)
{
    for (auto& c : comps_)
        for (auto& v : c) v *= s;
    return *this;
}

Field operator+(Field a, const Field& b) { return a += b; }
Field operator-(Field a, const Field& b) { return a -= b; }
Field operator*(cplx s, Field a) { return a *= s; }

ScalarField scalar_field(const GridPtr& g) { return Field(g, 0); }
VectorField vector_field(const GridPtr& g) { return Field(g, 1); }
TwoFormField twoform_field(const GridPtr& g) { return Field(g, 2); }

std::vector<cplx> fft(const Grid& g, const std::vector<cplx>& f)
{
    std::vector<cplx> F = f;
    g.forward(F.data());
    return F;
}

std::vector<cplx> ifft(const Grid& g, const std::vector<cplx>& F)
{
    std::vector<cplx> f = F;
    g.backward(f.data());
    return f;
}

namespace {

// Multiplies the spectrum by i*dfreq along one axis.
void apply_derivative(const Grid& g, std::vector<cplx>& F, int axis)
{
    const int N = g.n();
    std::vector<double> k1(N);
    for (int k = 0; k < N; ++k) k1[k] = g.dfreq(k);
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j)
            for (int k = 0; k < N; ++k) {
                double e = axis == 0 ? k1[i] : (axis == 1 ? k1[j] : k1[k]);
                F[g.index(i, j, k)] *= cplx(0.0, e);
            }
}

std::vector<cplx> derivative(const Grid& g, const std::vector<cplx>& F, int axis)
{
    std::vector<cplx> D = F;
    apply_derivative(g, D, axis);
    g.backward(D.data());
    return D;
}

} // namespace

Field d_form(const Field& u)
{
    const Grid& g = *u.grid();
    if (u.degree() == 0) {
        Field out(u.grid(), 1);
        auto F = fft(g, u.comp(0));
        for (int a = 0; a < 3; ++a) out.comp(a) = derivative(g, F, a);
        return out;
    }
    if (u.degree() == 1) {
        Field out(u.grid(), 2);
        std::array<std::vector<cplx>, 3> F;
        for (int a = 0; a < 3; ++a) F[a] = fft(g, u.comp(a));
        for (int j = 0; j < 3; ++j)
            for (int k = j + 1; k < 3; ++k) {
                std::vector<cplx> djk = F[k];
                apply_derivative(g, djk, j);
                std::vector<cplx> dkj = F[j];
                apply_derivative(g, dkj, k);
                for (std::size_t i = 0; i < djk.size(); ++i) djk[i] -= dkj[i];
                g.backward(djk.data());
                out.comp(pair_index(j, k)) = std::move(djk);
            }
        return out;
    }
    throw Error("d_form: degree-2 input has no exterior derivative in this artifact");
}

Field delta_form(const Field& F)
{
    const Grid& g = *F.grid();
    if (F.degree() == 1) {
        Field out(F.grid(), 0);
        std::vector<cplx> acc(g.size(), cplx(0.0));
        for (int a = 0; a < 3; ++a) {
            auto S = fft(g, F.comp(a));
            apply_derivative(g, S, a);
            for (std::size_t i = 0; i < acc.size(); ++i) acc[i] -= S[i];
        }
        g.backward(acc.data());
        out.comp(0) = std::move(acc);
        return out;
    }
    if (F.degree() == 2) {
        // (delta F)_k = -sum_j d_j F_{jk} with F antisymmetric
        Field out(F.grid(), 1);
        std::array<std::vector<cplx>, 3> S;
        for (int c = 0; c < 3; ++c) S[c] = fft(g, F.comp(c));
        for (int k = 0; k < 3; ++k) {
            std::vector<cplx> acc(g.size(), cplx(0.0));
            for (int j = 0; j < 3; ++j) {
                if (j == k) continue;
                double sign = j < k ? 1.0 : -1.0;
                std::vector<cplx> t = S[pair_index(std::min(j, k), std::max(j, k))];
                apply_derivative(g, t, j);
                for (std::size_t i = 0; i < acc.size(); ++i) acc[i] -= sign * t[i];
            }
            g.backward(acc.data());
            out.comp(k) = std::move(acc);
        }
        return out;
    }
    throw Error("delta_form: degree-0 input has no codifferential");
}

cplx inner_product(const Field& u, const Field& v)
{
    require_same_shape(u, v);
    cplx s = 0.0;
    for (int c = 0; c < u.ncomp(); ++c) {
        const auto& a = u.comp(c);
        const auto& b = v.comp(c);
        for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * std::conj(b[i]);
    }
    return s * u.grid()->cell_volume();
}

double l2_norm(const Field& u) { return std::sqrt(std::max(0.0, inner_product(u, u).real())); }

double parseval_sum(const Field& u)
{
    const Grid& g = *u.grid();
    double s = 0.0;
    for (int c = 0; c < u.ncomp(); ++c) {
        auto F = fft(g, u.comp(c));
        for (const auto& v : F) s += std::norm(v);
    }
    return s * g.cell_volume() / double(g.size());
}

Field multiply(const ScalarField& a, const Field& v)
{
    require_same_grid(a, v);
    if (a.degree() != 0) throw Error("multiply: scalar factor expected");
    Field out = v;
    for (int c = 0; c < out.ncomp(); ++c)
        for (std::size_t i = 0; i < out.comp(c).size(); ++i) out(c, i) *= a(0, i);
    return out;
}

ScalarField dot(const VectorField& a, const VectorField& b)
{
    require_same_grid(a, b);
    if (a.degree() != 1 || b.degree() != 1) throw Error("dot: 1-forms expected");
    ScalarField out(a.grid(), 0);
    for (int c = 0; c < 3; ++c)
        for (std::size_t i = 0; i < out.comp(0).size(); ++i) out(0, i) += a(c, i) * b(c, i);
    return out;
}

ScalarField dot(const CVec3& z, const VectorField& v)
{
    if (v.degree() != 1) throw Error("dot: 1-form expected");
    ScalarField out(v.grid(), 0);
    for (int c = 0; c < 3; ++c)
        for (std::size_t i = 0; i < out.comp(0).size(); ++i) out(0, i) += z[c] * v(c, i);
    return out;
}

ScalarField component(const Field& u, int c)
{
    ScalarField out(u.grid(), 0);
    out.comp(0) = u.comp(c);
    return out;
}

cplx fourier_hat(const Field& u, int c, const Vec3& xi)
{
    const Grid& g = *u.grid();
    const int N = g.n();
    std::array<std::vector<cplx>, 3> ph;
    for (int a = 0; a < 3; ++a) {
        ph[a].resize(N);
        for (int i = 0; i < N; ++i) ph[a][i] = std::polar(1.0, g.coord(i) * xi[a]);
    }
    const auto& f = u.comp(c);
    cplx s = 0.0;
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) {
            cplx pij = ph[0][i] * ph[1][j];
            cplx row = 0.0;
            for (int k = 0; k < N; ++k) row += f[g.index(i, j, k)] * ph[2][k];
            s += pij * row;
        }
    return s * g.cell_volume();
}

ScalarField plane_wave(const GridPtr& g, const Vec3& xi)
{
    return from_function(g, [&](const Vec3& x) {
        return std::polar(1.0, x[0] * xi[0] + x[1] * xi[1] + x[2] * xi[2]);
    });
}

ScalarField from_function(const GridPtr& g, const std::function<cplx(const Vec3&)>& f)
{
    ScalarField out(g, 0);
    for (std::size_t i = 0; i < g->size(); ++i) out(0, i) = f(g->point(i));
    return out;
}

} // namespace mstab
