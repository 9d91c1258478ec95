#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace mstab {

using cplx = std::complex<double>;
using Vec3 = std::array<double, 3>;
using CVec3 = std::array<cplx, 3>;

inline constexpr double kPi = 3.14159265358979323846;

/// Error raised by every module of the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/**
 * Periodic box [-L, L)^3 sampled at N points per axis.
 *
 * Node (i, j, k) sits at x = -L + (i, j, k) * 2L/N and is stored at
 * index (i*N + j)*N + k. The dual lattice is (pi/L) * Z^3 with the usual
 * wrap for indices >= N/2. Transforms use FFTW plans created once per grid.
 */
class Grid {
public:
    ~Grid();
    Grid(const Grid&) = delete;
    Grid& operator=(const Grid&) = delete;

    static std::shared_ptr<const Grid> make(double L, int N);

    double half_width() const { return L_; }
    int n() const { return N_; }
    double spacing() const { return 2.0 * L_ / N_; }
    double freq_unit() const { return kPi / L_; }
    double cell_volume() const { double h = spacing(); return h * h * h; }
    std::size_t size() const { return std::size_t(N_) * N_ * N_; }

    double coord(int i) const { return -L_ + i * spacing(); }
    /// Wrapped lattice frequency of index k along one axis.
    double freq(int k) const { return freq_unit() * (k < N_ / 2 ? k : k - N_); }
    /// Frequency used by first derivatives: the Nyquist index is mapped to 0.
    double dfreq(int k) const { return k == N_ / 2 ? 0.0 : freq(k); }
    /// Largest |xi| component representable, (pi/L) * N/2.
    double nyquist() const { return freq_unit() * (N_ / 2); }

    std::size_t index(int i, int j, int k) const
    {
        return (std::size_t(i) * N_ + std::size_t(j)) * N_ + std::size_t(k);
    }
    Vec3 point(std::size_t idx) const;
    Vec3 frequency(std::size_t idx) const;

    /// Unnormalized forward transform, sum f_j exp(-2 pi i jk/N), in place.
    void forward(cplx* data) const;
    /// Inverse transform including the 1/N^3 factor, in place.
    void backward(cplx* data) const;

private:
    Grid(double L, int N);
    double L_;
    int N_;
    struct Plans;
    std::unique_ptr<Plans> plans_;
};

using GridPtr = std::shared_ptr<const Grid>;

/**
 * @param L half width of the box
 * @param N points per axis, even, 8..256
 */
GridPtr make_grid(double L, int N);

/**
 * Complex field of form degree 0, 1 or 2.
 *
 * Degree 1 stores (A_1, A_2, A_3); degree 2 stores the (1,2), (1,3), (2,3)
 * components in that order.
 */
class Field {
public:
    Field() = default;
    Field(GridPtr grid, int degree);

    const GridPtr& grid() const { return grid_; }
    int degree() const { return degree_; }
    int ncomp() const { return int(comps_.size()); }

    std::vector<cplx>& comp(int c) { return comps_[c]; }
    const std::vector<cplx>& comp(int c) const { return comps_[c]; }
    cplx& operator()(int c, std::size_t idx) { return comps_[c][idx]; }
    cplx operator()(int c, std::size_t idx) const { return comps_[c][idx]; }

    bool finite() const;
    double max_abs() const;
    Field conj() const;
    Field real_part() const;

    Field& operator+=(const Field& o);
    Field& operator-=(const Field& o);
    Field& operator*=(cplx s);

private:
    GridPtr grid_;
    int degree_ = 0;
    std::vector<std::vector<cplx>> comps_;
};

Field operator+(Field a, const Field& b);
Field operator-(Field a, const Field& b);
Field operator*(cplx s, Field a);

using ScalarField = Field;
using VectorField = Field;
using TwoFormField = Field;

ScalarField scalar_field(const GridPtr& g);
VectorField vector_field(const GridPtr& g);
TwoFormField twoform_field(const GridPtr& g);

/// Throws unless both fields live on grids with the same (L, N).
void require_same_grid(const Field& a, const Field& b);

/// Index of the (j,k) component, j < k, inside a 2-form.
inline int pair_index(int j, int k) { return j == 0 ? k - 1 : 2; }

std::vector<cplx> fft(const Grid& g, const std::vector<cplx>& f);
std::vector<cplx> ifft(const Grid& g, const std::vector<cplx>& F);

/// Exterior derivative: gradient for degree 0, curl-type 2-form for degree 1.
Field d_form(const Field& u);
/// Codifferential, the L^2 adjoint of d_form on the periodic box.
Field delta_form(const Field& F);
/// sum u * conj(v) * spacing^3 over all components.
cplx inner_product(const Field& u, const Field& v);
double l2_norm(const Field& u);
/// The same inner product evaluated from FFT coefficients.
double parseval_sum(const Field& u);

/// Pointwise product of a scalar field with a field of any degree.
Field multiply(const ScalarField& a, const Field& v);
ScalarField dot(const VectorField& a, const VectorField& b);
ScalarField dot(const CVec3& z, const VectorField& v);
ScalarField component(const Field& u, int c);

/**
 * Fourier transform with the e^{+ix.xi} convention, by direct quadrature.
 * @param u field
 * @param c component
 * @param xi frequency, need not lie on the lattice
 */
cplx fourier_hat(const Field& u, int c, const Vec3& xi);

/// Field value e^{i x.xi} on the grid.
ScalarField plane_wave(const GridPtr& g, const Vec3& xi);

/// Samples f at every node.
ScalarField from_function(const GridPtr& g, const std::function<cplx(const Vec3&)>& f);

} // namespace mstab
