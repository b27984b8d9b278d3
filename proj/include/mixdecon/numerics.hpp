#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace mixdecon {

using cplx = std::complex<double>;

inline constexpr double kDefaultMassTolerance = 1e-3;

// One axis of a closed-open grid [lo, hi) with n nodes at lo + k*dx.
struct Axis {
    double lo = 0.0;
    double hi = 1.0;
    std::size_t n = 16;

    double spacing() const { return (hi - lo) / static_cast<double>(n); }
    double node(std::size_t k) const { return lo + static_cast<double>(k) * spacing(); }
};

class GridBox {
public:
    GridBox() = default;
    explicit GridBox(std::vector<Axis> axes);

    static GridBox uniform(std::size_t d, double lo, double hi, std::size_t n);

    std::size_t dim() const { return axes_.size(); }
    const Axis& axis(std::size_t a) const { return axes_.at(a); }
    const std::vector<Axis>& axes() const { return axes_; }
    std::size_t size() const;
    double cell_volume() const;
    std::vector<std::size_t> shape() const;

    // Dual frequency grid: per axis t_j = -pi/dx + j*2pi/(n dx), j = 0..n-1.
    GridBox frequency_box() const;

    // Coordinates of the node with row-major flat index `flat`.
    void coordinates(std::size_t flat, std::span<double> out) const;
    std::vector<double> coordinates(std::size_t flat) const;

    bool operator==(const GridBox& other) const;
    bool operator!=(const GridBox& other) const { return !(*this == other); }

private:
    std::vector<Axis> axes_;
};

enum class Domain { spatial, frequency };

// Immutable sampled function. `space` is always the spatial grid; frequency
// samples live on space.frequency_box() and keep the spatial origin for phases.
class GridFunction {
public:
    GridFunction() = default;
    GridFunction(GridBox space, Domain domain, std::vector<cplx> values);
    GridFunction(GridBox space, Domain domain, const std::vector<double>& values);

    using Sampler = std::function<cplx(std::span<const double>)>;
    static GridFunction sample(const GridBox& space, Domain domain, const Sampler& f);

    const GridBox& space_box() const { return space_; }
    GridBox box() const;
    Domain domain() const { return domain_; }
    std::size_t size() const { return values_.size(); }
    const std::vector<cplx>& values() const { return values_; }
    cplx operator[](std::size_t i) const { return values_[i]; }

    std::vector<double> real_values() const;
    double max_abs_imag() const;
    double cell_volume() const { return box().cell_volume(); }

private:
    GridBox space_;
    Domain domain_ = Domain::spatial;
    std::vector<cplx> values_;
};

class NormOrder {
public:
    explicit NormOrder(double u);
    static NormOrder infinity();
    bool is_infinite() const { return infinite_; }
    double value() const { return u_; }

private:
    NormOrder() = default;
    double u_ = 1.0;
    bool infinite_ = false;
};

double lp_norm(const GridFunction& f, NormOrder u);
double lp_distance(const GridFunction& f, const GridFunction& g, NormOrder u);
double hellinger(const GridFunction& p1, const GridFunction& p2,
                 double eps_mass = kDefaultMassTolerance);
double mass(const GridFunction& f);
bool is_density(const GridFunction& f, double eps_mass = kDefaultMassTolerance);
double sup_error(const GridFunction& f, const GridFunction& g);

GridFunction operator+(const GridFunction& f, const GridFunction& g);
GridFunction operator-(const GridFunction& f, const GridFunction& g);
GridFunction operator*(const GridFunction& f, const GridFunction& g);
GridFunction operator*(double a, const GridFunction& f);
GridFunction map_values(const GridFunction& f, const std::function<cplx(cplx)>& op);

// Pointwise product with a closed-form function of the node coordinates.
GridFunction multiply_by(const GridFunction& f, const GridFunction::Sampler& g);

// Continuous-transform approximation F(t) = int e^{-itx} f(x) dx and its inverse.
GridFunction fourier(const GridFunction& f);
GridFunction inverse_fourier(const GridFunction& F);

// Linear convolution of spatial functions with equal spacing; the output box
// starts at lo_f + lo_g and covers at least the Minkowski sum of the inputs.
GridFunction convolve(const GridFunction& f, const GridFunction& g);

// Spatial function restricted (with zero fill) to another grid of equal spacing
// whose nodes are aligned with the source nodes.
GridFunction resample_aligned(const GridFunction& f, const GridBox& target);

// ||f||_2 = parseval_constant(d) * ||fourier(f)||_2.
double parseval_constant(std::size_t d);

std::size_t next_pow2(std::size_t n);

// Version string of the FFT backend.
std::string fft_backend_version();

// Adaptive Gauss-Kronrod quadrature on [a, b]; b may be +infinity.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double rel_tol = 1e-12, double* error_estimate = nullptr);

// Composite 20-point Gauss-Legendre rule with `panels` equal panels.
double integrate_gl(const std::function<double(double)>& f, double a, double b,
                    std::size_t panels);

// CSV with header axis0,...,value_re,value_im and 17 significant digits.
void write_csv(const GridFunction& f, std::ostream& os);
GridFunction read_csv(std::istream& is, const GridBox& space, Domain domain);

}  // namespace mixdecon
