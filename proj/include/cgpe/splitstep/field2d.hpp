#pragma once

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <cstddef>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace cgpe::splitstep {

using cdouble = std::complex<double>;

/// Uniform periodic grid on [ax, bx) x [ay, by). Row-major: value (x_j, y_k)
/// sits at index k * nx + j.
struct Grid2D {
  int nx = 256;
  int ny = 256;
  double ax = -15.0, bx = 15.0;
  double ay = -15.0, by = 15.0;

  double hx() const { return (bx - ax) / nx; }
  double hy() const { return (by - ay) / ny; }
  double x(int j) const { return ax + j * hx(); }
  double y(int k) const { return ay + k * hy(); }
  std::size_t size() const { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }
  std::size_t index(int j, int k) const { return static_cast<std::size_t>(k) * nx + j; }

  void validate() const {
    if (nx <= 0 || ny <= 0 || nx % 2 || ny % 2) throw std::invalid_argument("grid divisions must be even and positive");
    if (!(bx > ax) || !(by > ay)) throw std::invalid_argument("grid bounds must be increasing");
  }

  /// Angular wavenumber of FFT index l along one axis (l' in -n/2 .. n/2-1).
  static double wavenumber(int l, int n, double length) {
    const int s = l < n / 2 ? l : l - n;
    return 2.0 * std::numbers::pi * s / length;
  }

  bool operator==(const Grid2D&) const = default;
};

struct Field2D {
  Grid2D grid;
  double t = 0.0;
  std::vector<cdouble> values;

  Field2D() = default;
  explicit Field2D(const Grid2D& g, double time = 0.0) : grid(g), t(time), values(g.size(), cdouble{}) {
    grid.validate();
  }

  cdouble& operator()(int j, int k) { return values[grid.index(j, k)]; }
  const cdouble& operator()(int j, int k) const { return values[grid.index(j, k)]; }

  bool all_finite() const {
    for (const auto& v : values) {
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
    }
    return true;
  }

  /// sum |psi|^2 (the discrete l2 norm squared, without the cell area).
  double norm2() const {
    double s = 0.0;
    for (const auto& v : values) s += std::norm(v);
    return s;
  }
};

/// Sample f(x, y) on the grid.
template <class F>
Field2D sample(const Grid2D& g, F&& f, double t = 0.0) {
  Field2D out(g, t);
  for (int k = 0; k < g.ny; ++k) {
    for (int j = 0; j < g.nx; ++j) out(j, k) = f(g.x(j), g.y(k));
  }
  return out;
}

/// In-place 2D complex FFT on an owned buffer. Plans use FFTW_ESTIMATE so
/// results do not depend on timing measurements. Move-only.
class Fft2D {
 public:
  explicit Fft2D(const Grid2D& g) : nx_(g.nx), ny_(g.ny) {
    buf_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * g.size()));
    if (!buf_) throw std::bad_alloc();
    fwd_ = fftw_plan_dft_2d(ny_, nx_, buf_, buf_, FFTW_FORWARD, FFTW_ESTIMATE);
    bwd_ = fftw_plan_dft_2d(ny_, nx_, buf_, buf_, FFTW_BACKWARD, FFTW_ESTIMATE);
    if (!fwd_ || !bwd_) {
      release();
      throw std::runtime_error("FFTW planning failed");
    }
  }
  Fft2D(const Fft2D&) = delete;
  Fft2D& operator=(const Fft2D&) = delete;
  Fft2D(Fft2D&& o) noexcept { steal(o); }
  Fft2D& operator=(Fft2D&& o) noexcept {
    if (this != &o) {
      release();
      steal(o);
    }
    return *this;
  }
  ~Fft2D() { release(); }

  cdouble* data() { return reinterpret_cast<cdouble*>(buf_); }
  std::size_t size() const { return static_cast<std::size_t>(nx_) * ny_; }

  void load(const std::vector<cdouble>& v) { std::copy(v.begin(), v.end(), data()); }
  void store(std::vector<cdouble>& v) const {
    const cdouble* d = reinterpret_cast<const cdouble*>(buf_);
    std::copy(d, d + size(), v.begin());
  }
  void forward() { fftw_execute(fwd_); }
  /// Unnormalized inverse; callers fold 1/(nx ny) into their multipliers.
  void backward() { fftw_execute(bwd_); }

 private:
  void release() {
    if (fwd_) fftw_destroy_plan(fwd_);
    if (bwd_) fftw_destroy_plan(bwd_);
    if (buf_) fftw_free(buf_);
    fwd_ = bwd_ = nullptr;
    buf_ = nullptr;
  }
  void steal(Fft2D& o) {
    nx_ = o.nx_;
    ny_ = o.ny_;
    buf_ = o.buf_;
    fwd_ = o.fwd_;
    bwd_ = o.bwd_;
    o.buf_ = nullptr;
    o.fwd_ = o.bwd_ = nullptr;
  }

  int nx_ = 0;
  int ny_ = 0;
  fftw_complex* buf_ = nullptr;
  fftw_plan fwd_ = nullptr;
  fftw_plan bwd_ = nullptr;
};

}  // namespace cgpe::splitstep
