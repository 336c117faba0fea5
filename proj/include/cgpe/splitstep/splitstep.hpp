#pragma once

// Strang splitting for
//   i psi_t = -Lap psi + V psi + |psi|^2 psi + i (w(x) - sigma |psi|^2) psi
// on a periodic box: half step of the local nonlinear/pump/decay flow (solved
// in closed form), full Fourier step of the free Schrodinger flow, half step.

#include "cgpe/core/model.hpp"
#include "cgpe/diagnostics/diagnostics.hpp"
#include "cgpe/splitstep/field2d.hpp"

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cgpe::splitstep {

/// Exact solution over a duration dt of the pointwise flow
///   rho_t = 2 (w - sigma rho) rho,   theta_t = -V - g rho,
/// applied to psi (g = 1 in the model; g = 0 gives the linear equation used
/// by the oscillator oracle). The three branches (w > 0, w = 0, sigma = 0) are
/// the closed forms of the logistic and pure-growth equations; expm1/log1p
/// keep them accurate for small w dt.
inline cdouble nonlinear_point(cdouble psi, double w, double V, double sigma, double dt, bool zero_pump,
                               double g = 1.0) {
  const double n0 = std::norm(psi);
  if (n0 == 0.0) return psi;
  double log_amp = 0.0;  // log of the amplitude factor
  double phase = -V * dt;
  if (sigma > 0.0) {
    double x = 0.0;  // ratio - 1
    if (zero_pump) {
      x = 2.0 * sigma * n0 * dt;
    } else {
      x = sigma * n0 * std::expm1(2.0 * w * dt) / w;
      log_amp = w * dt;
    }
    if (!(x > -1.0)) throw std::domain_error("nonlinear substep: non-positive radicand");
    const double lr = std::log1p(x);
    log_amp -= 0.5 * lr;
    phase -= g * lr / (2.0 * sigma);
  } else {
    if (zero_pump) {
      phase -= g * n0 * dt;
    } else {
      log_amp = w * dt;
      phase -= g * n0 * std::expm1(2.0 * w * dt) / (2.0 * w);
    }
  }
  return psi * std::exp(log_amp) * std::polar(1.0, phase);
}

/// Precomputed data for one (grid, tau) pair. Move-only (owns FFT plans).
class StepPlan {
 public:
  using Fn = std::function<double(double, double)>;

  /// Model pump w = alpha Theta(R - |x|) and radial trap V(|x|).
  StepPlan(const Grid2D& g, const ModelParams& p, double tau)
      : StepPlan(
            g, [p](double x, double y) { return pump_profile(std::hypot(x, y), p); },
            [p](double x, double y) { return p.trap(std::hypot(x, y)); }, p.sigma, tau, p.alpha) {}

  /// Arbitrary nonnegative pump and potential functions of (x, y).
  /// `pump_scale` sets the zero-pump threshold 1e-14 * pump_scale
  /// (defaults to the maximum of the pump on the grid); `nonlinearity` scales
  /// the cubic term.
  StepPlan(const Grid2D& g, const Fn& pump, const Fn& potential, double sigma, double tau,
           double pump_scale = -1.0, double nonlinearity = 1.0)
      : grid_(g), tau_(tau), sigma_(sigma), nonlinearity_(nonlinearity), fft_(g) {
    g.validate();
    if (!(tau >= 0.0) || !std::isfinite(tau)) throw std::invalid_argument("tau must be finite and >= 0");
    if (!(sigma >= 0.0)) throw std::invalid_argument("sigma must be >= 0");
    if (!std::isfinite(nonlinearity)) throw std::invalid_argument("nonlinearity must be finite");
    pump_.resize(g.size());
    potential_.resize(g.size());
    for (int k = 0; k < g.ny; ++k) {
      for (int j = 0; j < g.nx; ++j) {
        const std::size_t i = g.index(j, k);
        pump_[i] = pump(g.x(j), g.y(k));
        potential_[i] = potential(g.x(j), g.y(k));
        if (!std::isfinite(pump_[i]) || pump_[i] < 0.0 || !std::isfinite(potential_[i])) {
          throw std::invalid_argument("pump must be finite and >= 0, potential finite");
        }
        pump_max_ = std::max(pump_max_, pump_[i]);
      }
    }
    const double scale = pump_scale >= 0.0 ? pump_scale : pump_max_;
    zero_pump_.resize(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) zero_pump_[i] = !(pump_[i] > 1e-14 * scale);
    kinetic_.resize(g.size());
    const double inv = 1.0 / static_cast<double>(g.size());
    for (int k = 0; k < g.ny; ++k) {
      const double ky = Grid2D::wavenumber(k, g.ny, g.by - g.ay);
      for (int j = 0; j < g.nx; ++j) {
        const double kx = Grid2D::wavenumber(j, g.nx, g.bx - g.ax);
        kinetic_[g.index(j, k)] = std::polar(inv, -(kx * kx + ky * ky) * tau);
      }
    }
  }

  const Grid2D& grid() const { return grid_; }
  double tau() const { return tau_; }
  double sigma() const { return sigma_; }
  double nonlinearity() const { return nonlinearity_; }
  double pump_max() const { return pump_max_; }
  const std::vector<double>& pump() const { return pump_; }
  const std::vector<double>& potential() const { return potential_; }
  /// exp(-i |k|^2 tau) / (nx ny) in FFT order.
  const std::vector<cdouble>& kinetic() const { return kinetic_; }

  /// Upper bound for ||psi^{n+1}||^2 / ||psi^n||^2.
  double growth_bound() const { return std::exp(2.0 * pump_max_ * tau_); }

  void nonlinear_half_step(Field2D& f) const {
    check(f);
    const double dt = 0.5 * tau_;
    for (std::size_t i = 0; i < f.values.size(); ++i) {
      f.values[i] = nonlinear_point(f.values[i], pump_[i], potential_[i], sigma_, dt, zero_pump_[i], nonlinearity_);
    }
  }

  void fourier_full_step(Field2D& f) {
    check(f);
    fft_.load(f.values);
    fft_.forward();
    cdouble* d = fft_.data();
    for (std::size_t i = 0; i < kinetic_.size(); ++i) d[i] *= kinetic_[i];
    fft_.backward();
    fft_.store(f.values);
  }

  void strang_step(Field2D& f) {
    nonlinear_half_step(f);
    fourier_full_step(f);
    nonlinear_half_step(f);
    f.t += tau_;
  }

 private:
  void check(const Field2D& f) const {
    if (!(f.grid == grid_)) throw std::invalid_argument("field grid does not match the step plan");
  }

  Grid2D grid_;
  double tau_;
  double sigma_;
  double nonlinearity_ = 1.0;
  double pump_max_ = 0.0;
  std::vector<double> pump_;
  std::vector<double> potential_;
  std::vector<char> zero_pump_;
  std::vector<cdouble> kinetic_;
  Fft2D fft_;
};

namespace detail {
inline double unit_uniform(std::mt19937_64& gen) { return static_cast<double>(gen() >> 11) * 0x1.0p-53; }
}  // namespace detail

inline void add_noise(Field2D& f, double amplitude, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  for (auto& v : f.values) {
    const double re = 2.0 * detail::unit_uniform(gen) - 1.0;
    const double im = 2.0 * detail::unit_uniform(gen) - 1.0;
    v += amplitude * cdouble(re, im);
  }
}

/// exp(-r^2/2) plus optional complex noise, uniform in [-a, a] for both the
/// real and imaginary parts, drawn from mt19937_64(seed) in row-major order.
inline Field2D oscillator_ground_state(const Grid2D& g, double noise_amplitude = 0.0, std::uint64_t seed = 0) {
  Field2D f = sample(g, [](double x, double y) { return cdouble(std::exp(-0.5 * (x * x + y * y)), 0.0); });
  if (noise_amplitude > 0.0) add_noise(f, noise_amplitude, seed);
  return f;
}

class EvolutionError : public std::runtime_error {
 public:
  EvolutionError(const std::string& what, Field2D last_good)
      : std::runtime_error(what), last_good_(std::move(last_good)) {}
  const Field2D& last_good() const { return last_good_; }

 private:
  Field2D last_good_;
};

struct SeriesRow {
  double t = 0.0;
  double mass = 0.0;
  double mu_estimate = 0.0;
  double max_density = 0.0;
};

struct EvolveSettings {
  double T_final = 1.0;
  long snapshot_every = 0;  // steps between snapshots; 0 = initial and final only
  long series_every = 1;    // steps between time-series rows
  // Relative slack on the per-step mass bound for floating-point rounding.
  double bound_slack = 1e-12;
  std::function<void(const Field2D&)> on_snapshot;  // called for every snapshot
  std::function<void(const Field2D&, long)> on_step;  // after every step (step index from 1)
};

struct EvolveResult {
  Field2D final;
  std::vector<SeriesRow> series;
  long steps = 0;
  long snapshots = 0;
  long bound_violations = 0;
  double max_growth_ratio = 0.0;  // max over steps of ||psi^{n+1}||^2 / (bound ||psi^n||^2)
};

inline long step_count(double T_final, double tau) {
  if (!(T_final > 0.0) || !(tau > 0.0)) throw std::invalid_argument("T_final and tau must be > 0");
  const double n = T_final / tau;
  const long steps = std::lround(n);
  if (steps < 1 || std::abs(n - steps) > 1e-9 * std::max(1.0, n)) {
    throw std::invalid_argument("T_final must be an integer multiple of tau");
  }
  return steps;
}

inline SeriesRow series_row(const Field2D& f, const StepPlan& plan) {
  return {f.t, diagnostics::mass(f), diagnostics::mu_estimate(f, plan.potential()), diagnostics::max_density(f)};
}

/// Integrates from `initial` to initial.t + T_final. Aborts with the last
/// snapshot if a step produces NaN or Inf.
inline EvolveResult evolve(const Field2D& initial, StepPlan& plan, const EvolveSettings& s) {
  const long steps = step_count(s.T_final, plan.tau());
  if (s.snapshot_every < 0 || (s.snapshot_every > 0 && steps % s.snapshot_every != 0)) {
    throw std::invalid_argument("snapshot cadence must divide the step count");
  }
  if (s.series_every < 1) throw std::invalid_argument("series cadence must be >= 1");
  if (!initial.all_finite()) throw std::invalid_argument("initial field has non-finite values");

  EvolveResult res;
  Field2D f = initial;
  const double t0 = initial.t;
  const double bound = plan.growth_bound();
  res.series.push_back(series_row(f, plan));
  if (s.on_snapshot) s.on_snapshot(f);
  res.snapshots = 1;
  Field2D last_good = f;
  double norm_prev = f.norm2();
  for (long n = 1; n <= steps; ++n) {
    plan.strang_step(f);
    f.t = t0 + n * plan.tau();
    const double norm_now = f.norm2();
    if (!std::isfinite(norm_now) || !f.all_finite()) {
      std::ostringstream msg;
      msg << "non-finite field at step " << n << " (t = " << f.t << ")";
      throw EvolutionError(msg.str(), last_good);
    }
    if (norm_prev > 0.0) {
      const double ratio = norm_now / (bound * norm_prev);
      res.max_growth_ratio = std::max(res.max_growth_ratio, ratio);
      if (ratio > 1.0 + s.bound_slack) ++res.bound_violations;
    }
    norm_prev = norm_now;
    if (n % s.series_every == 0 || n == steps) res.series.push_back(series_row(f, plan));
    if (s.on_step) s.on_step(f, n);
    const bool snap = (s.snapshot_every > 0 && n % s.snapshot_every == 0) || (s.snapshot_every == 0 && n == steps);
    if (snap) {
      if (s.on_snapshot) s.on_snapshot(f);
      ++res.snapshots;
      last_good = f;
    }
  }
  res.steps = steps;
  res.final = std::move(f);
  return res;
}

}  // namespace cgpe::splitstep
