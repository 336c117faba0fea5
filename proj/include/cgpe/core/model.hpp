#pragma once

// Model definition for the pumped, decaying Gross-Pitaevskii equation
//
//   i psi_t = -Lap psi + V psi + |psi|^2 psi + i (w(x) - sigma |psi|^2) psi,
//   w(x)    = alpha * Theta(R - |x|),   Theta(s) = (1 + tanh(kappa s)) / 2.

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <boost/math/interpolators/makima.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cgpe {

/// Raised when a parameter set or input table violates the model invariants.
class ModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline double smoothed_heaviside(double x, double kappa) {
  return 0.5 * (1.0 + std::tanh(kappa * x));
}

inline double smoothed_heaviside_derivative(double x, double kappa) {
  const double t = std::tanh(kappa * x);
  return 0.5 * kappa * (1.0 - t * t);
}

/// Radial trapping potential V(r). Either the harmonic trap r^2 or an
/// interpolated table. Immutable and cheap to copy.
class Potential {
 public:
  Potential() = default;

  static Potential harmonic() { return Potential{}; }

  /// Table on an arbitrary strictly increasing abscissa (modified Akima).
  static Potential tabulated(std::vector<double> r, std::vector<double> v,
                             std::string label = "tabulated") {
    if (r.size() != v.size() || r.size() < 4) {
      throw ModelError("tabulated potential needs at least 4 (r, V) pairs");
    }
    for (std::size_t i = 1; i < r.size(); ++i) {
      if (!(r[i] > r[i - 1])) throw ModelError("tabulated potential: r must be strictly increasing");
    }
    auto impl = std::make_shared<MakimaTable>(std::move(r), std::move(v));
    return Potential(std::move(impl), std::move(label));
  }

  /// Table sampled on r0, r0 + h, ... (cubic B-spline, fourth order).
  static Potential uniform_table(double r0, double h, std::vector<double> v,
                                 std::string label = "tabulated") {
    if (v.size() < 4 || !(h > 0.0)) throw ModelError("uniform potential table needs >= 4 samples and h > 0");
    auto impl = std::make_shared<SplineTable>(r0, h, std::move(v));
    return Potential(std::move(impl), std::move(label));
  }

  /// Two-column CSV (r, V). Lines starting with '#' and a non-numeric header are skipped.
  static Potential from_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ModelError("cannot open potential table '" + path.string() + "'");
    std::vector<double> r;
    std::vector<double> v;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      for (auto& ch : line) {
        if (ch == ',' || ch == ';' || ch == '\t') ch = ' ';
      }
      std::istringstream ss(line);
      double a = 0.0;
      double b = 0.0;
      if (!(ss >> a >> b)) {
        if (r.empty()) continue;  // header row
        throw ModelError("malformed row in potential table '" + path.string() + "': " + line);
      }
      r.push_back(a);
      v.push_back(b);
    }
    return tabulated(std::move(r), std::move(v), "file:" + path.string());
  }

  double operator()(double r) const { return impl_ ? impl_->value(r) : r * r; }
  double derivative(double r) const { return impl_ ? impl_->derivative(r) : 2.0 * r; }

  bool is_harmonic() const { return impl_ == nullptr; }
  const std::string& label() const { return label_; }

  /// Largest radius at which the potential can be evaluated.
  double max_radius() const { return impl_ ? impl_->max_radius() : INFINITY; }

 private:
  struct Impl {
    virtual ~Impl() = default;
    virtual double value(double r) const = 0;
    virtual double derivative(double r) const = 0;
    virtual double max_radius() const = 0;
  };

  struct MakimaTable final : Impl {
    MakimaTable(std::vector<double> r, std::vector<double> v)
        : lo(r.front()), hi(r.back()), spline(std::move(r), std::move(v)) {}
    void check(double r) const {
      if (r < lo || r > hi) throw ModelError("potential evaluated outside its table range");
    }
    double value(double r) const override { check(r); return spline(r); }
    double derivative(double r) const override { check(r); return spline.prime(r); }
    double max_radius() const override { return hi; }
    double lo;
    double hi;
    boost::math::interpolators::makima<std::vector<double>> spline;
  };

  struct SplineTable final : Impl {
    SplineTable(double r0, double h, std::vector<double> v)
        : lo(r0), hi(r0 + h * static_cast<double>(v.size() - 1)), spline(v.begin(), v.end(), r0, h) {}
    void check(double r) const {
      if (r < lo || r > hi) throw ModelError("potential evaluated outside its table range");
    }
    double value(double r) const override { check(r); return spline(r); }
    double derivative(double r) const override { check(r); return spline.prime(r); }
    double max_radius() const override { return hi; }
    double lo;
    double hi;
    boost::math::interpolators::cardinal_cubic_b_spline<double> spline;
  };

  Potential(std::shared_ptr<const Impl> impl, std::string label)
      : impl_(std::move(impl)), label_(std::move(label)) {}

  std::shared_ptr<const Impl> impl_;
  std::string label_ = "harmonic";
};

/// One problem instance. Plain value type; `validate()` enforces the invariants.
struct ModelParams {
  double alpha = 4.4;
  double sigma = 0.3;
  double pump_radius = 2.0;
  double kappa = 10.0;
  double b = 15.0;
  Potential trap = Potential::harmonic();

  void validate() const {
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ModelError("alpha must be finite and >= 0");
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ModelError("sigma must be finite and >= 0");
    if (!(pump_radius > 0.0)) throw ModelError("pump radius R must be > 0");
    if (!(kappa > 0.0)) throw ModelError("kappa must be > 0");
    if (!(b > pump_radius) || !std::isfinite(b)) throw ModelError("truncation radius b must exceed R");
  }

  ModelParams with_alpha(double v) const { auto p = *this; p.alpha = v; return p; }
  ModelParams with_sigma(double v) const { auto p = *this; p.sigma = v; return p; }
  ModelParams with_pump_radius(double v) const { auto p = *this; p.pump_radius = v; return p; }
};

/// w(r) = alpha * Theta(R - r).
inline double pump_profile(double r, const ModelParams& p) {
  return p.alpha * smoothed_heaviside(p.pump_radius - r, p.kappa);
}

struct ManufacturedPotentialOptions {
  double r_max = 22.0;      // must cover the corners of the 2D box
  double table_step = 1e-3; // auxiliary grid spacing
  double fd_step = 1e-3;    // finite-difference step for the Laplacian
};

/// Potential for which rho = w / sigma, J = 0 is an exact stationary state:
///   V = C + Lap(sqrt w) / sqrt w - w / sigma.
/// The radial Laplacian f'' + f'/r uses fourth-order centred differences of
/// the even extension of f = sqrt(w); at r = 0 it is 2 f''(0).
inline Potential manufactured_potential(const std::function<double(double)>& omega_profile,
                                        double sigma, double C,
                                        const ManufacturedPotentialOptions& opt = {}) {
  if (!(sigma > 0.0)) throw ModelError("manufactured potential needs sigma > 0");
  const double h = opt.fd_step;
  auto f = [&](double r) {
    const double w = omega_profile(std::abs(r));
    if (!(w > 0.0) || !std::isfinite(w)) {
      throw ModelError("pump profile must be strictly positive on the requested range (r = " +
                       std::to_string(std::abs(r)) + ")");
    }
    return std::sqrt(w);
  };
  const auto n = static_cast<std::size_t>(std::ceil(opt.r_max / opt.table_step)) + 1;
  std::vector<double> table(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double r = static_cast<double>(i) * opt.table_step;
    const double fm2 = f(r - 2 * h), fm1 = f(r - h), f0 = f(r), fp1 = f(r + h), fp2 = f(r + 2 * h);
    const double d2 = (-fp2 + 16.0 * fp1 - 30.0 * f0 + 16.0 * fm1 - fm2) / (12.0 * h * h);
    double lap = 0.0;
    if (r == 0.0) {
      lap = 2.0 * d2;
    } else {
      const double d1 = (-fp2 + 8.0 * fp1 - 8.0 * fm1 + fm2) / (12.0 * h);
      lap = d2 + d1 / r;
    }
    table[i] = C + lap / f0 - f0 * f0 / sigma;
  }
  return Potential::uniform_table(0.0, opt.table_step, std::move(table), "manufactured");
}

}  // namespace cgpe
