#pragma once

// Radially symmetric stationary states (ground/excited states and central
// vortices) by Lobatto collocation of the first-order system in gp_system.hpp.

#include "cgpe/collocation/collocation.hpp"
#include "cgpe/core/model.hpp"
#include "cgpe/core/numerics.hpp"
#include "cgpe/stationary/gp_system.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace cgpe::stationary {

using collocation::NonConvergence;
using collocation::SingularJacobian;

/// Mesh on [0, b]; internally a collocation mesh on [0, 1].
class RadialMesh {
 public:
  RadialMesh() = default;
  RadialMesh(double b, collocation::Mesh unit) : b_(b), unit_(std::move(unit)) {
    if (!(b > 0.0)) throw std::invalid_argument("RadialMesh: b must be > 0");
  }

  /// Physical nodes 0 = r_0 < ... < r_N = b.
  static RadialMesh from_nodes(const std::vector<double>& nodes, int points_per_interval = 4) {
    if (nodes.size() < 2 || nodes.front() != 0.0) throw std::invalid_argument("RadialMesh: first node must be 0");
    const double b = nodes.back();
    std::vector<double> t(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) t[i] = nodes[i] / b;
    t.back() = 1.0;
    return RadialMesh(b, collocation::Mesh(std::move(t), points_per_interval));
  }

  static RadialMesh uniform(double b, int intervals, int points_per_interval = 4) {
    return RadialMesh(b, collocation::Mesh::uniform(intervals, points_per_interval));
  }

  /// Uniform spacing h outside the shell |r - R| < halfwidth, h / factor inside.
  static RadialMesh refined(double b, double h, double R, double halfwidth, int factor,
                            int points_per_interval = 4) {
    if (!(h > 0.0) || factor < 1) throw std::invalid_argument("RadialMesh::refined: bad spacing");
    const double lo = std::max(0.0, R - halfwidth);
    const double hi = std::min(b, R + halfwidth);
    std::vector<double> nodes{0.0};
    auto fill = [&](double a, double e, double step) {
      if (e <= a) return;
      const int n = std::max(1, static_cast<int>(std::ceil((e - a) / step - 1e-9)));
      for (int i = 1; i <= n; ++i) nodes.push_back(a + (e - a) * i / n);
    };
    fill(0.0, lo, h);
    fill(lo, hi, h / factor);
    fill(hi, b, h);
    nodes.back() = b;
    return from_nodes(nodes, points_per_interval);
  }

  double b() const { return b_; }
  const collocation::Mesh& unit() const { return unit_; }
  int points() const { return unit_.points(); }
  int intervals() const { return unit_.intervals(); }

  std::vector<double> radii() const {
    auto t = unit_.point_locations();
    for (auto& x : t) x *= b_;
    t.back() = b_;
    return t;
  }

  std::vector<double> nodes() const {
    auto t = unit_.nodes();
    for (auto& x : t) x *= b_;
    t.back() = b_;
    return t;
  }

 private:
  double b_ = 15.0;
  collocation::Mesh unit_;
};

/// Default desk mesh: spacing 0.01 with fourfold refinement around the pump edge.
inline RadialMesh default_mesh(const ModelParams& p) {
  return RadialMesh::refined(p.b, 0.01, p.pump_radius, 0.6, 4);
}

/// Seven-component state sampled at every collocation point (point-major).
struct BvpState {
  RadialMesh mesh;
  Eigen::VectorXd u;
  int winding = 0;

  double at(int point, int component) const { return u[point * kDim + component]; }
  double& at(int point, int component) { return u[point * kDim + component]; }
  double mu() const { return u[kMu]; }
  int points() const { return mesh.points(); }

  /// phi(r) = r^m (theta + i eta) at every collocation point.
  std::vector<std::complex<double>> amplitude() const {
    std::vector<std::complex<double>> phi(points());
    for (int i = 0; i < points(); ++i) {
      const double r = at(i, kRadius);
      const double f = winding == 0 ? 1.0 : std::pow(r, winding);
      phi[i] = f * std::complex<double>(at(i, kTheta), at(i, kEta));
    }
    return phi;
  }
};

/// Build a state from a real amplitude g(r) (phi = r^m g) and a chemical
/// potential. Derivatives come from five-point differences of g.
inline BvpState state_from_amplitude(const RadialMesh& mesh, const std::vector<double>& g, double mu,
                                     int winding) {
  BvpState s{mesh, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mesh.points()) * kDim), winding};
  const auto r = mesh.radii();
  const auto dg = numerics::derivative_5pt<double>(r, g);
  for (int i = 0; i < mesh.points(); ++i) {
    s.at(i, kTheta) = g[i];
    s.at(i, kPhi) = dg[i];
    s.at(i, kMu) = mu;
    s.at(i, kRadius) = r[i];
  }
  s.at(0, kPhi) = 0.0;
  s.at(mesh.points() - 1, kTheta) = 0.0;
  return s;
}

inline double thomas_fermi_mu(const ModelParams& p) {
  if (!(p.sigma > 0.0)) throw ModelError("Thomas-Fermi guess needs sigma > 0");
  return 1.5 * p.alpha / p.sigma;
}

/// |phi|^2 = mu~ - r^2 inside r < sqrt(mu~), zero outside; mu~ = 3 alpha / (2 sigma).
inline BvpState thomas_fermi_guess(const ModelParams& p, const RadialMesh& mesh) {
  const double mut = thomas_fermi_mu(p);
  const auto r = mesh.radii();
  std::vector<double> g(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) g[i] = std::sqrt(std::max(0.0, mut - r[i] * r[i]));
  return state_from_amplitude(mesh, g, mut, 0);
}

/// Central-vortex guess: Thomas-Fermi with the centrifugal term,
/// |phi|^2 = max(0, mu~ - r^2 - m^2 / r^2), stored as g = |phi| / r^m.
inline BvpState vortex_guess(const ModelParams& p, const RadialMesh& mesh, int winding) {
  if (winding < 1) throw std::invalid_argument("vortex_guess: winding must be >= 1");
  const double mut = thomas_fermi_mu(p);
  const auto r = mesh.radii();
  std::vector<double> g(r.size(), 0.0);
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (r[i] == 0.0) continue;
    const double d = mut - r[i] * r[i] - winding * winding / (r[i] * r[i]);
    if (d > 0.0) g[i] = std::sqrt(d) / std::pow(r[i], winding);
  }
  return state_from_amplitude(mesh, g, mut, winding);
}

/// Thomas-Fermi envelope modulated by cos^2(pi r / L), L = r_TF / (n - 1/2):
/// n local maxima on [0, r_TF], the first one at the origin. (Seeds whose
/// bumps all sit inside (0, r_TF) relax back to the ground state.)
inline BvpState multi_bump_guess(const ModelParams& p, const RadialMesh& mesh, int n_bumps) {
  if (n_bumps < 1) throw std::invalid_argument("multi_bump_guess: n_bumps must be >= 1");
  if (n_bumps == 1) return thomas_fermi_guess(p, mesh);
  const double mut = thomas_fermi_mu(p);
  const double rtf = std::sqrt(mut);
  const double L = rtf / (n_bumps - 0.5);
  const auto r = mesh.radii();
  std::vector<double> g(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double tf = std::sqrt(std::max(0.0, mut - r[i] * r[i]));
    const double c = std::cos(std::numbers::pi * r[i] / L);
    g[i] = tf * c * c;
  }
  return state_from_amplitude(mesh, g, mut, 0);
}

struct SolveSettings {
  collocation::NewtonSettings newton{};
};

/// Converged stationary state on the physical radius.
struct RadialProfile {
  ModelParams params;
  BvpState state;
  std::vector<double> r;
  std::vector<std::complex<double>> phi;
  double mu = 0.0;
  int winding = 0;
  double residual_norm = 0.0;
  int newton_iterations = 0;

  /// Solver-side mass balance, int_0^b w |phi|^2 r dr (the xi component at 0, sign flipped).
  double xi_balance() const { return -state.at(0, kXi); }

  /// Cubic interpolation of phi at radius x in [0, b].
  std::complex<double> operator()(double x) const {
    return numerics::interpolate_cubic<std::complex<double>>(r, phi, x);
  }
};

/// Residual and Jacobian of the collocation equations for one state.
inline double collocation_residual(const ModelParams& p, const BvpState& s) {
  GpSystem sys(p, s.winding);
  collocation::Assembler<GpSystem> as(sys, s.mesh.unit());
  Eigen::VectorXd F;
  as.residual(s.u, F);
  return F.lpNorm<Eigen::Infinity>();
}

inline RadialProfile make_profile(const ModelParams& p, BvpState s, double residual, int iterations) {
  RadialProfile out;
  out.params = p;
  out.winding = s.winding;
  out.mu = s.mu();
  out.residual_norm = residual;
  out.newton_iterations = iterations;
  out.r = s.mesh.radii();
  out.phi = s.amplitude();
  out.state = std::move(s);
  return out;
}

/// Newton-collocation solve from `guess`. The winding is taken from the guess.
inline RadialProfile solve_stationary(const ModelParams& p, BvpState guess, const SolveSettings& settings = {}) {
  p.validate();
  if (guess.mesh.b() != p.b) throw std::invalid_argument("solve_stationary: mesh radius differs from b");
  if (p.trap.max_radius() < p.b) throw ModelError("potential table does not cover [0, b]");
  GpSystem sys(p, guess.winding);
  collocation::Assembler<GpSystem> as(sys, guess.mesh.unit());
  const auto report = collocation::newton_solve(as, guess.u, settings.newton);
  return make_profile(p, std::move(guess), report.residual_norm, report.iterations);
}

/// int_0^b (w - sigma |phi|^2) |phi|^2 r dr by composite Lobatto quadrature on
/// the solver mesh; zero for an exact stationary state.
inline double mass_balance(const RadialProfile& prof) {
  const auto w = prof.state.mesh.unit().quadrature_weights();
  const double b = prof.state.mesh.b();
  double sum = 0.0;
  for (std::size_t i = 0; i < prof.r.size(); ++i) {
    const double n = std::norm(prof.phi[i]);
    sum += w[i] * b * (pump_profile(prof.r[i], prof.params) - prof.params.sigma * n) * n * prof.r[i];
  }
  return sum;
}

// --- CSV --------------------------------------------------------------------

inline void write_profile_csv(const RadialProfile& prof, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write profile '" + path.string() + "'");
  out << std::setprecision(17);
  const auto& p = prof.params;
  out << "# mu=" << prof.mu << " m=" << prof.winding << " residual=" << prof.residual_norm
      << " alpha=" << p.alpha << " sigma=" << p.sigma << " R=" << p.pump_radius << " kappa=" << p.kappa
      << " b=" << p.b << "\n";
  out << "r,re_phi,im_phi\n";
  for (std::size_t i = 0; i < prof.r.size(); ++i) {
    out << prof.r[i] << ',' << prof.phi[i].real() << ',' << prof.phi[i].imag() << '\n';
  }
  if (!out) throw std::runtime_error("error writing profile '" + path.string() + "'");
}

/// Reads a profile CSV back. The result carries r, phi, mu, winding and the
/// scalar parameters from the comment line; no collocation state.
inline RadialProfile read_profile_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open profile '" + path.string() + "'");
  RadialProfile prof;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream ss(line.substr(1));
      std::string kv;
      while (ss >> kv) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = kv.substr(0, eq);
        const double v = std::stod(kv.substr(eq + 1));
        if (key == "mu") prof.mu = v;
        else if (key == "m") prof.winding = static_cast<int>(v);
        else if (key == "residual") prof.residual_norm = v;
        else if (key == "alpha") prof.params.alpha = v;
        else if (key == "sigma") prof.params.sigma = v;
        else if (key == "R") prof.params.pump_radius = v;
        else if (key == "kappa") prof.params.kappa = v;
        else if (key == "b") prof.params.b = v;
      }
      continue;
    }
    if (line.rfind("r,", 0) == 0) continue;
    for (auto& ch : line) {
      if (ch == ',') ch = ' ';
    }
    std::istringstream ss(line);
    double r = 0.0, re = 0.0, im = 0.0;
    if (!(ss >> r >> re >> im)) throw std::runtime_error("malformed profile row: " + line);
    prof.r.push_back(r);
    prof.phi.emplace_back(re, im);
  }
  if (prof.r.size() < 4) throw std::runtime_error("profile '" + path.string() + "' has too few rows");
  return prof;
}

}  // namespace cgpe::stationary
