#pragma once

// Real first-order form of the radial stationary problem on r~ in [0, 1],
// r = b r~. For winding m the amplitude is factored as phi = r^m g with
// g = theta + i eta, which keeps the origin regular for every m:
//
//   g'' + (2m+1)/r g' = (V - mu + rho) g + i w g,
//   rho = r^{2m} |g|^2,   w = alpha Theta(R - r) - sigma rho.
//
// State u = (theta, phi_, eta, zeta, xi, mu, r) with phi_ = theta_r and
// zeta = eta_r; xi accumulates the mass balance  int w rho r dr.

#include "cgpe/core/model.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <stdexcept>

namespace cgpe::stationary {

enum Component : int { kTheta = 0, kPhi = 1, kEta = 2, kZeta = 3, kXi = 4, kMu = 5, kRadius = 6 };
inline constexpr int kDim = 7;

enum class Parameter { alpha, sigma, pump_radius };

/// Second radial derivative of g at r = 0, from the regular limit
/// g_rr(0) = [(V(0) - mu + rho) g + i w g] / (2m + 2). Returned in physical
/// units (d/dr, not d/dr~). Requires g_r(0) = 0.
inline std::complex<double> rhs_at_origin(std::complex<double> g0, std::complex<double> dg0, double mu,
                                          const ModelParams& p, int winding = 0) {
  if (std::abs(dg0) > 1e-12 * (1.0 + std::abs(g0))) {
    throw std::invalid_argument("rhs_at_origin: derivative at r = 0 must vanish");
  }
  const double n = std::norm(g0);
  const double rho = winding == 0 ? n : 0.0;
  const double w = pump_profile(0.0, p) - p.sigma * rho;
  const double K = p.trap(0.0) - mu + rho;
  return (K * g0 + std::complex<double>(0.0, w) * g0) / (2.0 * winding + 2.0);
}

class GpSystem {
 public:
  GpSystem(ModelParams params, int winding) : p_(std::move(params)), m_(winding) {
    if (winding < 0) throw std::invalid_argument("winding must be >= 0");
  }

  int dimension() const { return kDim; }
  int winding() const { return m_; }
  const ModelParams& params() const { return p_; }
  void set_params(const ModelParams& p) { p_ = p; }

  double parameter(Parameter which) const {
    switch (which) {
      case Parameter::alpha: return p_.alpha;
      case Parameter::sigma: return p_.sigma;
      case Parameter::pump_radius: return p_.pump_radius;
    }
    return 0.0;
  }
  void set_parameter(Parameter which, double v) {
    switch (which) {
      case Parameter::alpha: p_.alpha = v; break;
      case Parameter::sigma: p_.sigma = v; break;
      case Parameter::pump_radius: p_.pump_radius = v; break;
    }
  }

  bool at_origin(double r) const { return std::abs(r) < 1e-12 * p_.b; }

  void rhs(double, Eigen::Ref<const Eigen::VectorXd> u, Eigen::Ref<Eigen::VectorXd> f) const {
    const Local L = local(u);
    const double b = p_.b;
    const double c = 2.0 * m_ + 1.0;
    f.setZero();
    f[kTheta] = b * u[kPhi];
    f[kEta] = b * u[kZeta];
    if (at_origin(L.r)) {
      f[kPhi] = b * (L.K * L.th - L.w * L.et) / (c + 1.0);
      f[kZeta] = b * (L.K * L.et + L.w * L.th) / (c + 1.0);
    } else {
      f[kPhi] = b * (-c * u[kPhi] / L.r + L.K * L.th - L.w * L.et);
      f[kZeta] = b * (-c * u[kZeta] / L.r + L.K * L.et + L.w * L.th);
    }
    f[kXi] = b * L.w * L.rho * L.r;
    f[kRadius] = b;
  }

  void jacobian(double, Eigen::Ref<const Eigen::VectorXd> u, Eigen::Ref<Eigen::MatrixXd> J) const {
    const Local L = local(u);
    const double b = p_.b;
    const double c = 2.0 * m_ + 1.0;
    J.setZero();
    J(kTheta, kPhi) = b;
    J(kEta, kZeta) = b;
    J(kRadius, kRadius) = 0.0;

    // derivatives of rho, K, w with respect to theta, eta, r
    const double rho_th = 2.0 * L.P * L.th;
    const double rho_et = 2.0 * L.P * L.et;
    const double rho_r = L.dP * L.n;
    const double K_th = rho_th, K_et = rho_et, K_r = p_.trap.derivative(L.r) + rho_r;
    const double w_th = -p_.sigma * rho_th;
    const double w_et = -p_.sigma * rho_et;
    const double w_r = -p_.alpha * smoothed_heaviside_derivative(p_.pump_radius - L.r, p_.kappa) -
                       p_.sigma * rho_r;

    const bool origin = at_origin(L.r);
    const double s = origin ? b / (c + 1.0) : b;
    J(kPhi, kTheta) = s * (L.K + L.th * K_th - L.et * w_th);
    J(kPhi, kEta) = s * (L.th * K_et - L.w - L.et * w_et);
    J(kPhi, kMu) = -s * L.th;
    J(kPhi, kRadius) = s * (L.th * K_r - L.et * w_r);
    J(kZeta, kTheta) = s * (L.et * K_th + L.w + L.th * w_th);
    J(kZeta, kEta) = s * (L.K + L.et * K_et + L.th * w_et);
    J(kZeta, kMu) = -s * L.et;
    J(kZeta, kRadius) = s * (L.et * K_r + L.th * w_r);
    if (!origin) {
      J(kPhi, kPhi) = -b * c / L.r;
      J(kZeta, kZeta) = -b * c / L.r;
      J(kPhi, kRadius) += b * c * u[kPhi] / (L.r * L.r);
      J(kZeta, kRadius) += b * c * u[kZeta] / (L.r * L.r);
    }
    J(kXi, kTheta) = b * L.r * (w_th * L.rho + L.w * rho_th);
    J(kXi, kEta) = b * L.r * (w_et * L.rho + L.w * rho_et);
    J(kXi, kRadius) = b * (w_r * L.rho * L.r + L.w * rho_r * L.r + L.w * L.rho);
  }

  /// Derivative of the right-hand side with respect to one model parameter.
  void parameter_derivative(Parameter which, double, Eigen::Ref<const Eigen::VectorXd> u,
                            Eigen::Ref<Eigen::VectorXd> df) const {
    const Local L = local(u);
    const double b = p_.b;
    double w_l = 0.0;
    switch (which) {
      case Parameter::alpha: w_l = smoothed_heaviside(p_.pump_radius - L.r, p_.kappa); break;
      case Parameter::sigma: w_l = -L.rho; break;
      case Parameter::pump_radius:
        w_l = p_.alpha * smoothed_heaviside_derivative(p_.pump_radius - L.r, p_.kappa);
        break;
    }
    const double s = at_origin(L.r) ? b / (2.0 * m_ + 2.0) : b;
    df.setZero();
    df[kPhi] = -s * w_l * L.et;
    df[kZeta] = s * w_l * L.th;
    df[kXi] = b * w_l * L.rho * L.r;
  }

  void boundary(Eigen::Ref<const Eigen::VectorXd> ua, Eigen::Ref<const Eigen::VectorXd> ub,
                Eigen::Ref<Eigen::VectorXd> g, Eigen::Ref<Eigen::MatrixXd> ga,
                Eigen::Ref<Eigen::MatrixXd> gb) const {
    g[0] = ua[kPhi];
    g[1] = ub[kTheta];
    g[2] = ua[kZeta];
    g[3] = ua[kEta];
    g[4] = ub[kEta];
    g[5] = ub[kXi];
    g[6] = ua[kRadius];
    ga.setZero();
    gb.setZero();
    ga(0, kPhi) = 1.0;
    gb(1, kTheta) = 1.0;
    ga(2, kZeta) = 1.0;
    ga(3, kEta) = 1.0;
    gb(4, kEta) = 1.0;
    gb(5, kXi) = 1.0;
    ga(6, kRadius) = 1.0;
  }

 private:
  struct Local {
    double th, et, r, n, P, dP, rho, w, K;
  };

  Local local(const Eigen::Ref<const Eigen::VectorXd>& u) const {
    Local L{};
    L.th = u[kTheta];
    L.et = u[kEta];
    L.r = u[kRadius];
    L.n = L.th * L.th + L.et * L.et;
    if (m_ == 0) {
      L.P = 1.0;
      L.dP = 0.0;
    } else {
      L.P = std::pow(L.r, 2 * m_);
      L.dP = 2.0 * m_ * std::pow(L.r, 2 * m_ - 1);
    }
    L.rho = L.P * L.n;
    L.w = p_.alpha * smoothed_heaviside(p_.pump_radius - L.r, p_.kappa) - p_.sigma * L.rho;
    L.K = p_.trap(std::abs(L.r)) - u[kMu] + L.rho;
    return L;
  }

  ModelParams p_;
  int m_;
};

}  // namespace cgpe::stationary
