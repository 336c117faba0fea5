#pragma once

// The discretized stationary system as a continuation problem in one of
// alpha, sigma, R. The inner product on states is the composite Lobatto
// quadrature of sum_c a_c(r~) b_c(r~) over [0, 1] (an L2-type norm, so the
// arclength does not grow with the mesh size).

#include "cgpe/collocation/collocation.hpp"
#include "cgpe/continuation/continuation.hpp"
#include "cgpe/stationary/gp_system.hpp"
#include "cgpe/stationary/stationary.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <string>
#include <vector>

namespace cgpe::continuation {

using stationary::Parameter;

inline Parameter parse_parameter(const std::string& name) {
  if (name == "alpha") return Parameter::alpha;
  if (name == "sigma") return Parameter::sigma;
  if (name == "R" || name == "pump_radius") return Parameter::pump_radius;
  throw std::invalid_argument("unknown continuation parameter '" + name + "' (use alpha, sigma or R)");
}

inline std::string parameter_name(Parameter p) {
  switch (p) {
    case Parameter::alpha: return "alpha";
    case Parameter::sigma: return "sigma";
    case Parameter::pump_radius: return "R";
  }
  return "?";
}

class GpContinuation {
 public:
  GpContinuation(ModelParams base, stationary::RadialMesh mesh, int winding, Parameter which)
      : base_(std::move(base)), mesh_(std::move(mesh)), winding_(winding), which_(which) {
    const auto w = mesh_.unit().quadrature_weights();
    weights_.resize(static_cast<Eigen::Index>(w.size()) * stationary::kDim);
    for (std::size_t p = 0; p < w.size(); ++p) {
      for (int c = 0; c < stationary::kDim; ++c) weights_[static_cast<Eigen::Index>(p) * stationary::kDim + c] = w[p];
    }
  }

  int size() const { return static_cast<int>(weights_.size()); }
  const Eigen::VectorXd& weights() const { return weights_; }
  double dot(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const { return (weights_.cwiseProduct(a)).dot(b); }
  double observable(const Eigen::VectorXd& u) const { return u[stationary::kMu]; }

  ModelParams params_at(double lambda) const {
    stationary::GpSystem sys(base_, winding_);
    sys.set_parameter(which_, lambda);
    return sys.params();
  }

  void residual(const Eigen::VectorXd& u, double lambda, Eigen::VectorXd& F) const {
    const stationary::GpSystem sys(params_at(lambda), winding_);
    collocation::Assembler<stationary::GpSystem> as(sys, mesh_.unit());
    as.residual(u, F);
  }

  void linearize(const Eigen::VectorXd& u, double lambda, Eigen::VectorXd& F, SparseMatrix& J,
                 Eigen::VectorXd& Fl) const {
    const stationary::GpSystem sys(params_at(lambda), winding_);
    collocation::Assembler<stationary::GpSystem> as(sys, mesh_.unit());
    as.assemble(u, F, J);
    as.collocation_source(
        u,
        [&](double t, collocation::ConstVecRef up, collocation::VecRef out) {
          sys.parameter_derivative(which_, t, up, out);
        },
        Fl);
  }

  const stationary::RadialMesh& mesh() const { return mesh_; }
  int winding() const { return winding_; }
  Parameter parameter() const { return which_; }
  const ModelParams& base() const { return base_; }

  /// Branch state as a radial profile at its parameter value.
  stationary::RadialProfile profile(const BranchPoint& pt) const {
    stationary::BvpState s{mesh_, pt.state, winding_};
    return stationary::make_profile(params_at(pt.lambda), std::move(s), pt.residual_norm, pt.iterations);
  }

 private:
  ModelParams base_;
  stationary::RadialMesh mesh_;
  int winding_;
  Parameter which_;
  Eigen::VectorXd weights_;
};

/// Continue a converged profile in one parameter.
inline Branch trace_branch(const stationary::RadialProfile& start, Parameter which, const Settings& s) {
  const GpContinuation problem(start.params, start.state.mesh, start.winding, which);
  stationary::GpSystem sys(start.params, start.winding);
  return trace_branch(problem, start.state.u, sys.parameter(which), s, parameter_name(which));
}

}  // namespace cgpe::continuation
