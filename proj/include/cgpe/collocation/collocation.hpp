#pragma once

// Piecewise-polynomial collocation for first-order boundary-value problems
//
//   u'(t) = f(t, u(t)),  t in [0, 1],   g(u(0), u(1)) = 0,
//
// with Lobatto IIIA points on every mesh interval. The unknowns are the
// solution values at all collocation points (interval end points shared), laid
// out point-major. On interval n with width h and stage values Y_1..Y_s the
// equations are
//
//   (Y_i - Y_1) / h - sum_j a_ij f(Y_j) = 0,   i = 2..s,
//
// which is exactly q'(t_{n,j}) = f(q(t_{n,j})) for the degree-s polynomial q
// through the stage values.

#include "cgpe/collocation/lobatto.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <cmath>
#include <concepts>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace cgpe::collocation {

class NonConvergence : public std::runtime_error {
 public:
  NonConvergence(const std::string& what, int iterations, double residual)
      : std::runtime_error(what), iterations_(iterations), residual_(residual) {}
  int iterations() const { return iterations_; }
  double residual_norm() const { return residual_; }

 private:
  int iterations_;
  double residual_;
};

class SingularJacobian : public std::runtime_error {
 public:
  SingularJacobian(const std::string& what, double condition_estimate)
      : std::runtime_error(what), condition_(condition_estimate) {}
  double condition_estimate() const { return condition_; }

 private:
  double condition_;
};

/// Mesh on [0, 1] plus the Lobatto abscissae used on every interval.
class Mesh {
 public:
  Mesh() = default;

  Mesh(std::vector<double> nodes, int points_per_interval)
      : nodes_(std::move(nodes)), tab_(make_lobatto(points_per_interval)) {
    if (nodes_.size() < 2) throw std::invalid_argument("mesh needs at least one interval");
    if (nodes_.front() != 0.0 || nodes_.back() != 1.0) {
      throw std::invalid_argument("mesh must start at 0 and end at 1");
    }
    for (std::size_t i = 1; i < nodes_.size(); ++i) {
      if (!(nodes_[i] > nodes_[i - 1])) throw std::invalid_argument("mesh nodes must be strictly increasing");
    }
  }

  static Mesh uniform(int intervals, int points_per_interval = 4) {
    if (intervals < 1) throw std::invalid_argument("mesh needs at least one interval");
    std::vector<double> n(intervals + 1);
    for (int i = 0; i <= intervals; ++i) n[i] = static_cast<double>(i) / intervals;
    n.back() = 1.0;
    return Mesh(std::move(n), points_per_interval);
  }

  const std::vector<double>& nodes() const { return nodes_; }
  const LobattoTableau& tableau() const { return tab_; }
  int intervals() const { return static_cast<int>(nodes_.size()) - 1; }
  int stages() const { return tab_.points(); }
  int points() const { return intervals() * (stages() - 1) + 1; }
  double width(int n) const { return nodes_[n + 1] - nodes_[n]; }

  /// Global index of stage i (0-based) on interval n.
  int point_index(int n, int i) const { return n * (stages() - 1) + i; }

  std::vector<double> point_locations() const {
    std::vector<double> t(points());
    for (int n = 0; n < intervals(); ++n) {
      for (int i = 0; i < stages(); ++i) t[point_index(n, i)] = nodes_[n] + tab_.c[i] * width(n);
    }
    t.front() = 0.0;
    t.back() = 1.0;
    return t;
  }

  /// Composite Lobatto quadrature weights; they sum to one.
  std::vector<double> quadrature_weights() const {
    std::vector<double> w(points(), 0.0);
    for (int n = 0; n < intervals(); ++n) {
      for (int i = 0; i < stages(); ++i) w[point_index(n, i)] += tab_.weights[i] * width(n);
    }
    return w;
  }

  double max_width() const {
    double h = 0.0;
    for (int n = 0; n < intervals(); ++n) h = std::max(h, width(n));
    return h;
  }

 private:
  std::vector<double> nodes_;
  LobattoTableau tab_;
};

using ConstVecRef = Eigen::Ref<const Eigen::VectorXd>;
using VecRef = Eigen::Ref<Eigen::VectorXd>;
using MatRef = Eigen::Ref<Eigen::MatrixXd>;

template <class S>
concept FirstOrderSystem = requires(const S& s, double t, const Eigen::VectorXd& u, Eigen::VectorXd& f,
                                    Eigen::MatrixXd& m) {
  { s.dimension() } -> std::convertible_to<int>;
  s.rhs(t, ConstVecRef(u), VecRef(f));
  s.jacobian(t, ConstVecRef(u), MatRef(m));
  s.boundary(ConstVecRef(u), ConstVecRef(u), VecRef(f), MatRef(m), MatRef(m));
};

/// Builds the residual and its exact sparse Jacobian. Row layout: the d
/// boundary conditions first, then the collocation rows interval by interval.
template <FirstOrderSystem System>
class Assembler {
 public:
  Assembler(const System& system, const Mesh& mesh)
      : sys_(&system), mesh_(&mesh), d_(system.dimension()), t_(mesh.point_locations()) {}

  int size() const { return d_ * mesh_->points(); }

  void residual(const Eigen::VectorXd& u, Eigen::VectorXd& F) const { evaluate(u, F, nullptr); }

  void assemble(const Eigen::VectorXd& u, Eigen::VectorXd& F, Eigen::SparseMatrix<double>& J) const {
    evaluate(u, F, &J);
  }

  /// Collocation rows only: -sum_j a_ij g(Y_j) for a per-point source g
  /// (used to assemble parameter derivatives of the residual).
  template <class PointSource>
  void collocation_source(const Eigen::VectorXd& u, PointSource&& source, Eigen::VectorXd& out) const {
    const int s = mesh_->stages();
    const auto& a = mesh_->tableau().a;
    out.setZero(size());
    Eigen::MatrixXd g(d_, s);
    for (int n = 0; n < mesh_->intervals(); ++n) {
      for (int j = 0; j < s; ++j) {
        const int p = mesh_->point_index(n, j);
        Eigen::VectorXd gj(d_);
        source(t_[p], ConstVecRef(u.segment(p * d_, d_)), VecRef(gj));
        g.col(j) = gj;
      }
      for (int i = 1; i < s; ++i) {
        const int row = d_ + (n * (s - 1) + (i - 1)) * d_;
        for (int j = 0; j < s; ++j) out.segment(row, d_) -= a(i, j) * g.col(j);
      }
    }
  }

  const std::vector<double>& locations() const { return t_; }

 private:
  void evaluate(const Eigen::VectorXd& u, Eigen::VectorXd& F, Eigen::SparseMatrix<double>* J) const {
    const int d = d_;
    const int s = mesh_->stages();
    const int npts = mesh_->points();
    if (u.size() != d * npts) {
      std::ostringstream msg;
      msg << "collocation state has " << u.size() << " entries, expected " << d * npts;
      throw std::invalid_argument(msg.str());
    }
    const auto& a = mesh_->tableau().a;
    F.setZero(d * npts);

    std::vector<Eigen::Triplet<double>> trip;
    if (J) trip.reserve(static_cast<std::size_t>(mesh_->intervals()) * (s - 1) * d * (s * d + 1) + 2 * d * d);

    Eigen::VectorXd g(d);
    Eigen::MatrixXd ga(d, d);
    Eigen::MatrixXd gb(d, d);
    sys_->boundary(ConstVecRef(u.segment(0, d)), ConstVecRef(u.segment((npts - 1) * d, d)), VecRef(g),
                   MatRef(ga), MatRef(gb));
    F.segment(0, d) = g;
    if (J) {
      for (int r = 0; r < d; ++r) {
        for (int c = 0; c < d; ++c) {
          if (ga(r, c) != 0.0) trip.emplace_back(r, c, ga(r, c));
          if (gb(r, c) != 0.0) trip.emplace_back(r, (npts - 1) * d + c, gb(r, c));
        }
      }
    }

    Eigen::MatrixXd f(d, s);
    std::vector<Eigen::MatrixXd> df(s, Eigen::MatrixXd(d, d));
    Eigen::VectorXd fj(d);
    for (int n = 0; n < mesh_->intervals(); ++n) {
      const double h = mesh_->width(n);
      for (int j = 0; j < s; ++j) {
        const int p = mesh_->point_index(n, j);
        sys_->rhs(t_[p], ConstVecRef(u.segment(p * d, d)), VecRef(fj));
        f.col(j) = fj;
        if (J) sys_->jacobian(t_[p], ConstVecRef(u.segment(p * d, d)), MatRef(df[j]));
      }
      const int p0 = mesh_->point_index(n, 0);
      for (int i = 1; i < s; ++i) {
        const int pi = mesh_->point_index(n, i);
        const int row = d + (n * (s - 1) + (i - 1)) * d;
        Eigen::VectorXd res = (u.segment(pi * d, d) - u.segment(p0 * d, d)) / h;
        for (int j = 0; j < s; ++j) res -= a(i, j) * f.col(j);
        F.segment(row, d) = res;
        if (J) {
          for (int j = 0; j < s; ++j) {
            const int pj = mesh_->point_index(n, j);
            double diag = 0.0;
            if (j == i) diag = 1.0 / h;
            if (j == 0) diag = -1.0 / h;
            for (int r = 0; r < d; ++r) {
              for (int c = 0; c < d; ++c) {
                double v = -a(i, j) * df[j](r, c);
                if (r == c) v += diag;
                if (v != 0.0) trip.emplace_back(row + r, pj * d + c, v);
              }
            }
          }
        }
      }
    }
    if (J) {
      J->resize(d * npts, d * npts);
      J->setFromTriplets(trip.begin(), trip.end());
      J->makeCompressed();
    }
  }

  const System* sys_;
  const Mesh* mesh_;
  int d_;
  std::vector<double> t_;
};

struct NewtonSettings {
  int max_iterations = 50;
  int max_halvings = 30;
  double tolerance = 1e-10;  // max-norm of the residual
  // Accept a damped step when the simplified Newton correction J^{-1} F
  // shrinks (affine invariant) instead of the plain residual 2-norm.
  bool natural_level = true;
  // Stop once the Newton correction is this small relative to |u|: the
  // residual has reached its rounding floor (reported, not hidden).
  double stagnation = 1e-13;
};

struct NewtonReport {
  int iterations = 0;
  double residual_norm = 0.0;
  bool stagnated = false;  // stopped at the rounding floor above tolerance
};

/// Sparse LU with a cheap lower-bound condition estimate for diagnostics.
class SparseLinearSolver {
 public:
  void factorize(const Eigen::SparseMatrix<double>& a) {
    if (!analyzed_ || a.rows() != rows_ || a.nonZeros() != nnz_) {
      lu_.analyzePattern(a);
      analyzed_ = true;
      rows_ = a.rows();
      nnz_ = a.nonZeros();
    }
    lu_.factorize(a);
    if (lu_.info() != Eigen::Success) {
      throw SingularJacobian("sparse LU failed: " + lu_.lastErrorMessage(), INFINITY);
    }
    matrix_ = &a;
  }

  Eigen::VectorXd solve(const Eigen::VectorXd& b) const {
    Eigen::VectorXd x = lu_.solve(b);
    if (!x.allFinite()) throw SingularJacobian("linear solve produced non-finite values", condition_estimate());
    return x;
  }

  /// ||A||_inf * ||A^{-1} z||_inf / ||z||_inf for a fixed pseudo-random z.
  double condition_estimate() const {
    if (!matrix_) return INFINITY;
    std::mt19937_64 gen(12345);
    Eigen::VectorXd z(rows_);
    for (Eigen::Index i = 0; i < rows_; ++i) z(i) = static_cast<double>(gen() >> 11) * 0x1.0p-53 - 0.5;
    Eigen::VectorXd x = lu_.solve(z);
    double anorm = 0.0;
    Eigen::VectorXd rowsum = Eigen::VectorXd::Zero(rows_);
    for (int k = 0; k < matrix_->outerSize(); ++k) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(*matrix_, k); it; ++it) rowsum(it.row()) += std::abs(it.value());
    }
    anorm = rowsum.maxCoeff();
    return anorm * x.lpNorm<Eigen::Infinity>() / z.lpNorm<Eigen::Infinity>();
  }

 private:
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu_;
  bool analyzed_ = false;
  Eigen::Index rows_ = 0;
  Eigen::Index nnz_ = 0;
  const Eigen::SparseMatrix<double>* matrix_ = nullptr;
};

/// Damped Newton: full step first, then halving until the 2-norm of the
/// residual decreases. Converged when the max-norm is below tolerance.
template <FirstOrderSystem System>
NewtonReport newton_solve(const Assembler<System>& assembler, Eigen::VectorXd& u,
                          const NewtonSettings& settings = {}) {
  Eigen::VectorXd F;
  Eigen::VectorXd Ftrial;
  Eigen::SparseMatrix<double> J;
  SparseLinearSolver solver;
  NewtonReport report;
  assembler.residual(u, F);
  if (!F.allFinite()) throw NonConvergence("non-finite residual at the initial guess", 0, INFINITY);
  report.residual_norm = F.lpNorm<Eigen::Infinity>();
  while (report.residual_norm > settings.tolerance) {
    if (report.iterations >= settings.max_iterations) {
      std::ostringstream msg;
      msg << "Newton did not converge in " << settings.max_iterations << " iterations (residual "
          << report.residual_norm << ")";
      throw NonConvergence(msg.str(), report.iterations, report.residual_norm);
    }
    assembler.assemble(u, F, J);
    solver.factorize(J);
    const Eigen::VectorXd step = solver.solve(-F);
    if (step.lpNorm<Eigen::Infinity>() <= settings.stagnation * (1.0 + u.lpNorm<Eigen::Infinity>())) {
      u += step;
      assembler.residual(u, F);
      ++report.iterations;
      report.residual_norm = F.lpNorm<Eigen::Infinity>();
      report.stagnated = true;
      break;
    }
    const double norm0 = settings.natural_level ? step.norm() : F.norm();
    double lambda = 1.0;
    bool accepted = false;
    for (int k = 0; k <= settings.max_halvings; ++k) {
      Eigen::VectorXd trial = u + lambda * step;
      assembler.residual(trial, Ftrial);
      bool ok = Ftrial.allFinite();
      if (ok && Ftrial.lpNorm<Eigen::Infinity>() > settings.tolerance) {
        const double level = settings.natural_level ? solver.solve(-Ftrial).norm() : Ftrial.norm();
        ok = level < (1.0 - 1e-4 * lambda) * norm0;
      }
      if (ok) {
        u = std::move(trial);
        F = Ftrial;
        accepted = true;
        break;
      }
      lambda *= 0.5;
    }
    ++report.iterations;
    if (!accepted) {
      std::ostringstream msg;
      msg << "Newton line search failed after " << settings.max_halvings << " halvings (residual "
          << F.lpNorm<Eigen::Infinity>() << ")";
      throw NonConvergence(msg.str(), report.iterations, F.lpNorm<Eigen::Infinity>());
    }
    report.residual_norm = F.lpNorm<Eigen::Infinity>();
  }
  return report;
}

}  // namespace cgpe::collocation
