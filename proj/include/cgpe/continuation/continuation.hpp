#pragma once

// Keller pseudo-arclength continuation for F(u, lambda) = 0 with a sparse F_u.
// The arclength condition uses a problem-supplied inner product <., .> on u:
//   N(u, lambda) = <u_dot0, u - u0> + lambda_dot0 (lambda - lambda0) - nu.

#include "cgpe/collocation/collocation.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <concepts>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace cgpe::continuation {

using Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

template <class P>
concept ContinuationProblem = requires(const P& p, const VectorXd& u, double lambda, VectorXd& F,
                                       SparseMatrix& J, VectorXd& Fl) {
  { p.size() } -> std::convertible_to<int>;
  p.residual(u, lambda, F);
  p.linearize(u, lambda, F, J, Fl);
  { p.dot(u, u) } -> std::convertible_to<double>;
  { p.observable(u) } -> std::convertible_to<double>;
};

class ContinuationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Tangent {
  VectorXd u;
  double lambda = 0.0;
};

struct BranchPoint {
  double lambda = 0.0;
  VectorXd state;
  double mu = 0.0;  // problem observable
  Tangent tangent;
  bool fold = false;       // lambda_dot changed sign between the previous point and this one
  double residual_norm = 0.0;
  double nu = 0.0;         // step that produced this point from its anchor
  int iterations = 0;
};

struct Fold {
  double lambda = 0.0;
  VectorXd state;
  double mu = 0.0;
  std::size_t index = 0;  // branch index of the point flagged with this fold
};

enum class Termination { range_exhausted, step_failure, max_points, closed_loop };

inline const char* to_string(Termination t) {
  switch (t) {
    case Termination::range_exhausted: return "range exhausted";
    case Termination::step_failure: return "step failure";
    case Termination::max_points: return "max points";
    case Termination::closed_loop: return "closed loop";
  }
  return "?";
}

struct Branch {
  std::string parameter;
  std::vector<BranchPoint> points;
  std::vector<Fold> folds;
  std::size_t start_index = 0;  // position of the starting point
  Termination backward_end = Termination::range_exhausted;
  Termination forward_end = Termination::range_exhausted;
};

struct Settings {
  double lambda_min = -INFINITY;
  double lambda_max = INFINITY;
  double nu_initial = 1e-3;
  double nu_min = 1e-6;
  double nu_max = 1e-2;
  int max_points = 2000;        // per direction
  int max_corrector_iterations = 8;
  int fast_iterations = 3;      // nu doubles when the corrector needs at most this many
  double tolerance = 1e-10;     // max-norm of F at accepted points
  double fold_tolerance = 1e-4; // |Delta lambda| of the localized fold
  bool both_directions = true;
};

namespace detail {

inline double inf_norm(const VectorXd& v) { return v.lpNorm<Eigen::Infinity>(); }

struct Linearization {
  VectorXd F;
  SparseMatrix J;
  VectorXd Fl;
};

template <ContinuationProblem P>
Linearization linearize(const P& p, const VectorXd& u, double lambda) {
  Linearization L;
  p.linearize(u, lambda, L.F, L.J, L.Fl);
  return L;
}

/// Row vector r with r . x = <t, x> for the problem's inner product,
/// recovered from the unit vectors' images (the inner product is diagonal
/// or at least bilinear, so probing with t against e_i is exact).
template <ContinuationProblem P>
VectorXd dot_row(const P& p, const VectorXd& t) {
  if constexpr (requires { p.weights(); }) {
    return p.weights().cwiseProduct(t);
  } else {
    VectorXd row(t.size());
    VectorXd e = VectorXd::Zero(t.size());
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      e[i] = 1.0;
      row[i] = p.dot(t, e);
      e[i] = 0.0;
    }
    return row;
  }
}

/// Solve [[J, Fl], [row^T, c]] [x; y] = [a; b] as one sparse LU.
inline std::pair<VectorXd, double> bordered_solve(const SparseMatrix& J, const VectorXd& Fl, const VectorXd& row,
                                                  double c, const VectorXd& a, double b) {
  const Eigen::Index n = J.rows();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(J.nonZeros() + 2 * n + 1));
  for (int k = 0; k < J.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(J, k); it; ++it) trip.emplace_back(it.row(), it.col(), it.value());
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (Fl[i] != 0.0) trip.emplace_back(i, n, Fl[i]);
    if (row[i] != 0.0) trip.emplace_back(n, i, row[i]);
  }
  trip.emplace_back(n, n, c);
  SparseMatrix G(n + 1, n + 1);
  G.setFromTriplets(trip.begin(), trip.end());
  G.makeCompressed();
  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
  lu.compute(G);
  if (lu.info() != Eigen::Success) throw ContinuationError("bordered matrix is singular");
  VectorXd rhs(n + 1);
  rhs.head(n) = a;
  rhs[n] = b;
  VectorXd x = lu.solve(rhs);
  if (!x.allFinite()) throw ContinuationError("bordered solve produced non-finite values");
  return {x.head(n), x[n]};
}

/// Same system by block elimination: two solves with J and a scalar
/// correction. Returns nullopt when J cannot be factorized or the result
/// fails a residual check (J nearly singular, e.g. at a fold).
inline std::optional<std::pair<VectorXd, double>> block_solve(const SparseMatrix& J, const VectorXd& Fl,
                                                              const VectorXd& row, double c, const VectorXd& a,
                                                              double b) {
  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
  lu.compute(J);
  if (lu.info() != Eigen::Success) return std::nullopt;
  const VectorXd z1 = lu.solve(a);
  const VectorXd z2 = lu.solve(Fl);
  if (!z1.allFinite() || !z2.allFinite()) return std::nullopt;
  const double denom = c - row.dot(z2);
  if (!std::isfinite(denom) || denom == 0.0) return std::nullopt;
  const double y = (b - row.dot(z1)) / denom;
  VectorXd x = z1 - y * z2;
  Eigen::VectorXd rowsum = Eigen::VectorXd::Zero(J.rows());
  for (int k = 0; k < J.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(J, k); it; ++it) rowsum[it.row()] += std::abs(it.value());
  }
  const double scale = detail::inf_norm(a) + detail::inf_norm(Fl) * std::abs(y) + std::abs(b) +
                       detail::inf_norm(rowsum) * detail::inf_norm(x) + 1e-300;
  const double r1 = detail::inf_norm(J * x + Fl * y - a);
  const double r2 = std::abs(row.dot(x) + c * y - b);
  if (!(r1 <= 1e-8 * scale) || !(r2 <= 1e-8 * scale)) return std::nullopt;
  return std::make_pair(std::move(x), y);
}

inline std::pair<VectorXd, double> solve_bordered(const SparseMatrix& J, const VectorXd& Fl, const VectorXd& row,
                                                  double c, const VectorXd& a, double b) {
  if (auto r = block_solve(J, Fl, row, c, a, b)) return *r;
  return bordered_solve(J, Fl, row, c, a, b);
}

}  // namespace detail

/// Unit tangent at (u, lambda): F_u u_dot + F_lambda lambda_dot = 0 and
/// <u_dot, u_dot> + lambda_dot^2 = 1. With a reference tangent the result is
/// oriented to have a positive inner product with it; without one,
/// lambda_dot > 0.
template <ContinuationProblem P>
Tangent tangent_at(const P& p, const VectorXd& u, double lambda, const Tangent* reference = nullptr) {
  const auto L = detail::linearize(p, u, lambda);
  Tangent t;
  bool done = false;
  if (!reference) {
    // u_dot = -lambda_dot J^{-1} F_lambda
    Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
    lu.compute(L.J);
    if (lu.info() == Eigen::Success) {
      const VectorXd z = lu.solve(L.Fl);
      if (z.allFinite() && detail::inf_norm(L.J * z - L.Fl) <= 1e-8 * (detail::inf_norm(L.Fl) + 1e-300)) {
        t.u = -z;
        t.lambda = 1.0;
        done = true;
      }
    }
    if (!done) {
      // fall back to the direction of lambda as the border
      const VectorXd row = VectorXd::Zero(u.size());
      auto [x, y] = detail::bordered_solve(L.J, L.Fl, row, 1.0, VectorXd::Zero(u.size()), 1.0);
      t.u = std::move(x);
      t.lambda = y;
      done = true;
    }
  } else {
    const VectorXd row = detail::dot_row(p, reference->u);
    auto [x, y] = detail::solve_bordered(L.J, L.Fl, row, reference->lambda, VectorXd::Zero(u.size()), 1.0);
    t.u = std::move(x);
    t.lambda = y;
  }
  const double norm = std::sqrt(p.dot(t.u, t.u) + t.lambda * t.lambda);
  if (!(norm > 0.0) || !std::isfinite(norm)) throw ContinuationError("tangent computation failed (rank-deficient)");
  t.u /= norm;
  t.lambda /= norm;
  const double orient = reference ? p.dot(reference->u, t.u) + reference->lambda * t.lambda : t.lambda;
  if (orient < 0.0) {
    t.u = -t.u;
    t.lambda = -t.lambda;
  }
  return t;
}

struct CorrectorResult {
  VectorXd u;
  double lambda = 0.0;
  int iterations = 0;
  double residual_norm = 0.0;
};

/// Newton on [F; N] = 0 starting from the Euler predictor of `anchor` with step nu.
template <ContinuationProblem P>
std::optional<CorrectorResult> keller_corrector(const P& p, const BranchPoint& anchor, double nu,
                                                const Settings& s) {
  CorrectorResult c;
  c.u = anchor.state + nu * anchor.tangent.u;
  c.lambda = anchor.lambda + nu * anchor.tangent.lambda;
  const VectorXd row = detail::dot_row(p, anchor.tangent.u);
  for (int it = 0; it <= s.max_corrector_iterations; ++it) {
    auto L = detail::linearize(p, c.u, c.lambda);
    if (!L.F.allFinite()) return std::nullopt;
    const double N = row.dot(c.u - anchor.state) + anchor.tangent.lambda * (c.lambda - anchor.lambda) - nu;
    c.residual_norm = detail::inf_norm(L.F);
    if (c.residual_norm < s.tolerance && std::abs(N) < s.tolerance) {
      c.iterations = it;
      return c;
    }
    if (it == s.max_corrector_iterations) break;
    try {
      auto [du, dl] = detail::solve_bordered(L.J, L.Fl, row, anchor.tangent.lambda, -L.F, -N);
      c.u += du;
      c.lambda += dl;
    } catch (const ContinuationError&) {
      return std::nullopt;
    }
    if (!c.u.allFinite() || !std::isfinite(c.lambda)) return std::nullopt;
  }
  return std::nullopt;
}

/// Plain Newton in u at fixed lambda (used to land exactly on a range end).
template <ContinuationProblem P>
std::optional<CorrectorResult> fixed_lambda_corrector(const P& p, VectorXd u, double lambda, const Settings& s) {
  for (int it = 0; it <= s.max_corrector_iterations; ++it) {
    auto L = detail::linearize(p, u, lambda);
    if (!L.F.allFinite()) return std::nullopt;
    const double r = detail::inf_norm(L.F);
    if (r < s.tolerance) return CorrectorResult{std::move(u), lambda, it, r};
    if (it == s.max_corrector_iterations) break;
    Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
    lu.compute(L.J);
    if (lu.info() != Eigen::Success) return std::nullopt;
    u -= lu.solve(L.F);
    if (!u.allFinite()) return std::nullopt;
  }
  return std::nullopt;
}

template <ContinuationProblem P>
BranchPoint make_point(const P& p, CorrectorResult c, const Tangent& reference, double nu) {
  BranchPoint pt;
  pt.tangent = tangent_at(p, c.u, c.lambda, &reference);
  pt.lambda = c.lambda;
  pt.mu = p.observable(c.u);
  pt.residual_norm = c.residual_norm;
  pt.iterations = c.iterations;
  pt.nu = nu;
  pt.state = std::move(c.u);
  return pt;
}

/// Localize a fold between `anchor` (lambda_dot of one sign) and the point at
/// step nu_hi (opposite sign) by bisection on the step.
template <ContinuationProblem P>
std::optional<Fold> locate_fold(const P& p, const BranchPoint& anchor, double nu_hi, const Settings& s) {
  double a = 0.0, b = nu_hi;
  double la_dot = anchor.tangent.lambda;
  BranchPoint best = anchor;
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (a + b);
    auto c = keller_corrector(p, anchor, mid, s);
    if (!c) return std::nullopt;
    BranchPoint pt = make_point(p, std::move(*c), anchor.tangent, mid);
    if ((pt.tangent.lambda > 0.0) == (la_dot > 0.0)) {
      a = mid;
    } else {
      b = mid;
    }
    best = pt;
    // near the turning point lambda(s) ~ lambda_f - k (s - s_f)^2, so
    // |lambda - lambda_f| <= |lambda_dot| * (b - a) on the bracket
    if (std::abs(pt.tangent.lambda) * (b - a) < 0.1 * s.fold_tolerance || b - a < 1e-14) break;
  }
  return Fold{best.lambda, best.state, best.mu, 0};
}

namespace detail {

template <ContinuationProblem P>
double distance(const P& p, const BranchPoint& a, const BranchPoint& b) {
  const VectorXd d = a.state - b.state;
  const double dl = a.lambda - b.lambda;
  return std::sqrt(std::max(0.0, p.dot(d, d)) + dl * dl);
}

/// Trace in one direction from `start` (whose tangent already points the
/// right way). Points are appended to `out`; folds to `folds`.
template <ContinuationProblem P>
Termination trace_direction(const P& p, const BranchPoint& start, const Settings& s,
                            std::vector<BranchPoint>& out, std::vector<Fold>& folds) {
  BranchPoint anchor = start;
  double nu = std::clamp(s.nu_initial, s.nu_min, s.nu_max);
  double travelled = 0.0;
  for (int count = 0; count < s.max_points; ++count) {
    std::optional<CorrectorResult> c;
    while (!(c = keller_corrector(p, anchor, nu, s))) {
      nu *= 0.5;
      if (nu < s.nu_min) return Termination::step_failure;
    }
    const int iterations = c->iterations;
    if (c->lambda < s.lambda_min || c->lambda > s.lambda_max) {
      const double bound = c->lambda < s.lambda_min ? s.lambda_min : s.lambda_max;
      const double frac = (bound - anchor.lambda) / (c->lambda - anchor.lambda);
      if (std::abs(bound - anchor.lambda) > 1e-14 * (1.0 + std::abs(bound)) && frac > 0.0) {
        VectorXd guess = anchor.state + frac * (c->u - anchor.state);
        if (auto e = fixed_lambda_corrector(p, std::move(guess), bound, s)) {
          const double nu_end = p.dot(anchor.tangent.u, e->u - anchor.state) + anchor.tangent.lambda * (bound - anchor.lambda);
          out.push_back(make_point(p, std::move(*e), anchor.tangent, nu_end));
        }
      }
      return Termination::range_exhausted;
    }
    BranchPoint pt = make_point(p, std::move(*c), anchor.tangent, nu);
    if ((pt.tangent.lambda > 0.0) != (anchor.tangent.lambda > 0.0) && anchor.tangent.lambda != 0.0) {
      pt.fold = true;
      if (auto f = locate_fold(p, anchor, nu, s)) {
        f->index = out.size();
        folds.push_back(std::move(*f));
      }
    }
    travelled += nu;
    out.push_back(pt);
    if (travelled > 4.0 * nu && distance(p, pt, start) < 0.75 * nu) return Termination::closed_loop;
    anchor = std::move(pt);
    if (iterations <= s.fast_iterations) nu = std::min(2.0 * nu, s.nu_max);
  }
  return Termination::max_points;
}

}  // namespace detail

/// Trace the branch through (u0, lambda0) inside [lambda_min, lambda_max].
/// Both directions are followed (unless disabled) and joined in order of
/// arclength; the starting point sits at `start_index`.
template <ContinuationProblem P>
Branch trace_branch(const P& p, const VectorXd& u0, double lambda0, const Settings& s,
                    const std::string& parameter = "lambda") {
  if (lambda0 < s.lambda_min || lambda0 > s.lambda_max) throw std::invalid_argument("start lambda outside the range");
  if (!(s.nu_max >= s.nu_min) || !(s.nu_min > 0.0)) throw std::invalid_argument("need 0 < nu_min <= nu_max");
  auto c = fixed_lambda_corrector(p, u0, lambda0, s);
  if (!c) throw ContinuationError("start point does not converge");
  BranchPoint start;
  start.state = c->u;
  start.lambda = lambda0;
  start.mu = p.observable(start.state);
  start.residual_norm = c->residual_norm;
  start.tangent = tangent_at(p, start.state, lambda0);

  Branch br;
  br.parameter = parameter;
  std::vector<BranchPoint> fwd, bwd;
  std::vector<Fold> ffolds, bfolds;
  br.forward_end = detail::trace_direction(p, start, s, fwd, ffolds);
  if (s.both_directions && br.forward_end != Termination::closed_loop) {
    BranchPoint rev = start;
    rev.tangent.u = -rev.tangent.u;
    rev.tangent.lambda = -rev.tangent.lambda;
    br.backward_end = detail::trace_direction(p, rev, s, bwd, bfolds);
  } else {
    br.backward_end = br.forward_end;
  }
  // backward points in reverse order, tangents flipped back to the forward orientation
  for (auto it = bwd.rbegin(); it != bwd.rend(); ++it) {
    BranchPoint q = std::move(*it);
    q.tangent.u = -q.tangent.u;
    q.tangent.lambda = -q.tangent.lambda;
    br.points.push_back(std::move(q));
  }
  br.start_index = br.points.size();
  br.points.push_back(start);
  for (auto& q : fwd) br.points.push_back(std::move(q));
  for (auto& f : bfolds) {
    f.index = br.start_index - 1 - f.index;
    br.folds.push_back(std::move(f));
  }
  for (auto& f : ffolds) {
    f.index = br.start_index + 1 + f.index;
    br.folds.push_back(std::move(f));
  }
  std::sort(br.folds.begin(), br.folds.end(), [](const Fold& a, const Fold& b) { return a.index < b.index; });
  return br;
}

/// Folds recorded on a branch (lambda, state).
inline std::vector<Fold> fold_report(const Branch& b) {
  if (b.points.empty()) throw std::invalid_argument("fold_report: empty branch");
  return b.folds;
}

}  // namespace cgpe::continuation
