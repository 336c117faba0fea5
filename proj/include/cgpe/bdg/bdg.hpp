#pragma once

// Bogoliubov-de Gennes stability of radial stationary states.
//
// For a background phi = f(r) e^{i m0 theta} and a perturbation
//   u(r) e^{i(m0+n)theta} e^{-i omega t} + v*(r) e^{i(m0-n)theta} e^{i omega* t}
// the linearized equation is the block eigenproblem
//   [ L1(m0+n)     L2           ] [u]         [u]
//   [ -L2*        -L1(m0-n)*    ] [v] = omega [v],
//   L1(k) = -mu - d2/dr2 - (1/r) d/dr + k^2/r^2 + V + 2(1 - i sigma)|f|^2 + i alpha Theta,
//   L2    = (1 - i sigma) f^2.
// Instability iff some Im omega > 0.

#include "cgpe/core/model.hpp"
#include "cgpe/core/numerics.hpp"
#include "cgpe/stationary/stationary.hpp"

#include <complex>
#ifndef lapack_complex_double
#define lapack_complex_double std::complex<double>
#endif
#ifndef lapack_complex_float
#define lapack_complex_float std::complex<float>
#endif
#include <lapacke.h>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace cgpe::bdg {

using cdouble = std::complex<double>;

class EigensolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Staggered grid r_j = (j - 1/2) h, j = 1..n, with h = b / (n + 1/2), so the
/// Dirichlet node r_{n+1} = b. The ghost coefficient at r_0 = -h/2 vanishes
/// identically for the centred (1/r) d/dr, so no inner condition is needed.
struct RadialGrid {
  int n = 0;
  double b = 0.0;
  double h = 0.0;
  std::vector<double> r;

  RadialGrid() = default;
  RadialGrid(int n_grid, double b_) : n(n_grid), b(b_), h(b_ / (n_grid + 0.5)), r(n_grid) {
    for (int j = 0; j < n; ++j) r[j] = (j + 0.5) * h;
  }
};

/// Blocks of the discretized operator. L1(k) = A + i B is tridiagonal with
/// k-dependent diagonal; L2 is diagonal.
struct BdgOperator {
  RadialGrid grid;
  int mode = 1;            // n (or m for a non-vortex background)
  int background = 0;      // m0
  double mu = 0.0;
  std::vector<double> lower, upper;  // off-diagonals of -d2/dr2 - (1/r) d/dr (size n)
  std::vector<double> diag_base;     // 2/h^2 + V - mu + 2|f|^2  (without k^2/r^2)
  std::vector<double> diag_imag;     // alpha Theta - 2 sigma |f|^2
  std::vector<cdouble> l2;           // (1 - i sigma) f^2

  int size() const { return 2 * grid.n; }

  /// Infinity norm of the block matrix.
  double norm_inf() const {
    double m = 0.0;
    for (int j = 0; j < grid.n; ++j) {
      const double k = std::max(std::abs(k_u()), std::abs(k_v()));
      const double d = std::abs(cdouble(diag_base[j] + k * k / (grid.r[j] * grid.r[j]), diag_imag[j]));
      m = std::max(m, std::abs(lower[j]) + std::abs(upper[j]) + d + std::abs(l2[j]));
    }
    return m;
  }

  /// Eigenvalues closer than this to the real axis cannot be signed: the
  /// eigensolver's backward error is a modest multiple of eps * ||H||.
  double neutral_tolerance() const { return 1e3 * std::numeric_limits<double>::epsilon() * norm_inf(); }
  int k_u() const { return background + mode; }
  int k_v() const { return background - mode; }

  /// Dense L1(k).
  Eigen::MatrixXcd l1(int k) const {
    const int n = grid.n;
    Eigen::MatrixXcd L = Eigen::MatrixXcd::Zero(n, n);
    for (int j = 0; j < n; ++j) {
      const double kk = static_cast<double>(k) * k / (grid.r[j] * grid.r[j]);
      L(j, j) = cdouble(diag_base[j] + kk, diag_imag[j]);
      if (j > 0) L(j, j - 1) = lower[j];
      if (j + 1 < n) L(j, j + 1) = upper[j];
    }
    return L;
  }

  /// L1(k) x without forming the matrix.
  Eigen::VectorXcd apply_l1(int k, const Eigen::VectorXcd& x) const {
    const int n = grid.n;
    Eigen::VectorXcd y(n);
    for (int j = 0; j < n; ++j) {
      const double kk = static_cast<double>(k) * k / (grid.r[j] * grid.r[j]);
      cdouble acc = cdouble(diag_base[j] + kk, diag_imag[j]) * x[j];
      if (j > 0) acc += lower[j] * x[j - 1];
      if (j + 1 < n) acc += upper[j] * x[j + 1];
      y[j] = acc;
    }
    return y;
  }

  /// The full 2n x 2n block matrix.
  Eigen::MatrixXcd dense() const {
    const int n = grid.n;
    Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(2 * n, 2 * n);
    H.topLeftCorner(n, n) = l1(k_u());
    H.bottomRightCorner(n, n) = -l1(k_v()).conjugate();
    for (int j = 0; j < n; ++j) {
      H(j, n + j) = l2[j];
      H(n + j, j) = -std::conj(l2[j]);
    }
    return H;
  }
};

/// Discretize the BdG operator about `profile` for mode n (m for winding-0
/// backgrounds).
inline BdgOperator assemble_bdg(const stationary::RadialProfile& profile, int mode, int n_grid) {
  if (mode < 1) throw std::invalid_argument("assemble_bdg: mode must be >= 1");
  if (n_grid < 100) throw std::invalid_argument("assemble_bdg: n_grid must be >= 100");
  const auto& p = profile.params;
  BdgOperator op;
  op.grid = RadialGrid(n_grid, p.b);
  op.mode = mode;
  op.background = profile.winding;
  op.mu = profile.mu;
  const int n = n_grid;
  const double h = op.grid.h;
  op.lower.assign(n, 0.0);
  op.upper.assign(n, 0.0);
  op.diag_base.assign(n, 0.0);
  op.diag_imag.assign(n, 0.0);
  op.l2.assign(n, 0.0);
  if (profile.r.empty() || profile.r.back() < op.grid.r.back()) {
    throw std::out_of_range("assemble_bdg: profile does not cover the BdG grid");
  }
  for (int j = 0; j < n; ++j) {
    const double r = op.grid.r[j];
    const cdouble f = profile(r);  // radial amplitude; the e^{i m0 theta} factor is implicit
    const double f2 = std::norm(f);
    op.lower[j] = -1.0 / (h * h) + 1.0 / (2.0 * h * r);
    op.upper[j] = -1.0 / (h * h) - 1.0 / (2.0 * h * r);
    op.diag_base[j] = 2.0 / (h * h) + p.trap(r) - profile.mu + 2.0 * f2;
    op.diag_imag[j] = pump_profile(r, p) - 2.0 * p.sigma * f2;
    op.l2[j] = cdouble(1.0, -p.sigma) * f * f;
  }
  op.lower[0] = 0.0;  // ghost coefficient, exactly zero on the staggered grid
  return op;
}

namespace detail {

inline std::vector<cdouble> zgeev_values(Eigen::MatrixXcd a) {
  const lapack_int n = static_cast<lapack_int>(a.rows());
  std::vector<cdouble> w(n);
  const lapack_int info = LAPACKE_zgeev(LAPACK_COL_MAJOR, 'N', 'N', n, a.data(), n, w.data(), nullptr, 1,
                                        nullptr, 1);
  if (info != 0) throw EigensolverError("zgeev failed (info = " + std::to_string(info) + ")");
  return w;
}

inline std::vector<cdouble> dgeev_values(Eigen::MatrixXd a) {
  const lapack_int n = static_cast<lapack_int>(a.rows());
  std::vector<double> wr(n), wi(n);
  const lapack_int info = LAPACKE_dgeev(LAPACK_COL_MAJOR, 'N', 'N', n, a.data(), n, wr.data(), wi.data(),
                                        nullptr, 1, nullptr, 1);
  if (info != 0) throw EigensolverError("dgeev failed (info = " + std::to_string(info) + ")");
  std::vector<cdouble> w(n);
  for (lapack_int i = 0; i < n; ++i) w[i] = cdouble(wr[i], wi[i]);
  return w;
}

inline void sort_by_imag_desc(std::vector<cdouble>& w) {
  std::sort(w.begin(), w.end(), [](cdouble a, cdouble b) {
    if (a.imag() != b.imag()) return a.imag() > b.imag();
    return a.real() < b.real();
  });
}

}  // namespace detail

/// All eigenvalues of a general complex matrix (LAPACK zgeev), by descending Im.
inline std::vector<cdouble> eigenvalues(const Eigen::MatrixXcd& a) {
  if (!a.allFinite()) throw EigensolverError("matrix has non-finite entries");
  auto w = detail::zgeev_values(a);
  detail::sort_by_imag_desc(w);
  return w;
}

/// Spectrum of the block operator, descending Im. When both diagonal blocks
/// share the same angular momentum the problem is similar to a real one:
/// with L1 = A + iB, L2 = C + iD and Q = [[I, iI], [I, -iI]] / sqrt 2,
///   Q^H (i H) Q = [[-(B + D), C - A], [A + C, D - B]] = M,
/// so omega = -i lambda(M) and a real Hessenberg QR suffices (~4x cheaper).
inline std::vector<cdouble> eigen_spectrum(const BdgOperator& op) {
  const int n = op.grid.n;
  const bool real_form = op.k_u() * op.k_u() == op.k_v() * op.k_v();
  if (!real_form) return eigenvalues(op.dense());

  const Eigen::MatrixXcd L1 = op.l1(op.k_u());
  const Eigen::MatrixXd A = L1.real();
  const Eigen::MatrixXd B = L1.imag();
  Eigen::VectorXd C(n), D(n);
  for (int j = 0; j < n; ++j) {
    C[j] = op.l2[j].real();
    D[j] = op.l2[j].imag();
  }
  Eigen::MatrixXd M(2 * n, 2 * n);
  M.topLeftCorner(n, n) = -B;
  M.topLeftCorner(n, n).diagonal() -= D;
  M.topRightCorner(n, n) = -A;
  M.topRightCorner(n, n).diagonal() += C;
  M.bottomLeftCorner(n, n) = A;
  M.bottomLeftCorner(n, n).diagonal() += C;
  M.bottomRightCorner(n, n) = -B;
  M.bottomRightCorner(n, n).diagonal() += D;
  if (!M.allFinite()) throw EigensolverError("matrix has non-finite entries");
  auto lam = detail::dgeev_values(std::move(M));
  std::vector<cdouble> w(lam.size());
  for (std::size_t i = 0; i < lam.size(); ++i) w[i] = cdouble(lam[i].imag(), -lam[i].real());
  detail::sort_by_imag_desc(w);
  return w;
}

struct ModeResult {
  int mode = 0;
  double max_im = -INFINITY;
  double neutral_tol = 0.0;
  cdouble leading{};                 // eigenvalue with the largest Im
  std::vector<cdouble> spectrum;     // empty unless requested
};

struct StabilityReport {
  int background = 0;
  int n_grid = 0;
  std::vector<ModeResult> modes;
  double max_im = -INFINITY;
  double neutral_tol = 0.0;  // largest per-mode neutral tolerance
  bool complete = true;      // false when a scan stopped at the first unstable mode

  /// No eigenvalue resolvably in the upper half plane. Modes within the
  /// neutral band (exactly real in exact arithmetic, e.g. the far field where
  /// phi and Theta vanish) count as not growing.
  bool stable() const { return max_im <= neutral_tol; }
  const char* verdict() const { return stable() ? "stable" : "unstable"; }
};

struct ScanSettings {
  int n_grid = 600;
  bool keep_spectrum = false;
  bool stop_on_unstable = false;  // verdict-only scans
};

inline StabilityReport scan_modes(const stationary::RadialProfile& profile, int first, int last,
                                  const ScanSettings& s) {
  if (last < first || first < 1) throw std::invalid_argument("mode range must be non-empty and start at >= 1");
  StabilityReport rep;
  rep.background = profile.winding;
  rep.n_grid = s.n_grid;
  for (int m = first; m <= last; ++m) {
    const auto op = assemble_bdg(profile, m, s.n_grid);
    auto w = eigen_spectrum(op);
    ModeResult res;
    res.mode = m;
    res.leading = w.front();
    res.max_im = w.front().imag();
    res.neutral_tol = op.neutral_tolerance();
    if (s.keep_spectrum) res.spectrum = std::move(w);
    rep.max_im = std::max(rep.max_im, res.max_im);
    rep.neutral_tol = std::max(rep.neutral_tol, res.neutral_tol);
    rep.modes.push_back(std::move(res));
    if (s.stop_on_unstable && !rep.stable() && m < last) {
      rep.complete = false;
      break;
    }
  }
  return rep;
}

/// Modes m = 1..m_max about a winding-0 state.
inline StabilityReport stability_scan(const stationary::RadialProfile& profile, int m_max,
                                      const ScanSettings& s = {}) {
  return scan_modes(profile, 1, m_max, s);
}

/// Modes n = 1..n_max about a central vortex (winding >= 1).
inline StabilityReport central_vortex_stability(const stationary::RadialProfile& profile, int n_max,
                                                const ScanSettings& s = {}) {
  if (profile.winding < 1) throw std::invalid_argument("central_vortex_stability: profile winding must be >= 1");
  return scan_modes(profile, 1, n_max, s);
}

struct CurvePoint {
  double R = 0.0;
  double max_im = NAN;
  bool stable = false;
  bool ok = false;
  std::string error;
};

/// Solves the stationary problem at pump radius R from the Thomas-Fermi guess.
using ProfileSolver = std::function<stationary::RadialProfile(const ModelParams&)>;

inline stationary::RadialProfile solve_from_thomas_fermi(const ModelParams& p) {
  return stationary::solve_stationary(p, stationary::thomas_fermi_guess(p, stationary::default_mesh(p)));
}

inline CurvePoint curve_point(const ModelParams& base, double R, int m_max, const ScanSettings& s,
                              const ProfileSolver& solver) {
  CurvePoint pt;
  pt.R = R;
  try {
    const auto prof = solver(base.with_pump_radius(R));
    const auto rep = stability_scan(prof, m_max, s);
    pt.max_im = rep.max_im;
    pt.stable = rep.stable();
    pt.ok = true;
  } catch (const std::exception& e) {
    pt.error = e.what();
  }
  return pt;
}

/// (R, max Im omega) for every R; failed solves are recorded as gaps.
inline std::vector<CurvePoint> stability_curve(const ModelParams& base, const std::vector<double>& R_values,
                                               int m_max = 50, const ScanSettings& s = {},
                                               const ProfileSolver& solver = solve_from_thomas_fermi) {
  std::vector<CurvePoint> out;
  out.reserve(R_values.size());
  for (double R : R_values) out.push_back(curve_point(base, R, m_max, s, solver));
  return out;
}

struct Threshold {
  double lo = NAN;  // stable end
  double hi = NAN;  // unstable end
  double estimate() const { return 0.5 * (lo + hi); }
  double width() const { return hi - lo; }
};

/// Bisection on R for the stable -> unstable transition inside [lo, hi].
/// The verdict at each midpoint stops at the first unstable mode.
inline std::optional<Threshold> locate_threshold(const ModelParams& base, double lo, double hi, double width,
                                                 int m_max = 50, ScanSettings s = {},
                                                 const ProfileSolver& solver = solve_from_thomas_fermi) {
  s.stop_on_unstable = true;
  s.keep_spectrum = false;
  auto unstable = [&](double R) {
    const auto pt = curve_point(base, R, m_max, s, solver);
    if (!pt.ok) throw std::runtime_error("stationary solve failed at R = " + std::to_string(R) + ": " + pt.error);
    return !pt.stable;
  };
  if (unstable(lo) || !unstable(hi)) return std::nullopt;
  Threshold t{lo, hi};
  while (t.width() > width) {
    const double mid = t.estimate();
    if (unstable(mid)) t.hi = mid;
    else t.lo = mid;
  }
  return t;
}

}  // namespace cgpe::bdg
