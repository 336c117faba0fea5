#pragma once

// Observables of radial profiles and 2D fields: mass, chemical potential,
// current density, phase gradients, vortex census and azimuthal averages.

#include "cgpe/core/model.hpp"
#include "cgpe/core/numerics.hpp"
#include "cgpe/splitstep/field2d.hpp"
#include "cgpe/stationary/stationary.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace cgpe::diagnostics {

using splitstep::cdouble;
using splitstep::Field2D;
using splitstep::Grid2D;

// --- mass ---------------------------------------------------------------------

/// int |psi|^2 dx by the rectangle (periodic trapezoid) rule.
inline double mass(const Field2D& f) { return f.norm2() * f.grid.hx() * f.grid.hy(); }

/// 2 pi int_0^b |phi|^2 r dr by composite Simpson on the profile points.
inline double mass(const stationary::RadialProfile& p) {
  std::vector<double> y(p.r.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::norm(p.phi[i]) * p.r[i];
  return 2.0 * std::numbers::pi * numerics::simpson(p.r, y);
}

// --- chemical potential -----------------------------------------------------------

/// mu = int (|phi'|^2 + V|phi|^2 + m^2/r^2 |phi|^2 + |phi|^4) r dr / int |phi|^2 r dr,
/// Simpson quadrature, phi' by five-point differences.
inline double chemical_potential_integral(const std::vector<double>& r, const std::vector<cdouble>& phi,
                                          const Potential& trap, int winding = 0) {
  if (r.size() != phi.size() || r.size() < 5) throw std::invalid_argument("profile needs >= 5 samples");
  const auto dphi = numerics::derivative_5pt<cdouble>(r, phi);
  std::vector<double> num(r.size()), den(r.size());
  const double m2 = static_cast<double>(winding) * winding;
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double n = std::norm(phi[i]);
    const double centrifugal = (winding == 0 || r[i] == 0.0) ? 0.0 : m2 * n / (r[i] * r[i]);
    num[i] = (std::norm(dphi[i]) + trap(r[i]) * n + centrifugal + n * n) * r[i];
    den[i] = n * r[i];
  }
  const double d = numerics::simpson(r, den);
  if (!(d > 1e-300)) throw std::domain_error("chemical potential of an empty profile is undefined");
  return numerics::simpson(r, num) / d;
}

inline double chemical_potential_integral(const stationary::RadialProfile& p) {
  return chemical_potential_integral(p.r, p.phi, p.params.trap, p.winding);
}

// --- spectral derivatives ---------------------------------------------------------------

struct Gradient {
  std::vector<cdouble> dx, dy;
};

/// Spectral gradient on the periodic grid (Nyquist modes dropped).
inline Gradient spectral_gradient(const Field2D& f) {
  const Grid2D& g = f.grid;
  splitstep::Fft2D fft(g);
  fft.load(f.values);
  fft.forward();
  std::vector<cdouble> hat(g.size());
  fft.store(hat);
  const double scale = 1.0 / static_cast<double>(g.size());
  Gradient out{std::vector<cdouble>(g.size()), std::vector<cdouble>(g.size())};
  for (int pass = 0; pass < 2; ++pass) {
    cdouble* d = fft.data();
    for (int k = 0; k < g.ny; ++k) {
      const double ky = (k == g.ny / 2) ? 0.0 : Grid2D::wavenumber(k, g.ny, g.by - g.ay);
      for (int j = 0; j < g.nx; ++j) {
        const double kx = (j == g.nx / 2) ? 0.0 : Grid2D::wavenumber(j, g.nx, g.bx - g.ax);
        const double kk = pass == 0 ? kx : ky;
        d[g.index(j, k)] = cdouble(0.0, kk * scale) * hat[g.index(j, k)];
      }
    }
    fft.backward();
    fft.store(pass == 0 ? out.dx : out.dy);
  }
  return out;
}

// --- current ------------------------------------------------------------------------

struct CurrentField {
  Grid2D grid;
  std::vector<double> jx, jy;
};

/// J = Im(psi* grad psi).
inline CurrentField current(const Field2D& f) {
  const auto grad = spectral_gradient(f);
  CurrentField c{f.grid, std::vector<double>(f.values.size()), std::vector<double>(f.values.size())};
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    c.jx[i] = (std::conj(f.values[i]) * grad.dx[i]).imag();
    c.jy[i] = (std::conj(f.values[i]) * grad.dy[i]).imag();
  }
  return c;
}

/// |grad theta| = |J| / rho where rho >= floor, NaN elsewhere.
inline std::vector<double> phase_gradient_magnitude(const Field2D& f, double density_floor) {
  if (!(density_floor > 0.0)) throw std::invalid_argument("density floor must be > 0");
  const auto c = current(f);
  std::vector<double> out(f.values.size(), NAN);
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    const double rho = std::norm(f.values[i]);
    if (rho >= density_floor) out[i] = std::hypot(c.jx[i], c.jy[i]) / rho;
  }
  return out;
}

/// mu ~ int (|grad psi|^2 + V |psi|^2 + |psi|^4) / int |psi|^2, spectral gradient.
inline double mu_estimate(const Field2D& f, const std::vector<double>& potential) {
  const auto grad = spectral_gradient(f);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    const double n = std::norm(f.values[i]);
    num += std::norm(grad.dx[i]) + std::norm(grad.dy[i]) + potential[i] * n + n * n;
    den += n;
  }
  return den > 0.0 ? num / den : NAN;
}

inline double max_density(const Field2D& f) {
  double m = 0.0;
  for (const auto& v : f.values) m = std::max(m, std::norm(v));
  return m;
}

// --- vortex census ------------------------------------------------------------------

struct Vortex {
  double x = 0.0;
  double y = 0.0;
  int winding = 0;
};

struct CensusSettings {
  double density_floor = -1.0;    // absolute; <= 0 means relative_floor * max density
  double relative_floor = 1e-3;
  int neighborhood = 3;           // cells around a plaquette searched for condensate
};

struct VortexCensus {
  Grid2D grid;
  double density_floor = 0.0;
  std::vector<Vortex> vortices;
  std::vector<double> plaquette_sums;  // raw phase sums of the loops that set each kept charge

  int total_winding() const {
    int s = 0;
    for (const auto& v : vortices) s += v.winding;
    return s;
  }
};

/// Principal-value phase sums around every interior plaquette. Plaquettes with
/// a nonzero winding, or with an exactly zero corner, that touch each other
/// (8-neighbour) form one cluster. Its charge is the phase winding around the
/// cluster's bounding box, which equals the sum of the plaquette windings when
/// no corner vanishes and stays correct when a zero sits on a node (where the
/// plaquette sums are ambiguous). Clusters with zero net charge are dropped. A cluster is
/// kept only when density above the floor exists within `neighborhood` cells,
/// i.e. the phase defect is a localized zero inside the condensate rather than
/// noise in the empty region.
inline VortexCensus vortex_census(const Field2D& f, const CensusSettings& s = {}) {
  const Grid2D& g = f.grid;
  VortexCensus out;
  out.grid = g;
  out.density_floor = s.density_floor > 0.0 ? s.density_floor : s.relative_floor * max_density(f);
  if (!(out.density_floor > 0.0)) return out;  // empty field

  const int px = g.nx - 1, py = g.ny - 1;
  std::vector<int> wind(static_cast<std::size_t>(px) * py, 0);
  std::vector<double> sums(wind.size(), 0.0);
  auto dphase = [](cdouble a, cdouble b) { return std::arg(b * std::conj(a)); };
  for (int k = 0; k < py; ++k) {
    for (int j = 0; j < px; ++j) {
      const cdouble a = f(j, k), b = f(j + 1, k), c = f(j + 1, k + 1), d = f(j, k + 1);
      const double sum = dphase(a, b) + dphase(b, c) + dphase(c, d) + dphase(d, a);
      const int w = static_cast<int>(std::lround(sum / (2.0 * std::numbers::pi)));
      wind[static_cast<std::size_t>(k) * px + j] = w;
      sums[static_cast<std::size_t>(k) * px + j] = sum;
    }
  }

  std::vector<char> flagged(wind.size(), 0);
  for (int k = 0; k < py; ++k) {
    for (int j = 0; j < px; ++j) {
      const bool zero = f(j, k) == 0.0 || f(j + 1, k) == 0.0 || f(j + 1, k + 1) == 0.0 || f(j, k + 1) == 0.0;
      flagged[static_cast<std::size_t>(k) * px + j] = zero || wind[static_cast<std::size_t>(k) * px + j] != 0;
    }
  }

  // winding along the node ring of plaquettes [j0, j1] x [k0, k1], counter-clockwise
  auto ring = [&](int j0, int j1, int k0, int k1) {
    double sum = 0.0;
    for (int j = j0; j <= j1; ++j) sum += dphase(f(j, k0), f(j + 1, k0));
    for (int k = k0; k <= k1; ++k) sum += dphase(f(j1 + 1, k), f(j1 + 1, k + 1));
    for (int j = j1; j >= j0; --j) sum += dphase(f(j + 1, k1 + 1), f(j, k1 + 1));
    for (int k = k1; k >= k0; --k) sum += dphase(f(j0, k + 1), f(j0, k));
    return sum;
  };

  std::vector<int> label(wind.size(), -1);
  std::vector<std::size_t> stack;
  int next_label = 0;
  for (std::size_t start = 0; start < wind.size(); ++start) {
    if (!flagged[start] || label[start] >= 0) continue;
    const int id = next_label++;
    std::vector<std::size_t> members;
    stack.push_back(start);
    label[start] = id;
    while (!stack.empty()) {
      const std::size_t cur = stack.back();
      stack.pop_back();
      members.push_back(cur);
      const int cj = static_cast<int>(cur % px), ck = static_cast<int>(cur / px);
      for (int dk = -1; dk <= 1; ++dk) {
        for (int dj = -1; dj <= 1; ++dj) {
          const int nj = cj + dj, nk = ck + dk;
          if (nj < 0 || nk < 0 || nj >= px || nk >= py) continue;
          const std::size_t n = static_cast<std::size_t>(nk) * px + nj;
          if (flagged[n] && label[n] < 0) {
            label[n] = id;
            stack.push_back(n);
          }
        }
      }
    }
    int total = 0;
    double cx = 0.0, cy = 0.0;
    bool dense = false;
    int j0 = px, j1 = -1, k0 = py, k1 = -1;
    for (std::size_t m : members) {
      total += wind[m];
      const int j = static_cast<int>(m % px), k = static_cast<int>(m / px);
      j0 = std::min(j0, j);
      j1 = std::max(j1, j);
      k0 = std::min(k0, k);
      k1 = std::max(k1, k);
      cx += g.x(j) + 0.5 * g.hx();
      cy += g.y(k) + 0.5 * g.hy();
      for (int dk = -s.neighborhood; dk <= s.neighborhood + 1 && !dense; ++dk) {
        for (int dj = -s.neighborhood; dj <= s.neighborhood + 1; ++dj) {
          const int nj = j + dj, nk = k + dk;
          if (nj < 0 || nk < 0 || nj >= g.nx || nk >= g.ny) continue;
          if (std::norm(f(nj, nk)) >= out.density_floor) {
            dense = true;
            break;
          }
        }
      }
    }
    // the ring is only trusted when the box holds no plaquette of another cluster
    bool foreign = false;
    for (int k = k0; k <= k1 && !foreign; ++k) {
      for (int j = j0; j <= j1; ++j) {
        const std::size_t n = static_cast<std::size_t>(k) * px + j;
        if (flagged[n] && label[n] != id) {
          foreign = true;
          break;
        }
      }
    }
    const double loop = foreign ? 0.0 : ring(j0, j1, k0, k1);
    if (!foreign) total = static_cast<int>(std::lround(loop / (2.0 * std::numbers::pi)));
    if (total == 0 || !dense) continue;
    out.vortices.push_back({cx / members.size(), cy / members.size(), total});
    if (foreign) {
      for (std::size_t m : members) out.plaquette_sums.push_back(sums[m]);
    } else {
      out.plaquette_sums.push_back(loop);
    }
  }
  return out;
}

// --- radial extraction -------------------------------------------------------------

struct RadialAverage {
  std::vector<double> r;
  std::vector<double> mean_abs;
  std::vector<double> variance;  // azimuthal variance of |psi|
  std::vector<int> count;
};

/// Azimuthal average of |psi| about the origin. On a centred grid with
/// hx == hy every exact radius forms its own class (keyed by i^2 + k^2 in
/// cell units); otherwise samples are binned with width max(hx, hy).
/// Only radii up to the inscribed circle are reported.
inline RadialAverage radial_extract(const Field2D& f) {
  const Grid2D& g = f.grid;
  const double hx = g.hx(), hy = g.hy();
  const double rmax = std::min({-g.ax, g.bx, -g.ay, g.by});
  if (!(rmax > 0.0)) throw std::invalid_argument("radial_extract: domain must contain the origin");
  const bool exact = std::abs(hx - hy) <= 1e-12 * hx && std::abs(g.ax + g.bx) <= 1e-12 * hx &&
                     std::abs(g.ay + g.by) <= 1e-12 * hy;
  struct Acc {
    double r = 0.0;
    std::vector<double> v;
  };
  std::map<long long, Acc> classes;
  for (int k = 0; k < g.ny; ++k) {
    for (int j = 0; j < g.nx; ++j) {
      const double x = g.x(j), y = g.y(k);
      const double r = std::hypot(x, y);
      if (r > rmax) continue;
      long long key = 0;
      double rc = r;
      if (exact) {
        const long long i = j - g.nx / 2, l = k - g.ny / 2;
        key = i * i + l * l;
        rc = hx * std::sqrt(static_cast<double>(key));
      } else {
        const double w = std::max(hx, hy);
        key = static_cast<long long>(std::floor(r / w));
        rc = (key + 0.5) * w;
      }
      const double a = std::abs(f(j, k));
      Acc& acc = classes[key];
      acc.r = rc;
      acc.v.push_back(a);
    }
  }
  RadialAverage out;
  for (const auto& [key, acc] : classes) {
    const double n = static_cast<double>(acc.v.size());
    double mean = 0.0;
    for (double a : acc.v) mean += a;
    mean /= n;
    double var = 0.0;  // two-pass, so symmetric input gives (near) zero
    for (double a : acc.v) var += (a - mean) * (a - mean);
    out.r.push_back(acc.r);
    out.mean_abs.push_back(mean);
    out.variance.push_back(var / n);
    out.count.push_back(static_cast<int>(acc.v.size()));
  }
  return out;
}

// --- embedding -----------------------------------------------------------------------

/// phi(r) e^{i m theta} sampled on the grid; zero beyond the profile's range.
inline Field2D embed_profile(const stationary::RadialProfile& p, const Grid2D& g) {
  const double rmax = p.r.back();
  return splitstep::sample(g, [&](double x, double y) {
    const double r = std::hypot(x, y);
    if (r >= rmax) return cdouble{};
    cdouble v = p(r);
    if (p.winding != 0) v *= std::polar(1.0, p.winding * std::atan2(y, x));
    return v;
  });
}

}  // namespace cgpe::diagnostics
