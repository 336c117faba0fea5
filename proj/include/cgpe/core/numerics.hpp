#pragma once

// Small numeric helpers shared by the radial solvers and diagnostics.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace cgpe::numerics {

/// Composite Simpson rule on an arbitrary increasing abscissa. An odd number
/// of subintervals closes with the three-point correction on the last one.
inline double simpson(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n != y.size()) throw std::invalid_argument("simpson: size mismatch");
  if (n < 2) return 0.0;
  if (n == 2) return 0.5 * (x[1] - x[0]) * (y[0] + y[1]);
  const std::size_t intervals = n - 1;
  const std::size_t paired = intervals - intervals % 2;
  double sum = 0.0;
  for (std::size_t i = 0; i + 2 <= paired; i += 2) {
    const double h0 = x[i + 1] - x[i];
    const double h1 = x[i + 2] - x[i + 1];
    const double hs = h0 + h1;
    sum += hs / 6.0 *
           ((2.0 - h1 / h0) * y[i] + hs * hs / (h0 * h1) * y[i + 1] + (2.0 - h0 / h1) * y[i + 2]);
  }
  if (paired != intervals) {
    const double h0 = x[n - 2] - x[n - 3];
    const double h1 = x[n - 1] - x[n - 2];
    const double a = (2.0 * h1 * h1 + 3.0 * h1 * h0) / (6.0 * (h0 + h1));
    const double b = (h1 * h1 + 3.0 * h1 * h0) / (6.0 * h0);
    const double c = h1 * h1 * h1 / (6.0 * h0 * (h0 + h1));
    sum += a * y[n - 1] + b * y[n - 2] - c * y[n - 3];
  }
  return sum;
}

/// Fornberg's finite-difference weights for derivatives 0..max_order at x0.
/// Returns w[k][j], the weight of sample j for derivative k.
inline std::vector<std::vector<double>> fornberg_weights(double x0, std::span<const double> x,
                                                         int max_order) {
  const int n = static_cast<int>(x.size());
  std::vector<std::vector<double>> c(max_order + 1, std::vector<double>(n, 0.0));
  double c1 = 1.0;
  double c4 = x[0] - x0;
  c[0][0] = 1.0;
  for (int i = 1; i < n; ++i) {
    const int mn = std::min(i, max_order);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = x[i] - x0;
    for (int j = 0; j < i; ++j) {
      const double c3 = x[i] - x[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k) {
          c[k][i] = c1 * (k * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
        }
        c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
      }
      for (int k = mn; k >= 1; --k) {
        c[k][j] = (c4 * c[k][j] - k * c[k - 1][j]) / c3;
      }
      c[0][j] = c4 * c[0][j] / c3;
    }
    c1 = c2;
  }
  return c;
}

/// Fourth-order first derivative on a non-uniform grid (five-point stencils,
/// shifted one-sided near the ends).
template <class T>
std::vector<T> derivative_5pt(std::span<const double> x, std::span<const T> y) {
  const std::size_t n = x.size();
  if (n < 5) throw std::invalid_argument("derivative_5pt: need at least 5 samples");
  std::vector<T> d(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t start = std::min(i >= 2 ? i - 2 : 0, n - 5);
    const auto w = fornberg_weights(x[i], x.subspan(start, 5), 1);
    T acc{};
    for (std::size_t j = 0; j < 5; ++j) acc += w[1][j] * y[start + j];
    d[i] = acc;
  }
  return d;
}

/// Index k with x[k] <= xq < x[k+1] (clamped to the valid range).
inline std::size_t bracket(std::span<const double> x, double xq) {
  auto it = std::upper_bound(x.begin(), x.end(), xq);
  std::size_t k = static_cast<std::size_t>(std::distance(x.begin(), it));
  if (k == 0) return 0;
  return std::min(k - 1, x.size() - 2);
}

/// Local cubic Lagrange interpolation through the four samples around xq.
template <class T>
T interpolate_cubic(std::span<const double> x, std::span<const T> y, double xq) {
  const std::size_t n = x.size();
  if (n < 4) throw std::invalid_argument("interpolate_cubic: need at least 4 samples");
  if (xq < x.front() || xq > x.back()) throw std::out_of_range("interpolate_cubic: outside sample range");
  const std::size_t k = bracket(x, xq);
  const std::size_t start = std::min(k >= 1 ? k - 1 : 0, n - 4);
  T acc{};
  for (std::size_t j = 0; j < 4; ++j) {
    double l = 1.0;
    for (std::size_t m = 0; m < 4; ++m) {
      if (m != j) l *= (xq - x[start + m]) / (x[start + j] - x[start + m]);
    }
    acc += l * y[start + j];
  }
  return acc;
}

}  // namespace cgpe::numerics
