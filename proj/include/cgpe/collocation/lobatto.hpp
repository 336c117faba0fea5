#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace cgpe::collocation {

/// Lobatto IIIA tableau with `points` abscissae 0 = c_1 < ... < c_s = 1.
/// `a(i, j)` integrates the j-th Lagrange basis polynomial over [0, c_i], so the
/// collocation polynomial through the stage values has degree s.
struct LobattoTableau {
  std::vector<double> c;
  Eigen::MatrixXd a;
  std::vector<double> weights;  // quadrature weights on [0, 1] (last row of a)

  int points() const { return static_cast<int>(c.size()); }
};

/// Interior Lobatto nodes are the zeros of P'_{s-1}, i.e. of the Jacobi
/// polynomial P^{(1,1)}_{s-2}; they come from the symmetric Jacobi matrix.
inline LobattoTableau make_lobatto(int points) {
  if (points < 2 || points > 12) throw std::invalid_argument("make_lobatto: points must be in [2, 12]");
  LobattoTableau t;
  const int interior = points - 2;
  std::vector<double> x{-1.0};
  if (interior > 0) {
    Eigen::MatrixXd jm = Eigen::MatrixXd::Zero(interior, interior);
    for (int k = 1; k < interior; ++k) {
      const double n = k;
      const double off = std::sqrt(n * (n + 2.0) / ((2.0 * n + 1.0) * (2.0 * n + 3.0)));
      jm(k - 1, k) = off;
      jm(k, k - 1) = off;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jm);
    for (int k = 0; k < interior; ++k) x.push_back(es.eigenvalues()(k));
  }
  x.push_back(1.0);
  std::sort(x.begin(), x.end());
  for (double xi : x) t.c.push_back(0.5 * (xi + 1.0));
  t.c.front() = 0.0;
  t.c.back() = 1.0;

  // a_ij = int_0^{c_i} L_j, by Gauss-Legendre with s nodes (exact for degree 2s - 1)
  const int s = points;
  Eigen::MatrixXd gm = Eigen::MatrixXd::Zero(s, s);
  for (int k = 1; k < s; ++k) {
    const double off = k / std::sqrt(4.0 * k * k - 1.0);
    gm(k - 1, k) = off;
    gm(k, k - 1) = off;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> gl(gm);
  auto lagrange = [&](int j, double x) {
    double v = 1.0;
    for (int m = 0; m < s; ++m) {
      if (m != j) v *= (x - t.c[m]) / (t.c[j] - t.c[m]);
    }
    return v;
  };
  t.a = Eigen::MatrixXd::Zero(s, s);
  for (int i = 1; i < s; ++i) {
    for (int q = 0; q < s; ++q) {
      const double xq = 0.5 * t.c[i] * (gl.eigenvalues()(q) + 1.0);
      const double wq = t.c[i] * gl.eigenvectors()(0, q) * gl.eigenvectors()(0, q);  // (c_i / 2) * 2 v0^2
      for (int j = 0; j < s; ++j) t.a(i, j) += wq * lagrange(j, xq);
    }
  }
  t.weights.resize(s);
  for (int j = 0; j < s; ++j) t.weights[j] = t.a(s - 1, j);
  return t;
}

}  // namespace cgpe::collocation
