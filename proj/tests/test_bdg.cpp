#include "cgpe/bdg/bdg.hpp"
#include "cgpe/stationary/stationary.hpp"

#include <catch_amalgamated.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>
#include <vector>

using namespace cgpe;
using namespace cgpe::bdg;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Zero background without pump: H = diag(L1(k), -L1(k)*) with L1 the 2D
// oscillator, whose spectrum in angular momentum k is 2(2j + |k| + 1).
stationary::RadialProfile empty_profile(double mu) {
  stationary::RadialProfile prof;
  prof.params = ModelParams{}.with_alpha(0.0);
  for (int i = 0; i <= 3000; ++i) {
    prof.r.push_back(prof.params.b * i / 3000.0);
    prof.phi.emplace_back(0.0, 0.0);
  }
  prof.mu = mu;
  return prof;
}

const stationary::RadialProfile& ground_state_r2() {
  static const auto prof = solve_from_thomas_fermi(ModelParams{});
  return prof;
}

// Every eigenvalue of `a` has a partner in `b` within tol.
bool spectra_match(const std::vector<cdouble>& a, const std::vector<cdouble>& b, double tol) {
  if (a.size() != b.size()) return false;
  for (const auto& x : a) {
    double best = INFINITY;
    for (const auto& y : b) best = std::min(best, std::abs(x - y));
    if (best > tol) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("oscillator spectrum without condensate", "[bdg]") {
  const double mu = 0.7;
  const auto prof = empty_profile(mu);
  for (int m : {1, 3, 6}) {
    const auto op = assemble_bdg(prof, m, 600);
    auto w = eigen_spectrum(op);
    std::vector<double> pos;
    for (const auto& x : w) {
      CHECK(std::abs(x.imag()) < 1e-8);
      if (x.real() > 0) pos.push_back(x.real());
    }
    std::sort(pos.begin(), pos.end());
    REQUIRE(pos.size() >= 4);
    for (int j = 0; j < 4; ++j) {
      const double exact = 2.0 * (2 * j + m + 1) - mu;
      INFO("m = " << m << ", level " << j);
      CHECK_THAT(pos[j], WithinRel(exact, 1e-3));
    }
    const auto rep = stability_scan(prof, 3, {.n_grid = 200});
    CHECK(rep.stable());
  }
  // second-order finite differences: halving h quarters the level error
  auto lowest = [&](int n_grid) {
    double best = INFINITY;
    for (const auto& x : eigen_spectrum(assemble_bdg(prof, 2, n_grid)))
      if (x.real() > 0) best = std::min(best, x.real());
    return std::abs(best - (6.0 - mu));
  };
  const double ratio = lowest(200) / lowest(400);
  CHECK(ratio > 3.5);
  CHECK(ratio < 4.5);
}

TEST_CASE("zgeev wrapper agrees with Eigen's complex solver", "[bdg]") {
  std::mt19937_64 gen(11);
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXcd a(50, 50);
  for (int i = 0; i < 50; ++i)
    for (int j = 0; j < 50; ++j) a(i, j) = cdouble(n(gen), n(gen));
  const auto w = eigenvalues(a);
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(a, false);
  std::vector<cdouble> ref(es.eigenvalues().data(), es.eigenvalues().data() + 50);
  CHECK(spectra_match(w, ref, 1e-10));
  for (std::size_t i = 1; i < w.size(); ++i) CHECK(w[i - 1].imag() >= w[i].imag());

  a(3, 4) = cdouble(NAN, 0.0);
  CHECK_THROWS_AS(eigenvalues(a), EigensolverError);
}

TEST_CASE("real form reproduces the complex spectrum", "[bdg]") {
  const auto& prof = ground_state_r2();
  for (int m : {1, 4}) {
    const auto op = assemble_bdg(prof, m, 150);
    const auto fast = eigen_spectrum(op);
    const auto full = eigenvalues(op.dense());
    INFO("mode " << m);
    CHECK(spectra_match(fast, full, 1e-9 * op.norm_inf()));
    CHECK(std::abs(fast.front().imag() - full.front().imag()) < 1e-9 * op.norm_inf());
  }
}

TEST_CASE("spectrum is symmetric under omega -> -conj(omega)", "[bdg]") {
  const auto& prof = ground_state_r2();
  const auto op = assemble_bdg(prof, 2, 200);
  const auto w = eigen_spectrum(op);
  std::vector<cdouble> mirrored;
  for (const auto& x : w) mirrored.push_back(-std::conj(x));
  CHECK(spectra_match(w, mirrored, 1e-8 * op.norm_inf()));
}

TEST_CASE("operator blocks match the definition", "[bdg]") {
  const auto& prof = ground_state_r2();
  const auto op = assemble_bdg(prof, 3, 120);
  const auto H = op.dense();
  const int n = op.grid.n;
  std::mt19937_64 gen(2);
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::VectorXcd x(n);
  for (int j = 0; j < n; ++j) x[j] = cdouble(g(gen), g(gen));
  CHECK((op.apply_l1(3, x) - H.topLeftCorner(n, n) * x).norm() < 1e-10 * x.norm() * op.norm_inf());
  for (int j = 0; j < n; ++j) {
    const cdouble f = prof(op.grid.r[j]);
    CHECK(std::abs(H(j, n + j) - cdouble(1.0, -prof.params.sigma) * f * f) < 1e-14);
  }
  CHECK(op.lower[0] == 0.0);
  CHECK(H.cwiseAbs().rowwise().sum().maxCoeff() <= op.norm_inf() * (1 + 1e-12));
  CHECK_THROWS_AS(assemble_bdg(prof, 0, 600), std::invalid_argument);
  CHECK_THROWS_AS(assemble_bdg(prof, 1, 50), std::invalid_argument);
  CHECK_THROWS_AS(stability_scan(prof, 0), std::invalid_argument);
  CHECK_THROWS_AS(central_vortex_stability(prof, 3), std::invalid_argument);
}

TEST_CASE("small pump spot is stable, wide spot is not", "[bdg]") {
  const auto small = stability_scan(ground_state_r2(), 12, {.n_grid = 300});
  CHECK(small.stable());
  CHECK(small.complete);
  CHECK(small.modes.size() == 12);

  const auto wide = solve_from_thomas_fermi(ModelParams{}.with_pump_radius(7.0));
  const auto rep = stability_scan(wide, 50, {.n_grid = 300, .stop_on_unstable = true});
  CHECK_FALSE(rep.stable());
  CHECK(rep.max_im > 1e3 * rep.neutral_tol);
}

TEST_CASE("vortex backgrounds use the complex path", "[bdg][vortex]") {
  const ModelParams p;
  const auto v = stationary::solve_stationary(p, stationary::vortex_guess(p, stationary::default_mesh(p), 1));
  const auto op = assemble_bdg(v, 2, 150);
  CHECK(op.k_u() == 3);
  CHECK(op.k_v() == -1);
  const auto w = eigen_spectrum(op);
  CHECK(spectra_match(w, eigenvalues(op.dense()), 1e-12 * op.norm_inf()));
  const auto rep = central_vortex_stability(v, 3, {.n_grid = 150, .keep_spectrum = true});
  CHECK(rep.modes.size() == 3);
  CHECK(rep.modes[0].spectrum.size() == 300);
}
