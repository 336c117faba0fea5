#include "cgpe/splitstep/snapshot.hpp"
#include "cgpe/splitstep/splitstep.hpp"

#include <catch_amalgamated.hpp>

#include <boost/numeric/odeint.hpp>

#include <array>
#include <cmath>
#include <complex>
#include <filesystem>
#include <numbers>
#include <random>
#include <vector>

using namespace cgpe;
using namespace cgpe::splitstep;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// psi' = (w - sigma |psi|^2 - i (V + |psi|^2)) psi by adaptive Dormand-Prince.
cdouble ode_oracle(cdouble psi, double w, double V, double sigma, double dt) {
  namespace ode = boost::numeric::odeint;
  std::array<double, 2> y{psi.real(), psi.imag()};
  auto rhs = [&](const std::array<double, 2>& s, std::array<double, 2>& d, double) {
    const cdouble z(s[0], s[1]);
    const double n = std::norm(z);
    const cdouble f = cdouble(w - sigma * n, -(V + n)) * z;
    d = {f.real(), f.imag()};
  };
  ode::integrate_adaptive(ode::make_controlled(1e-14, 1e-14, ode::runge_kutta_dopri5<std::array<double, 2>>()), rhs,
                          y, 0.0, dt, dt / 100);
  return {y[0], y[1]};
}

Grid2D small_grid(int n = 64, double half = 10.0) {
  Grid2D g;
  g.nx = g.ny = n;
  g.ax = g.ay = -half;
  g.bx = g.by = half;
  return g;
}

double max_diff(const Field2D& a, const Field2D& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) m = std::max(m, std::abs(a.values[i] - b.values[i]));
  return m;
}

Field2D run(const Field2D& f0, const ModelParams& p, double tau, double T) {
  StepPlan plan(f0.grid, p, tau);
  EvolveSettings s;
  s.T_final = T;
  s.series_every = 1000000;
  return evolve(f0, plan, s).final;
}

}  // namespace

TEST_CASE("closed-form substep matches an ODE integration", "[substep]") {
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  struct Case {
    double w, sigma;
  };
  for (const Case c : {Case{4.4, 0.3}, Case{0.0, 0.3}, Case{4.4, 0.0}, Case{0.0, 0.0}, Case{1e-9, 0.5}}) {
    for (int trial = 0; trial < 20; ++trial) {
      const cdouble psi(u(gen), u(gen));
      const double V = 3.0 + u(gen);
      const double dt = 0.05 * (1.0 + u(gen));
      const cdouble exact = ode_oracle(psi, c.w, V, c.sigma, dt);
      const cdouble got = nonlinear_point(psi, c.w, V, c.sigma, dt, c.w == 0.0);
      INFO("w = " << c.w << ", sigma = " << c.sigma);
      CHECK(std::abs(got - exact) < 1e-10 * std::max(1.0, std::abs(exact)));
    }
  }
  CHECK(nonlinear_point(0.0, 4.4, 1.0, 0.3, 0.1, false) == cdouble(0.0, 0.0));
}

TEST_CASE("substep is a flow: two halves equal one whole", "[substep]") {
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 100; ++trial) {
    const cdouble psi(u(gen), u(gen));
    const double w = std::abs(u(gen)), V = u(gen), sigma = 0.5 * std::abs(u(gen)), dt = 0.1 * std::abs(u(gen));
    const bool zp = trial % 5 == 0;
    const double ww = zp ? 0.0 : w;
    const cdouble half = nonlinear_point(nonlinear_point(psi, ww, V, sigma, 0.5 * dt, zp), ww, V, sigma, 0.5 * dt, zp);
    CHECK(std::abs(half - nonlinear_point(psi, ww, V, sigma, dt, zp)) < 1e-13 * std::max(1.0, std::abs(psi)));
  }
}

TEST_CASE("vanishing decay recovers the sigma = 0 branch", "[substep]") {
  const cdouble psi(0.8, -0.3);
  for (double w : {0.0, 2.0}) {
    const cdouble lim = nonlinear_point(psi, w, 1.0, 0.0, 0.2, w == 0.0);
    for (double s : {1e-6, 1e-8, 1e-10}) {
      CHECK(std::abs(nonlinear_point(psi, w, 1.0, s, 0.2, w == 0.0) - lim) < 10 * s);
    }
  }
}

TEST_CASE("plane waves evolve exactly", "[splitstep]") {
  // uniform amplitude: the substeps commute and the decay law is known
  const auto g = small_grid(32, 8.0);
  const double kx = 2 * std::numbers::pi * 3 / 16.0, ky = -2 * std::numbers::pi / 16.0, A = 0.9;
  for (double sigma : {0.0, 0.3}) {
    const auto f0 = sample(g, [&](double x, double y) { return A * std::polar(1.0, kx * x + ky * y); });
    StepPlan plan(g, [](double, double) { return 0.0; }, [](double, double) { return 0.0; }, sigma, 0.01);
    EvolveSettings s;
    s.T_final = 0.5;
    const auto res = evolve(f0, plan, s);
    const double T = 0.5, n0 = A * A, k2 = kx * kx + ky * ky;
    const double amp = sigma > 0 ? A / std::sqrt(1 + 2 * sigma * n0 * T) : A;
    const double phase = sigma > 0 ? -std::log1p(2 * sigma * n0 * T) / (2 * sigma) : -n0 * T;
    const auto exact = sample(g, [&](double x, double y) {
      return amp * std::polar(1.0, kx * x + ky * y - k2 * T + phase);
    });
    CHECK(max_diff(res.final, exact) < 1e-13);
    CHECK(res.bound_violations == 0);
  }
}

TEST_CASE("Fourier step is unitary", "[splitstep]") {
  const auto g = small_grid();
  std::mt19937_64 gen(1);
  std::normal_distribution<double> n(0.0, 1.0);
  Field2D f(g);
  for (auto& v : f.values) v = cdouble(n(gen), n(gen));
  StepPlan plan(g, ModelParams{}, 0.01);
  const double before = f.norm2();
  for (int i = 0; i < 10; ++i) plan.fourier_full_step(f);
  CHECK_THAT(f.norm2(), WithinRel(before, 1e-13));
}

TEST_CASE("zero time step is the identity", "[splitstep]") {
  const auto g = small_grid(32);
  auto f = oscillator_ground_state(g, 1e-3, 5);
  const auto f0 = f;
  StepPlan plan(g, ModelParams{}, 0.0);
  plan.strang_step(f);
  CHECK(max_diff(f, f0) < 1e-15);
  CHECK_THROWS_AS(step_count(1.0, 0.0), std::invalid_argument);
}

TEST_CASE("Strang splitting is second order in time", "[splitstep]") {
  const ModelParams p;
  const auto f0 = oscillator_ground_state(small_grid());
  const double T = 0.4;
  const auto ref = run(f0, p, T / 1280, T);
  std::vector<double> err;
  for (double tau : {0.02, 0.01, 0.005}) err.push_back(max_diff(run(f0, p, tau, T), ref));
  for (std::size_t i = 1; i < err.size(); ++i) {
    const double slope = std::log2(err[i - 1] / err[i]);
    INFO("slope " << slope);
    CHECK(slope > 1.8);
    CHECK(slope < 2.2);
  }
}

namespace {

// alpha = sigma = 0 with the cubic term off: e^{-r^2/2} is the oscillator
// ground state, eigenvalue 2
double oscillator_error(double tau, double T) {
  const auto g = small_grid(64, 10.0);
  StepPlan plan(g, [](double, double) { return 0.0; }, [](double x, double y) { return x * x + y * y; }, 0.0, tau,
                -1.0, 0.0);
  const auto f0 = oscillator_ground_state(g);
  EvolveSettings s;
  s.T_final = T;
  s.series_every = 1000000;
  const auto res = evolve(f0, plan, s);
  auto exact = f0;
  for (auto& v : exact.values) v *= std::polar(1.0, -2.0 * T);
  return max_diff(res.final, exact);
}

}  // namespace

TEST_CASE("linear oscillator: exact rotation and second order", "[splitstep]") {
  std::vector<double> err;
  for (double tau : {0.1, 0.05, 0.025, 0.0125}) err.push_back(oscillator_error(tau, 1.0));
  for (std::size_t i = 1; i < err.size(); ++i) {
    const double slope = std::log2(err[i - 1] / err[i]);
    INFO("tau level " << i << ": error " << err[i] << ", slope " << slope);
    CHECK(slope > 1.8);
    CHECK(slope < 2.2);
  }
  CHECK(err.back() < 1e-3);
}

TEST_CASE("one Strang step matches two half steps to third order", "[splitstep]") {
  const ModelParams p;
  const auto f0 = oscillator_ground_state(small_grid());
  auto gap = [&](double tau) {
    StepPlan whole(f0.grid, p, tau), half(f0.grid, p, 0.5 * tau);
    auto a = f0, b = f0;
    whole.strang_step(a);
    half.strang_step(b);
    half.strang_step(b);
    return max_diff(a, b);
  };
  const double ratio = gap(0.01) / gap(0.005);
  INFO("ratio " << ratio);
  CHECK(ratio > 7.0);
  CHECK(ratio < 9.0);
}

TEST_CASE("mass growth respects the pump bound", "[splitstep]") {
  const ModelParams p;
  StepPlan plan(small_grid(), p, 0.005);
  CHECK_THAT(plan.growth_bound(), WithinRel(std::exp(2 * 4.4 * 0.005), 1e-12));
  EvolveSettings s;
  s.T_final = 2.0;
  s.series_every = 40;
  const auto res = evolve(oscillator_ground_state(small_grid(), 1e-4, 3), plan, s);
  CHECK(res.bound_violations == 0);
  CHECK(res.max_growth_ratio <= 1.0);
  CHECK(res.steps == 400);
  CHECK(res.series.size() == 11);
  for (const auto& row : res.series) CHECK(std::isfinite(row.mass));
}

TEST_CASE("T equal to tau takes exactly one step", "[splitstep]") {
  const auto g = small_grid(32);
  const auto f0 = oscillator_ground_state(g);
  StepPlan plan(g, ModelParams{}, 0.01);
  EvolveSettings s;
  s.T_final = 0.01;
  long snaps = 0;
  s.on_snapshot = [&](const Field2D&) { ++snaps; };
  const auto res = evolve(f0, plan, s);
  CHECK(res.steps == 1);
  CHECK(res.snapshots == 2);
  CHECK(snaps == 2);
  CHECK(res.series.size() == 2);
  auto manual = f0;
  plan.strang_step(manual);
  CHECK(max_diff(res.final, manual) == 0.0);
  CHECK_THAT(res.final.t, WithinAbs(0.01, 1e-15));
  s.T_final = 0.015;
  CHECK_THROWS_AS(evolve(f0, plan, s), std::invalid_argument);
  s.T_final = 0.04;
  s.snapshot_every = 3;
  CHECK_THROWS_AS(evolve(f0, plan, s), std::invalid_argument);
}

TEST_CASE("blow-up reports the last good snapshot", "[splitstep]") {
  const auto g = small_grid(32);
  const auto f0 = oscillator_ground_state(g);
  StepPlan plan(g, [](double, double) { return 400.0; }, [](double, double) { return 0.0; }, 0.0, 1.0);
  EvolveSettings s;
  s.T_final = 10.0;
  try {
    evolve(f0, plan, s);
    FAIL("expected an EvolutionError");
  } catch (const EvolutionError& e) {
    CHECK(max_diff(e.last_good(), f0) == 0.0);
  }
  StepPlan other(small_grid(16), ModelParams{}, 0.01);
  auto f = f0;
  CHECK_THROWS_AS(other.strang_step(f), std::invalid_argument);
}

TEST_CASE("snapshots round-trip bit for bit", "[snapshot]") {
  auto g = small_grid(16);
  g.ay = -3.0;
  g.by = 5.0;
  auto f = oscillator_ground_state(g, 0.1, 8);
  f.t = 12.375;
  const auto path = std::filesystem::temp_directory_path() / "cgpe_snap_test.cgpe";
  write_snapshot(f, path);
  const auto back = read_snapshot(path);
  CHECK(back.grid == f.grid);
  CHECK(back.t == f.t);
  CHECK(back.values == f.values);
  std::filesystem::remove(path);

  auto bytes = encode_snapshot(f);
  CHECK(bytes.size() == 56 + 16 * f.values.size());
  auto cut = bytes;
  cut.resize(cut.size() - 8);
  CHECK_THROWS(decode_snapshot(cut));
  bytes[0] = 'X';
  CHECK_THROWS(decode_snapshot(bytes));
}

TEST_CASE("noise is reproducible from the seed", "[splitstep]") {
  const auto g = small_grid(16);
  const auto a = oscillator_ground_state(g, 1e-10, 42);
  const auto b = oscillator_ground_state(g, 1e-10, 42);
  const auto c = oscillator_ground_state(g, 1e-10, 43);
  CHECK(a.values == b.values);
  CHECK(a.values != c.values);
  const auto clean = oscillator_ground_state(g);
  CHECK(max_diff(a, clean) <= std::sqrt(2.0) * 1e-10);
}
