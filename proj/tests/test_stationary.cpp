#include "cgpe/collocation/collocation.hpp"
#include "cgpe/diagnostics/diagnostics.hpp"
#include "cgpe/stationary/gp_system.hpp"
#include "cgpe/stationary/stationary.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <filesystem>
#include <numbers>
#include <random>
#include <vector>

using namespace cgpe;
using namespace cgpe::stationary;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// u' = u on [0, 1], u(0) = 1
struct Growth {
  int dimension() const { return 1; }
  void rhs(double, collocation::ConstVecRef u, collocation::VecRef f) const { f[0] = u[0]; }
  void jacobian(double, collocation::ConstVecRef, collocation::MatRef J) const { J(0, 0) = 1.0; }
  void boundary(collocation::ConstVecRef ua, collocation::ConstVecRef, collocation::VecRef g,
                collocation::MatRef ga, collocation::MatRef gb) const {
    g[0] = ua[0] - 1.0;
    ga.setZero();
    gb.setZero();
    ga(0, 0) = 1.0;
  }
};

// y'' = -y - y^3 + s(t) with y = sin(pi t) exp(t): a smooth nonlinear two-point problem
struct Manufactured {
  static double exact(double t) { return std::sin(std::numbers::pi * t) * std::exp(t); }
  static double exact_dd(double t) {
    const double pi = std::numbers::pi;
    return std::exp(t) * ((1.0 - pi * pi) * std::sin(pi * t) + 2.0 * pi * std::cos(pi * t));
  }
  int dimension() const { return 2; }
  void rhs(double t, collocation::ConstVecRef u, collocation::VecRef f) const {
    const double y = exact(t);
    f[0] = u[1];
    f[1] = -u[0] - u[0] * u[0] * u[0] + exact_dd(t) + y + y * y * y;
  }
  void jacobian(double, collocation::ConstVecRef u, collocation::MatRef J) const {
    J.setZero();
    J(0, 1) = 1.0;
    J(1, 0) = -1.0 - 3.0 * u[0] * u[0];
  }
  void boundary(collocation::ConstVecRef ua, collocation::ConstVecRef ub, collocation::VecRef g,
                collocation::MatRef ga, collocation::MatRef gb) const {
    g[0] = ua[0];
    g[1] = ub[0];
    ga.setZero();
    gb.setZero();
    ga(0, 0) = 1.0;
    gb(1, 0) = 1.0;
  }
};

const RadialProfile& ground_state() {
  static const RadialProfile p = [] {
    ModelParams m;
    return solve_stationary(m, thomas_fermi_guess(m, default_mesh(m)));
  }();
  return p;
}

Eigen::VectorXd random_state(std::mt19937_64& gen, double r) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  Eigen::VectorXd s(kDim);
  for (int c = 0; c < kDim; ++c) s[c] = u(gen);
  s[kMu] = 10.0 + u(gen);
  s[kRadius] = r;
  return s;
}

}  // namespace

TEST_CASE("origin limit of the radial equation", "[gp]") {
  ModelParams p;
  ModelParams q = p.with_alpha(0.0).with_sigma(0.0);
  q.trap = Potential::harmonic();
  CHECK(rhs_at_origin(0.0, 0.0, 3.0, p) == std::complex<double>(0.0, 0.0));
  // phi(0) = 1, mu = 1, no pump or decay: 1/2 (-1 + 1) = 0
  CHECK(std::abs(rhs_at_origin(1.0, 0.0, 1.0, q)) < 1e-15);
  // phi(0) = 2, mu = 0: real part 1/2 (0 + 4) 2 = 4, imaginary 1/2 (4.4 - 1.2) 2 = 3.2
  const auto v = rhs_at_origin(2.0, 0.0, 0.0, p);
  CHECK_THAT(v.real(), WithinAbs(4.0, 1e-12));
  CHECK_THAT(v.imag(), WithinAbs(3.2, 1e-12));
  CHECK_THROWS(rhs_at_origin(2.0, 0.1, 0.0, p));

  // the full right-hand side at r = 1e-8 approaches the guarded value
  GpSystem sys(p, 0);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(kDim), f0(kDim), f1(kDim);
  u[kTheta] = 2.0;
  u[kMu] = 0.0;
  sys.rhs(0.0, u, f0);
  CHECK_THAT(f0[kPhi] / p.b, WithinAbs(4.0, 1e-12));
  CHECK_THAT(f0[kZeta] / p.b, WithinAbs(3.2, 1e-12));
  u[kRadius] = 1e-8;
  u[kPhi] = 4.0 * 1e-8;   // phi_r ~ g_rr(0) r
  u[kZeta] = 3.2 * 1e-8;
  sys.rhs(0.0, u, f1);
  CHECK_THAT(f1[kPhi] / p.b, WithinAbs(4.0, 1e-6));
  CHECK_THAT(f1[kZeta] / p.b, WithinAbs(3.2, 1e-6));
}

TEST_CASE("analytic Jacobian matches finite differences", "[gp]") {
  std::mt19937_64 gen(11);
  for (int m : {0, 1, 3}) {
    ModelParams p;
    GpSystem sys(p, m);
    for (double r : {0.0, 0.3, 1.9, 2.05, 7.0}) {
      const Eigen::VectorXd u = random_state(gen, r);
      Eigen::MatrixXd J(kDim, kDim);
      sys.jacobian(0.0, u, J);
      for (int c = 0; c < kDim; ++c) {
        if (r == 0.0 && c == kRadius) continue;  // the guard switches branches at r = 0
        const double h = 1e-6 * std::max(1.0, std::abs(u[c]));
        Eigen::VectorXd up = u, um = u, fp(kDim), fm(kDim);
        up[c] += h;
        um[c] -= h;
        sys.rhs(0.0, up, fp);
        sys.rhs(0.0, um, fm);
        const Eigen::VectorXd fd = (fp - fm) / (2 * h);
        const double scale = std::max(1.0, J.col(c).cwiseAbs().maxCoeff());
        CHECK((fd - J.col(c)).cwiseAbs().maxCoeff() < 1e-6 * scale);
      }
      for (auto which : {Parameter::alpha, Parameter::sigma, Parameter::pump_radius}) {
        Eigen::VectorXd df(kDim), fp(kDim), fm(kDim);
        sys.parameter_derivative(which, 0.0, u, df);
        const double v = sys.parameter(which), h = 1e-6;
        GpSystem a = sys, b = sys;
        a.set_parameter(which, v + h);
        b.set_parameter(which, v - h);
        a.rhs(0.0, u, fp);
        b.rhs(0.0, u, fm);
        const Eigen::VectorXd fd = (fp - fm) / (2 * h);
        CHECK((fd - df).cwiseAbs().maxCoeff() < 1e-6 * std::max(1.0, df.cwiseAbs().maxCoeff()));
      }
    }
  }
}

TEST_CASE("assembled Jacobian matches directional differences", "[collocation]") {
  ModelParams p;
  const auto mesh = RadialMesh::uniform(p.b, 40);
  std::mt19937_64 gen(5);
  std::normal_distribution<double> n(0.0, 1.0);
  auto s = thomas_fermi_guess(p, mesh);
  for (Eigen::Index i = 0; i < s.u.size(); ++i) {
    if (i % kDim != kRadius) s.u[i] += 0.1 * n(gen);
  }
  GpSystem sys(p, 0);
  collocation::Assembler<GpSystem> as(sys, mesh.unit());
  Eigen::VectorXd F, Fp, Fm;
  Eigen::SparseMatrix<double> J;
  as.assemble(s.u, F, J);
  for (int trial = 0; trial < 3; ++trial) {
    Eigen::VectorXd d(s.u.size());
    // the radius component stays fixed: perturbing it near 0 hits the 1/r terms
    for (Eigen::Index i = 0; i < d.size(); ++i) d[i] = i % kDim == kRadius ? 0.0 : n(gen);
    const double h = 1e-6;
    as.residual(s.u + h * d, Fp);
    as.residual(s.u - h * d, Fm);
    const Eigen::VectorXd fd = (Fp - Fm) / (2 * h);
    const Eigen::VectorXd an = J * d;
    CHECK((fd - an).cwiseAbs().maxCoeff() < 1e-6 * an.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("linear test problem u' = u", "[collocation]") {
  const auto mesh = collocation::Mesh::uniform(100, 4);
  Growth g;
  collocation::Assembler<Growth> as(g, mesh);
  const auto t = mesh.point_locations();
  Eigen::VectorXd u(t.size()), F;
  for (std::size_t i = 0; i < t.size(); ++i) u[i] = std::exp(t[i]);
  as.residual(u, F);
  // exp is not a piecewise cubic, so only the O(h^5) local defect remains
  CHECK(F.lpNorm<Eigen::Infinity>() < 1e-10);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(u.size());
  const auto rep = collocation::newton_solve(as, v);
  CHECK(rep.iterations == 1);
  CHECK((v - u).lpNorm<Eigen::Infinity>() < 1e-11);
}

TEST_CASE("convergence order on a manufactured problem", "[collocation]") {
  // four Lobatto points per interval: the error over all collocation points
  // decays as h^5 (stage order s + 1; the mesh nodes alone superconverge at h^6)
  Manufactured m;
  std::vector<double> err;
  for (int N : {4, 8, 16, 32}) {
    const auto mesh = collocation::Mesh::uniform(N, 4);
    collocation::Assembler<Manufactured> as(m, mesh);
    Eigen::VectorXd u = Eigen::VectorXd::Zero(2 * mesh.points());
    collocation::newton_solve(as, u, {.tolerance = 1e-13});
    const auto t = mesh.point_locations();
    double e = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) e = std::max(e, std::abs(u[2 * i] - Manufactured::exact(t[i])));
    err.push_back(e);
  }
  for (std::size_t i = 1; i < err.size(); ++i) {
    const double order = std::log2(err[i - 1] / err[i]);
    INFO("refinement " << i << " error " << err[i] << " order " << order);
    CHECK(order > 4.5);
    CHECK(order < 6.5);
  }
}

TEST_CASE("Thomas-Fermi guess", "[guess]") {
  ModelParams p;
  const auto mesh = default_mesh(p);
  const auto s = thomas_fermi_guess(p, mesh);
  CHECK_THAT(s.mu(), WithinRel(22.0, 1e-15));
  CHECK_THAT(s.at(0, kTheta), WithinRel(std::sqrt(22.0), 1e-15));
  const auto r = mesh.radii();
  for (int i = 0; i < mesh.points(); ++i) {
    CHECK(s.at(i, kTheta) >= 0.0);
    CHECK(s.at(i, kXi) == 0.0);
    if (r[i] >= std::sqrt(22.0)) CHECK(s.at(i, kTheta) == 0.0);
  }
  CHECK_THROWS_AS(thomas_fermi_guess(p.with_sigma(0.0), mesh), ModelError);
  const auto small = thomas_fermi_guess(p.with_alpha(1e-12), mesh);
  CHECK(small.at(0, kTheta) < 1e-5);
}

TEST_CASE("multi-bump guesses", "[guess]") {
  ModelParams p;
  const auto mesh = default_mesh(p);
  CHECK(multi_bump_guess(p, mesh, 1).u == thomas_fermi_guess(p, mesh).u);
  CHECK_THROWS(multi_bump_guess(p, mesh, 0));
  for (int n : {2, 3, 4}) {
    const auto s = multi_bump_guess(p, mesh, n);
    int maxima = s.at(0, kTheta) > s.at(1, kTheta) ? 1 : 0;  // bump at the origin
    for (int i = 1; i + 1 < mesh.points(); ++i) {
      const double a = s.at(i - 1, kTheta), b = s.at(i, kTheta), c = s.at(i + 1, kTheta);
      if (b > a && b > c) ++maxima;
    }
    CHECK(maxima == n);
  }
}

TEST_CASE("ground state at R = 2", "[solve]") {
  const auto& g = ground_state();
  CHECK(g.residual_norm < 1e-9);
  CHECK(std::abs(mass_balance(g)) < 1e-8);
  CHECK(std::abs(g.xi_balance()) < 1e-8);
  CHECK(std::abs(g.phi[0].imag()) < 1e-14);
  CHECK_THAT(diagnostics::chemical_potential_integral(g), WithinRel(g.mu, 1e-6));
  CHECK(g.mu > 0.0);
  CHECK(g.mu < 22.0);
  for (int i = 1; i < g.state.mesh.points(); ++i) {
    CHECK_THAT(g.state.at(i, kMu), WithinAbs(g.mu, 1e-12));
  }
}

TEST_CASE("gauge: a rotated guess returns the same modulus", "[solve]") {
  const auto& g = ground_state();
  auto guess = g.state;
  const std::complex<double> rot = std::polar(1.0, 0.3);
  for (int i = 0; i < guess.mesh.points(); ++i) {
    const std::complex<double> v(guess.at(i, kTheta), guess.at(i, kEta));
    const std::complex<double> dv(guess.at(i, kPhi), guess.at(i, kZeta));
    guess.at(i, kTheta) = (rot * v).real();
    guess.at(i, kEta) = (rot * v).imag();
    guess.at(i, kPhi) = (rot * dv).real();
    guess.at(i, kZeta) = (rot * dv).imag();
  }
  const auto s = solve_stationary(g.params, guess);
  double diff = 0.0;
  for (std::size_t i = 0; i < s.phi.size(); ++i) diff = std::max(diff, std::abs(std::abs(s.phi[i]) - std::abs(g.phi[i])));
  CHECK(diff < 1e-8);
  CHECK(std::abs(s.phi[0].imag()) < 1e-14);
}

TEST_CASE("zero pump gives the zero state without Newton steps", "[solve]") {
  ModelParams p = ModelParams{}.with_alpha(0.0);
  const auto mesh = RadialMesh::uniform(p.b, 100);
  const auto zero = state_from_amplitude(mesh, std::vector<double>(mesh.points(), 0.0), 0.0, 0);
  CHECK(collocation_residual(p, zero) < 1e-12);
  const auto s = solve_stationary(p, zero);
  CHECK(s.newton_iterations == 0);
  for (const auto& v : s.phi) CHECK(v == std::complex<double>(0.0, 0.0));
}

TEST_CASE("central vortices at R = 5", "[solve][vortex]") {
  ModelParams p = ModelParams{}.with_pump_radius(5.0);
  const auto mesh = default_mesh(p);
  double prev_peak = INFINITY;
  for (int m = 1; m <= 5; ++m) {
    const auto v = solve_stationary(p, vortex_guess(p, mesh, m));
    INFO("winding " << m);
    CHECK(v.winding == m);
    CHECK(v.residual_norm < 1e-9);
    CHECK(std::abs(v.phi[0]) < 1e-12);
    CHECK(std::abs(mass_balance(v)) < 1e-8);
    CHECK_THAT(diagnostics::chemical_potential_integral(v), WithinRel(v.mu, 1e-6));
    double peak = 0.0;
    for (const auto& x : v.phi) peak = std::max(peak, std::norm(x));
    CHECK(peak < prev_peak);
    prev_peak = peak;
  }
}

TEST_CASE("large-R profiles saturate", "[solve]") {
  // Beyond the condensate edge only the exponentially small tail feels the
  // pump boundary, so successive profiles converge geometrically in R.
  auto solve = [](double R) {
    const auto p = ModelParams{}.with_pump_radius(R);
    return solve_stationary(p, thomas_fermi_guess(p, default_mesh(p)));
  };
  const auto p7 = solve(7.0), p8 = solve(8.0), p9 = solve(9.0), p10 = solve(10.0);
  auto sup = [](const RadialProfile& a, const RadialProfile& b) {
    double d = 0.0;
    for (double r = 0.0; r <= a.params.b; r += 0.005) d = std::max(d, std::abs(a(r) - b(r)));
    return d;
  };
  const double d78 = sup(p7, p8), d89 = sup(p8, p9), d910 = sup(p9, p10);
  INFO("sup differences 7-8 " << d78 << ", 8-9 " << d89 << ", 9-10 " << d910);
  CHECK(d89 < 1e-2 * d78);
  CHECK(d910 < 1e-2 * d89);
  CHECK(d910 < 1e-6);
  CHECK_THAT(p9.mu, WithinRel(p10.mu, 1e-9));
}

TEST_CASE("profile CSV round trip", "[io]") {
  const auto& g = ground_state();
  const auto path = std::filesystem::temp_directory_path() / "cgpe_profile.csv";
  write_profile_csv(g, path);
  const auto back = read_profile_csv(path);
  std::filesystem::remove(path);
  CHECK(back.mu == g.mu);
  CHECK(back.winding == 0);
  CHECK(back.params.pump_radius == g.params.pump_radius);
  REQUIRE(back.r.size() == g.r.size());
  for (std::size_t i = 0; i < g.r.size(); ++i) {
    CHECK(back.r[i] == g.r[i]);
    CHECK(back.phi[i] == g.phi[i]);
  }
}

TEST_CASE("solver errors", "[solve]") {
  ModelParams p;
  const auto mesh = RadialMesh::uniform(p.b, 50);
  collocation::NewtonSettings ns;
  ns.max_iterations = 1;
  CHECK_THROWS_AS(solve_stationary(p, thomas_fermi_guess(p, mesh), {ns}), NonConvergence);
  CHECK_THROWS(solve_stationary(p.with_pump_radius(3.0), thomas_fermi_guess(p, RadialMesh::uniform(10.0, 50))));
}
