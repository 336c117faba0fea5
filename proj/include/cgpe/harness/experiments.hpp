#pragma once

// The six experiment kinds behind the command-line tool. Each writes its
// data files into an output directory and returns the list of files written
// plus a one-line summary. Numerical failures propagate as exceptions.

#include "cgpe/bdg/bdg.hpp"
#include "cgpe/continuation/gp_continuation.hpp"
#include "cgpe/core/config.hpp"
#include "cgpe/diagnostics/diagnostics.hpp"
#include "cgpe/splitstep/snapshot.hpp"
#include "cgpe/splitstep/splitstep.hpp"
#include "cgpe/stationary/stationary.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace cgpe::harness {

namespace fs = std::filesystem;

struct RunResult {
  std::vector<std::string> artifacts;  // relative to the output directory
  std::string summary;
};

namespace detail {

inline std::ofstream open_csv(const fs::path& dir, const std::string& name, RunResult& r) {
  std::ofstream out(dir / name);
  if (!out) throw std::runtime_error("cannot write '" + (dir / name).string() + "'");
  out << std::setprecision(17);
  r.artifacts.push_back(name);
  return out;
}

inline stationary::RadialMesh mesh_for(const ExperimentConfig& c, const ModelParams& p) {
  const auto& s = c.stationary;
  return stationary::RadialMesh::refined(p.b, s.mesh_h, p.pump_radius, s.refine_halfwidth, s.refine_factor);
}

inline stationary::SolveSettings solve_settings(const ExperimentConfig& c) {
  stationary::SolveSettings s;
  s.newton.tolerance = c.stationary.tolerance;
  s.newton.max_iterations = c.stationary.max_iterations;
  return s;
}

inline stationary::BvpState guess_for(const ExperimentConfig& c, const ModelParams& p, int winding, int bumps) {
  const auto mesh = mesh_for(c, p);
  if (winding > 0) return stationary::vortex_guess(p, mesh, winding);
  if (bumps > 1) return stationary::multi_bump_guess(p, mesh, bumps);
  return stationary::thomas_fermi_guess(p, mesh);
}

inline stationary::BvpState configured_guess(const ExperimentConfig& c, const ModelParams& p) {
  const auto& s = c.stationary;
  if (s.guess == "vortex" && s.winding == 0) throw ConfigError("stationary.guess = vortex needs winding >= 1");
  return guess_for(c, p, s.winding, s.guess == "multi_bump" ? s.bumps : 1);
}

/// phi = 0 on the configured mesh (the only stationary state without pumping).
inline stationary::RadialProfile zero_profile(const ExperimentConfig& c) {
  const auto mesh = mesh_for(c, c.model);
  auto s = stationary::state_from_amplitude(mesh, std::vector<double>(mesh.points(), 0.0), 0.0, c.stationary.winding);
  return stationary::make_profile(c.model, std::move(s), 0.0, 0);
}

inline stationary::RadialProfile solve_configured(const ExperimentConfig& c, const ModelParams& p) {
  return stationary::solve_stationary(p, configured_guess(c, p), solve_settings(c));
}

inline std::string fmt(double v, int prec = 10) {
  std::ostringstream s;
  s << std::setprecision(prec) << v;
  return s.str();
}

inline void write_modes(std::ofstream& out, const bdg::StabilityReport& rep) {
  out << "m,max_im,leading_re,leading_im,neutral_tol\n";
  for (const auto& m : rep.modes) {
    out << m.mode << ',' << m.max_im << ',' << m.leading.real() << ',' << m.leading.imag() << ',' << m.neutral_tol
        << '\n';
  }
}

}  // namespace detail

inline RunResult run_stationary(const ExperimentConfig& c, const fs::path& dir, std::ostream& log) {
  RunResult r;
  stationary::RadialProfile prof;
  if (c.model.alpha == 0.0) {
    log << "warning: alpha = 0 (no pumping); the stationary state is phi = 0, writing the zero profile\n";
    prof = detail::zero_profile(c);
    prof.mu = std::numeric_limits<double>::quiet_NaN();
  } else {
    prof = detail::solve_configured(c, c.model);
  }
  stationary::write_profile_csv(prof, dir / "profile.csv");
  r.artifacts.push_back("profile.csv");
  const double mu_int = c.model.alpha == 0.0 ? prof.mu : diagnostics::chemical_potential_integral(prof);
  auto out = detail::open_csv(dir, "summary.csv", r);
  out << "mu,mu_integral,residual,newton_iterations,mass,mass_balance,xi_balance,points\n";
  out << prof.mu << ',' << mu_int << ',' << prof.residual_norm << ',' << prof.newton_iterations << ','
      << diagnostics::mass(prof) << ',' << stationary::mass_balance(prof) << ',' << prof.xi_balance() << ','
      << prof.r.size() << '\n';
  r.summary = "mu = " + detail::fmt(prof.mu, 12) + ", residual = " + detail::fmt(prof.residual_norm, 3) +
              ", Newton iterations = " + std::to_string(prof.newton_iterations);
  log << r.summary << '\n';
  return r;
}

inline RunResult run_stability(const ExperimentConfig& c, const fs::path& dir, std::ostream& log) {
  RunResult r;
  if (c.model.alpha == 0.0) throw ConfigError("stability needs alpha > 0 (the zero state has no BdG problem)");
  const auto prof = detail::solve_configured(c, c.model);
  log << "background: m = " << prof.winding << ", mu = " << detail::fmt(prof.mu, 12) << '\n';
  stationary::write_profile_csv(prof, dir / "profile.csv");
  r.artifacts.push_back("profile.csv");
  bdg::ScanSettings s;
  s.n_grid = c.stability.n_grid;
  const auto rep = bdg::scan_modes(prof, c.stability.m_min, c.stability.m_max, s);
  {
    auto out = detail::open_csv(dir, "modes.csv", r);
    detail::write_modes(out, rep);
  }
  std::ostringstream sum;
  sum << "R = " << c.model.pump_radius << ": verdict " << rep.verdict() << " (max Im omega = " << std::setprecision(4)
      << rep.max_im << ", neutral tolerance " << rep.neutral_tol << ", modes " << c.stability.m_min << ".."
      << c.stability.m_max << ")";
  r.summary = sum.str();
  log << r.summary << '\n';
  return r;
}

inline RunResult run_curve(const ExperimentConfig& c, const fs::path& dir, std::ostream& log) {
  RunResult r;
  if (c.stationary.winding != 0) throw ConfigError("curve scans winding-0 backgrounds only");
  std::vector<double> Rs;
  const auto& cc = c.curve;
  const int n = static_cast<int>(std::floor((cc.R_max - cc.R_min) / cc.R_step + 1e-9));
  for (int i = 0; i <= n; ++i) Rs.push_back(cc.R_min + i * cc.R_step);
  bdg::ScanSettings s;
  s.n_grid = c.stability.n_grid;
  const bdg::ProfileSolver solver = [&](const ModelParams& p) { return detail::solve_configured(c, p); };
  std::vector<bdg::CurvePoint> pts;
  {
    auto out = detail::open_csv(dir, "curve.csv", r);
    out << "R,max_im,verdict,error\n";
    for (double R : Rs) {
      const auto pt = bdg::curve_point(c.model, R, c.stability.m_max, s, solver);
      out << pt.R << ',' << pt.max_im << ',' << (pt.ok ? (pt.stable ? "stable" : "unstable") : "failed") << ",\""
          << pt.error << "\"\n";
      out.flush();
      log << "R = " << R << ": " << (pt.ok ? (pt.stable ? "stable" : "unstable") : "failed: " + pt.error)
          << " (max Im omega = " << pt.max_im << ")\n";
      pts.push_back(pt);
    }
  }
  std::ostringstream sum;
  const auto failed = std::count_if(pts.begin(), pts.end(), [](const auto& p) { return !p.ok; });
  sum << pts.size() << " R values, " << failed << " failed";
  if (cc.threshold) {
    std::optional<bdg::Threshold> th;
    for (std::size_t i = 0; i + 1 < pts.size() && !th; ++i) {
      if (pts[i].ok && pts[i + 1].ok && pts[i].stable && !pts[i + 1].stable) {
        th = bdg::locate_threshold(c.model, pts[i].R, pts[i + 1].R, cc.threshold_width, c.stability.m_max, s, solver);
      }
    }
    auto out = detail::open_csv(dir, "threshold.csv", r);
    out << "found,lo,hi,estimate\n";
    if (th) {
      out << "1," << th->lo << ',' << th->hi << ',' << th->estimate() << '\n';
      sum << "; stable -> unstable threshold R in [" << th->lo << ", " << th->hi << "]";
    } else {
      out << "0,,,\n";
      sum << "; no stable -> unstable transition in the scanned range";
    }
  }
  r.summary = sum.str();
  log << r.summary << '\n';
  return r;
}

inline RunResult run_continue(const ExperimentConfig& c, const fs::path& dir, std::ostream& log) {
  RunResult r;
  const auto& cc = c.cont;
  const auto which = continuation::parse_parameter(cc.parameter);
  continuation::Settings s;
  s.lambda_min = cc.lambda_min;
  s.lambda_max = cc.lambda_max;
  s.nu_initial = cc.nu_initial;
  s.nu_min = cc.nu_min;
  s.nu_max = cc.nu_max;
  s.max_points = cc.max_points;
  s.both_directions = cc.both_directions;
  s.tolerance = c.stationary.tolerance;

  // start inside the range
  stationary::GpSystem sys(c.model, c.stationary.winding);
  const double lambda0 = std::clamp(sys.parameter(which), cc.lambda_min, cc.lambda_max);
  sys.set_parameter(which, lambda0);
  const ModelParams start = sys.params();
  start.validate();

  auto out = detail::open_csv(dir, "branches.csv", r);
  out << "seed,index,lambda,mu,residual,nu,fold\n";
  auto folds = detail::open_csv(dir, "folds.csv", r);
  folds << "seed,lambda,mu,index\n";
  int traced = 0;
  std::ostringstream sum;
  for (int bumps : cc.bumps) {
    try {
      const auto prof = stationary::solve_stationary(start, detail::guess_for(c, start, c.stationary.winding, bumps),
                                                     detail::solve_settings(c));
      const auto br = continuation::trace_branch(prof, which, s);
      for (std::size_t i = 0; i < br.points.size(); ++i) {
        const auto& p = br.points[i];
        out << bumps << ',' << i << ',' << p.lambda << ',' << p.mu << ',' << p.residual_norm << ',' << p.nu << ','
            << (p.fold ? 1 : 0) << '\n';
      }
      for (const auto& f : br.folds) folds << bumps << ',' << f.lambda << ',' << f.mu << ',' << f.index << '\n';
      log << "seed " << bumps << ": mu(start) = " << prof.mu << ", " << br.points.size() << " points, "
          << br.folds.size() << " folds, ends: " << continuation::to_string(br.backward_end) << " / "
          << continuation::to_string(br.forward_end) << '\n';
      sum << (traced ? "; " : "") << "seed " << bumps << ": " << br.points.size() << " points";
      ++traced;
    } catch (const std::runtime_error& e) {
      log << "seed " << bumps << ": failed: " << e.what() << '\n';
    }
  }
  if (traced == 0) throw continuation::ContinuationError("no branch could be started");
  r.summary = cc.parameter + " in [" + detail::fmt(cc.lambda_min) + ", " + detail::fmt(cc.lambda_max) + "]: " + sum.str();
  log << r.summary << '\n';
  return r;
}

inline splitstep::Field2D initial_field(const ExperimentConfig& c) {
  const auto& e = c.evolve;
  splitstep::Field2D f;
  if (e.initial == "oscillator") {
    f = splitstep::oscillator_ground_state(e.grid);
  } else {
    const int winding = e.initial == "vortex" ? e.winding : 0;
    const auto prof =
        stationary::solve_stationary(c.model, detail::guess_for(c, c.model, winding, 1), detail::solve_settings(c));
    f = diagnostics::embed_profile(prof, e.grid);
  }
  if (e.noise > 0.0) splitstep::add_noise(f, e.noise, c.seed);
  return f;
}

inline RunResult run_evolve(const ExperimentConfig& c, const fs::path& dir, std::ostream& log) {
  RunResult r;
  const auto& e = c.evolve;
  splitstep::StepPlan plan(e.grid, c.model, e.tau);
  const auto f0 = initial_field(c);
  splitstep::EvolveSettings s;
  s.T_final = e.T;
  s.series_every = e.series_every;
  if (e.snapshot_interval > 0.0) s.snapshot_every = splitstep::step_count(e.snapshot_interval, e.tau);
  fs::create_directories(dir / "snapshots");
  long index = 0;
  std::ofstream census = detail::open_csv(dir, "census.csv", r);
  census << "snapshot,t,x,y,winding\n";
  s.on_snapshot = [&](const splitstep::Field2D& f) {
    std::ostringstream name;
    name << "snapshots/snap_" << std::setw(6) << std::setfill('0') << index++ << ".cgpe";
    splitstep::write_snapshot(f, dir / name.str());
    r.artifacts.push_back(name.str());
    diagnostics::CensusSettings cs;
    cs.density_floor = c.census.density_floor;
    cs.neighborhood = c.census.neighborhood;
    for (const auto& v : diagnostics::vortex_census(f, cs).vortices) {
      census << name.str() << ',' << f.t << ',' << v.x << ',' << v.y << ',' << v.winding << '\n';
    }
  };
  log << "grid " << e.grid.nx << "x" << e.grid.ny << ", tau = " << e.tau << ", T = " << e.T << ", initial "
      << e.initial << '\n';
  splitstep::EvolveResult res;
  try {
    res = splitstep::evolve(f0, plan, s);
  } catch (const splitstep::EvolutionError& err) {
    splitstep::write_snapshot(err.last_good(), dir / "last_good.cgpe");
    r.artifacts.push_back("last_good.cgpe");
    throw;
  }
  {
    auto out = detail::open_csv(dir, "series.csv", r);
    out << "t,mass,mu_estimate,max_density\n";
    for (const auto& row : res.series) out << row.t << ',' << row.mass << ',' << row.mu_estimate << ',' << row.max_density << '\n';
  }
  {
    const auto ra = diagnostics::radial_extract(res.final);
    auto out = detail::open_csv(dir, "radial.csv", r);
    out << "r,mean_abs,variance,count\n";
    for (std::size_t i = 0; i < ra.r.size(); ++i) {
      out << ra.r[i] << ',' << ra.mean_abs[i] << ',' << ra.variance[i] << ',' << ra.count[i] << '\n';
    }
  }
  std::ostringstream sum;
  sum << res.steps << " steps, " << res.snapshots << " snapshots, norm-bound violations " << res.bound_violations
      << ", final mass " << std::setprecision(8) << diagnostics::mass(res.final);
  r.summary = sum.str();
  log << r.summary << '\n';
  if (res.bound_violations > 0) throw std::runtime_error("per-step norm bound violated " + std::to_string(res.bound_violations) + " times");
  return r;
}

inline RunResult run_census(const ExperimentConfig& c, const fs::path& dir, std::ostream& log) {
  RunResult r;
  std::vector<fs::path> files;
  if (fs::is_directory(c.census.input)) {
    for (const auto& entry : fs::directory_iterator(c.census.input)) {
      if (entry.path().extension() == ".cgpe") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
  } else {
    files.push_back(c.census.input);
  }
  if (files.empty()) throw ConfigError("no .cgpe snapshots in '" + c.census.input.string() + "'");
  diagnostics::CensusSettings cs;
  cs.density_floor = c.census.density_floor;
  cs.neighborhood = c.census.neighborhood;
  auto vort = detail::open_csv(dir, "census.csv", r);
  vort << "snapshot,t,x,y,winding\n";
  auto per = detail::open_csv(dir, "census_summary.csv", r);
  per << "snapshot,t,count,total_winding,max_abs_winding,quantization_error\n";
  std::size_t last_count = 0;
  for (const auto& path : files) {
    const auto f = splitstep::read_snapshot(path);
    const auto cen = diagnostics::vortex_census(f, cs);
    int max_abs = 0;
    for (const auto& v : cen.vortices) {
      vort << path.filename().string() << ',' << f.t << ',' << v.x << ',' << v.y << ',' << v.winding << '\n';
      max_abs = std::max(max_abs, std::abs(v.winding));
    }
    double qerr = 0.0;
    for (double s : cen.plaquette_sums) {
      const double k = std::round(s / (2.0 * std::numbers::pi));
      qerr = std::max(qerr, std::abs(s - 2.0 * std::numbers::pi * k));
    }
    per << path.filename().string() << ',' << f.t << ',' << cen.vortices.size() << ',' << cen.total_winding() << ','
        << max_abs << ',' << qerr << '\n';
    last_count = cen.vortices.size();
  }
  r.summary = std::to_string(files.size()) + " snapshots, " + std::to_string(last_count) + " vortices in the last";
  log << r.summary << '\n';
  return r;
}

inline RunResult run_experiment(const ExperimentConfig& c, const fs::path& dir, std::ostream& log) {
  fs::create_directories(dir);
  if (c.kind == "stationary") return run_stationary(c, dir, log);
  if (c.kind == "stability") return run_stability(c, dir, log);
  if (c.kind == "curve") return run_curve(c, dir, log);
  if (c.kind == "continue") return run_continue(c, dir, log);
  if (c.kind == "evolve") return run_evolve(c, dir, log);
  if (c.kind == "census") return run_census(c, dir, log);
  throw ConfigError("unknown experiment kind '" + c.kind + "'");
}

}  // namespace cgpe::harness
