#pragma once

// Experiment configuration: an INI file with the model keys at top level and
// one section per experiment kind. A preset ("desk" or "paper") fills the
// resolution defaults first; explicit keys override it.
//
//   alpha = 4.4
//   R = 2
//   trap = harmonic          ; or file:<path> with two CSV columns r, V
//   [evolve]
//   T = 50

#include "cgpe/core/model.hpp"
#include "cgpe/splitstep/field2d.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace cgpe {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Preset { desk, paper };

inline Preset parse_preset(const std::string& s) {
  if (s == "desk") return Preset::desk;
  if (s == "paper") return Preset::paper;
  throw ConfigError("unknown preset '" + s + "' (use desk or paper)");
}

inline std::string preset_name(Preset p) { return p == Preset::desk ? "desk" : "paper"; }

struct StationaryConfig {
  int winding = 0;
  std::string guess = "thomas_fermi";  // thomas_fermi | vortex | multi_bump
  int bumps = 1;
  double mesh_h = 0.01;          // spacing away from the pump edge
  int refine_factor = 4;         // spacing divisor within refine_halfwidth of R
  double refine_halfwidth = 0.6;
  double tolerance = 1e-10;
  int max_iterations = 50;
};

struct StabilityConfig {
  int m_min = 1;
  int m_max = 50;
  int n_grid = 600;
};

struct CurveConfig {
  double R_min = 1.0;
  double R_max = 9.0;
  double R_step = 1.0;
  bool threshold = true;  // bisect the first stable -> unstable sign change
  double threshold_width = 0.05;
};

struct ContinueConfig {
  std::string parameter = "sigma";
  double lambda_min = 0.1;
  double lambda_max = 1.0;
  double nu_initial = 1e-3;
  double nu_min = 1e-6;
  double nu_max = 1e-2;
  int max_points = 2000;
  bool both_directions = true;
  std::vector<int> bumps{1};  // one branch per multi-bump seed
};

struct EvolveConfig {
  splitstep::Grid2D grid;
  double tau = 0.004;
  double T = 50.0;
  double snapshot_interval = 0.0;  // 0: initial and final only
  long series_every = 10;          // steps between time-series rows
  std::string initial = "oscillator";  // oscillator | stationary | vortex
  int winding = 2;                     // for initial = vortex
  double noise = 0.0;
};

struct CensusConfig {
  std::filesystem::path input;  // snapshot file or directory of snapshots
  double density_floor = -1.0;  // < 0: relative 1e-3 of the maximum density
  int neighborhood = 3;
};

struct ExperimentConfig {
  std::string kind;
  Preset preset = Preset::desk;
  ModelParams model;
  std::string trap = "harmonic";
  std::uint64_t seed = 0;
  StationaryConfig stationary;
  StabilityConfig stability;
  CurveConfig curve;
  ContinueConfig cont;
  EvolveConfig evolve;
  CensusConfig census;
  boost::property_tree::ptree source;  // keys as read, for the manifest
};

inline const std::set<std::string>& experiment_kinds() {
  static const std::set<std::string> k{"stationary", "stability", "curve", "continue", "evolve", "census"};
  return k;
}

inline void apply_preset(ExperimentConfig& c, Preset p) {
  c.preset = p;
  if (p == Preset::desk) {
    c.stationary.mesh_h = 0.01;
    c.stability.n_grid = 600;
    c.cont.nu_initial = 1e-3;
    c.cont.nu_max = 1e-2;
    c.evolve.grid.nx = c.evolve.grid.ny = 256;
    c.evolve.tau = 0.004;
  } else {
    c.stationary.mesh_h = 0.0025;
    c.stability.n_grid = 1200;
    c.cont.nu_initial = 1e-4;
    c.cont.nu_max = 1e-4;
    c.evolve.grid.nx = c.evolve.grid.ny = 1024;
    c.evolve.tau = 0.001;
  }
}

namespace config_detail {

using boost::property_tree::ptree;

template <class T>
T get(const ptree& t, const std::string& key, T fallback) {
  const auto v = t.get_optional<std::string>(key);
  if (!v) return fallback;
  if constexpr (std::is_same_v<T, std::string>) {
    return *v;
  } else if constexpr (std::is_same_v<T, bool>) {
    if (*v == "true" || *v == "1" || *v == "yes") return true;
    if (*v == "false" || *v == "0" || *v == "no") return false;
    throw ConfigError("key '" + key + "': expected a boolean, got '" + *v + "'");
  } else {
    std::istringstream ss(*v);
    T out{};
    ss >> out;
    if (ss.fail() || !(ss >> std::ws).eof()) throw ConfigError("key '" + key + "': cannot parse '" + *v + "'");
    return out;
  }
}

inline std::vector<int> get_int_list(const ptree& t, const std::string& key, std::vector<int> fallback) {
  const auto v = t.get_optional<std::string>(key);
  if (!v) return fallback;
  std::vector<int> out;
  std::string item;
  std::istringstream ss(*v);
  while (std::getline(ss, item, ',')) {
    std::istringstream is(item);
    int x = 0;
    if (!(is >> x) || !(is >> std::ws).eof()) throw ConfigError("key '" + key + "': bad integer list '" + *v + "'");
    out.push_back(x);
  }
  if (out.empty()) throw ConfigError("key '" + key + "': empty list");
  return out;
}

inline void check_keys(const ptree& t, const std::string& where, const std::set<std::string>& allowed) {
  for (const auto& [k, v] : t) {
    if (!v.empty() && where.empty()) continue;  // a section
    if (!allowed.count(k)) {
      throw ConfigError("unknown key '" + (where.empty() ? k : where + "." + k) + "'");
    }
  }
}

}  // namespace config_detail

/// Parses an INI tree. `kind` comes from the subcommand; `preset` from the
/// command line overrides a `preset` key in the file. Relative paths are
/// resolved against `base_dir`.
inline ExperimentConfig parse_config(const boost::property_tree::ptree& t, const std::string& kind,
                                     std::optional<Preset> preset = {},
                                     const std::filesystem::path& base_dir = ".") {
  using namespace config_detail;
  if (!experiment_kinds().count(kind)) throw ConfigError("unknown experiment kind '" + kind + "'");
  check_keys(t, "", {"alpha", "sigma", "R", "kappa", "b", "trap", "seed", "preset", "stationary", "stability",
                     "curve", "continue", "evolve", "census"});
  for (const auto& [k, v] : t) {
    if (!v.empty() && !experiment_kinds().count(k)) throw ConfigError("unknown section [" + k + "]");
  }

  ExperimentConfig c;
  c.kind = kind;
  c.source = t;
  apply_preset(c, preset ? *preset : parse_preset(get<std::string>(t, "preset", "desk")));

  auto& m = c.model;
  m.alpha = get(t, "alpha", m.alpha);
  m.sigma = get(t, "sigma", m.sigma);
  m.pump_radius = get(t, "R", m.pump_radius);
  m.kappa = get(t, "kappa", m.kappa);
  m.b = get(t, "b", m.b);
  c.seed = get<std::uint64_t>(t, "seed", 0);
  c.trap = get<std::string>(t, "trap", "harmonic");
  if (c.trap.rfind("file:", 0) == 0) {
    std::filesystem::path p = c.trap.substr(5);
    if (p.is_relative()) p = base_dir / p;
    if (!std::filesystem::exists(p)) throw ConfigError("trap file '" + p.string() + "' does not exist");
    try {
      m.trap = Potential::from_csv(p);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("trap file: ") + e.what());
    }
  } else if (c.trap != "harmonic") {
    throw ConfigError("trap must be 'harmonic' or 'file:<path>', got '" + c.trap + "'");
  }
  try {
    m.validate();
  } catch (const ModelError& e) {
    throw ConfigError(e.what());
  }

  static const ptree empty;
  auto section = [&](const std::string& name) -> const ptree& {
    const auto s = t.get_child_optional(name);
    return s ? *s : empty;
  };

  {
    const auto& s = section("stationary");
    check_keys(s, "stationary",
               {"winding", "guess", "bumps", "mesh_h", "refine_factor", "refine_halfwidth", "tolerance",
                "max_iterations"});
    auto& x = c.stationary;
    x.winding = get(s, "winding", x.winding);
    x.guess = get(s, "guess", x.guess);
    x.bumps = get(s, "bumps", x.bumps);
    x.mesh_h = get(s, "mesh_h", x.mesh_h);
    x.refine_factor = get(s, "refine_factor", x.refine_factor);
    x.refine_halfwidth = get(s, "refine_halfwidth", x.refine_halfwidth);
    x.tolerance = get(s, "tolerance", x.tolerance);
    x.max_iterations = get(s, "max_iterations", x.max_iterations);
    if (x.winding < 0) throw ConfigError("stationary.winding must be >= 0");
    if (x.guess != "thomas_fermi" && x.guess != "vortex" && x.guess != "multi_bump") {
      throw ConfigError("stationary.guess must be thomas_fermi, vortex or multi_bump");
    }
    if (x.bumps < 1) throw ConfigError("stationary.bumps must be >= 1");
    if (!(x.mesh_h > 0.0) || x.refine_factor < 1 || !(x.refine_halfwidth >= 0.0)) {
      throw ConfigError("stationary mesh settings must be positive");
    }
    if (!(x.tolerance > 0.0) || x.max_iterations < 1) throw ConfigError("stationary Newton settings must be positive");
  }
  {
    const auto& s = section("stability");
    check_keys(s, "stability", {"m_min", "m_max", "n_grid"});
    auto& x = c.stability;
    x.m_min = get(s, "m_min", x.m_min);
    x.m_max = get(s, "m_max", x.m_max);
    x.n_grid = get(s, "n_grid", x.n_grid);
    if (x.m_min < 1 || x.m_max < x.m_min) {
      throw ConfigError("empty mode range m = " + std::to_string(x.m_min) + ".." + std::to_string(x.m_max));
    }
    if (x.n_grid < 100) throw ConfigError("stability.n_grid must be >= 100");
  }
  {
    const auto& s = section("curve");
    check_keys(s, "curve", {"R_min", "R_max", "R_step", "threshold", "threshold_width"});
    auto& x = c.curve;
    x.R_min = get(s, "R_min", x.R_min);
    x.R_max = get(s, "R_max", x.R_max);
    x.R_step = get(s, "R_step", x.R_step);
    x.threshold = get(s, "threshold", x.threshold);
    x.threshold_width = get(s, "threshold_width", x.threshold_width);
    if (!(x.R_min > 0.0) || x.R_max < x.R_min || !(x.R_step > 0.0) || !(x.threshold_width > 0.0)) {
      throw ConfigError("curve range must satisfy 0 < R_min <= R_max, R_step > 0");
    }
  }
  {
    const auto& s = section("continue");
    check_keys(s, "continue",
               {"parameter", "lambda_min", "lambda_max", "nu_initial", "nu_min", "nu_max", "max_points",
                "both_directions", "bumps"});
    auto& x = c.cont;
    x.parameter = get(s, "parameter", x.parameter);
    x.lambda_min = get(s, "lambda_min", x.lambda_min);
    x.lambda_max = get(s, "lambda_max", x.lambda_max);
    x.nu_initial = get(s, "nu_initial", x.nu_initial);
    x.nu_min = get(s, "nu_min", x.nu_min);
    x.nu_max = get(s, "nu_max", x.nu_max);
    x.max_points = get(s, "max_points", x.max_points);
    x.both_directions = get(s, "both_directions", x.both_directions);
    x.bumps = get_int_list(s, "bumps", x.bumps);
    if (x.parameter != "alpha" && x.parameter != "sigma" && x.parameter != "R") {
      throw ConfigError("continue.parameter must be alpha, sigma or R");
    }
    if (x.lambda_max < x.lambda_min) throw ConfigError("continue: lambda_max < lambda_min");
    if (!(x.nu_min > 0.0) || x.nu_max < x.nu_min || x.nu_initial < x.nu_min || x.nu_initial > x.nu_max) {
      throw ConfigError("continue: need 0 < nu_min <= nu_initial <= nu_max");
    }
    if (x.max_points < 1) throw ConfigError("continue.max_points must be >= 1");
    for (int b : x.bumps) {
      if (b < 1) throw ConfigError("continue.bumps entries must be >= 1");
    }
  }
  {
    const auto& s = section("evolve");
    check_keys(s, "evolve",
               {"nx", "ny", "L", "tau", "T", "snapshot_interval", "series_every", "initial", "winding", "noise"});
    auto& x = c.evolve;
    x.grid.nx = get(s, "nx", x.grid.nx);
    x.grid.ny = get(s, "ny", x.grid.ny);
    const double L = get(s, "L", x.grid.bx);
    x.grid.ax = x.grid.ay = -L;
    x.grid.bx = x.grid.by = L;
    x.tau = get(s, "tau", x.tau);
    x.T = get(s, "T", x.T);
    x.snapshot_interval = get(s, "snapshot_interval", x.snapshot_interval);
    x.series_every = get(s, "series_every", x.series_every);
    x.initial = get(s, "initial", x.initial);
    x.winding = get(s, "winding", x.winding);
    x.noise = get(s, "noise", x.noise);
    try {
      x.grid.validate();
    } catch (const std::exception& e) {
      throw ConfigError(std::string("evolve grid: ") + e.what());
    }
    if (!(L > 0.0)) throw ConfigError("evolve.L must be > 0");
    if (!(x.tau > 0.0) || !(x.T > 0.0)) throw ConfigError("evolve: tau and T must be > 0");
    if (x.snapshot_interval < 0.0 || x.series_every < 1) throw ConfigError("evolve: bad output cadence");
    if (x.initial != "oscillator" && x.initial != "stationary" && x.initial != "vortex") {
      throw ConfigError("evolve.initial must be oscillator, stationary or vortex");
    }
    if (x.initial == "vortex" && x.winding < 1) throw ConfigError("evolve.winding must be >= 1");
    if (!(x.noise >= 0.0)) throw ConfigError("evolve.noise must be >= 0");
  }
  {
    const auto& s = section("census");
    check_keys(s, "census", {"input", "density_floor", "neighborhood"});
    auto& x = c.census;
    const auto in = get<std::string>(s, "input", "");
    x.density_floor = get(s, "density_floor", x.density_floor);
    x.neighborhood = get(s, "neighborhood", x.neighborhood);
    if (x.neighborhood < 0) throw ConfigError("census.neighborhood must be >= 0");
    if (kind == "census") {
      if (in.empty()) throw ConfigError("census.input is required");
      x.input = in;
      if (x.input.is_relative()) x.input = base_dir / x.input;
      if (!std::filesystem::exists(x.input)) throw ConfigError("census input '" + x.input.string() + "' does not exist");
    } else if (!in.empty()) {
      x.input = in;
    }
  }
  return c;
}

/// Reads and parses an INI file; syntax errors become ConfigError.
inline ExperimentConfig load_config(const std::filesystem::path& path, const std::string& kind,
                                    std::optional<Preset> preset = {}) {
  if (!std::filesystem::exists(path)) throw ConfigError("config file '" + path.string() + "' does not exist");
  boost::property_tree::ptree t;
  try {
    boost::property_tree::read_ini(path.string(), t);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(e.what());
  }
  return parse_config(t, kind, preset, path.parent_path());
}

/// Config from INI text (tests and defaults).
inline ExperimentConfig config_from_string(const std::string& text, const std::string& kind,
                                           std::optional<Preset> preset = {}) {
  boost::property_tree::ptree t;
  std::istringstream in(text);
  try {
    boost::property_tree::read_ini(in, t);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(e.what());
  }
  return parse_config(t, kind, preset);
}

}  // namespace cgpe
