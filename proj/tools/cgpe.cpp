// Command-line front end: cgpe <kind> [--config file] [--out dir] [--preset desk|paper] [--seed n]
// Exit codes: 0 success, 1 numerical failure, 2 usage or config error.

#include "cgpe/core/config.hpp"
#include "cgpe/harness/experiments.hpp"
#include "cgpe/harness/manifest.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

namespace {

constexpr int kOk = 0;
constexpr int kNumerical = 1;
constexpr int kUsage = 2;

struct Options {
  std::string config;
  std::string out;
  std::string preset;
  std::optional<std::uint64_t> seed;
};

cgpe::ExperimentConfig load(const std::string& kind, const Options& o) {
  std::optional<cgpe::Preset> preset;
  if (!o.preset.empty()) preset = cgpe::parse_preset(o.preset);
  auto c = o.config.empty() ? cgpe::config_from_string("", kind, preset) : cgpe::load_config(o.config, kind, preset);
  if (o.seed) c.seed = *o.seed;
  return c;
}

int run(const std::string& kind, const Options& o) {
  cgpe::ExperimentConfig c;
  try {
    c = load(kind, o);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kUsage;
  }
  const std::filesystem::path dir = o.out.empty() ? std::filesystem::path("out") / kind : std::filesystem::path(o.out);
  cgpe::harness::RunResult result;
  int code = kOk;
  std::string message;
  try {
    result = cgpe::harness::run_experiment(c, dir, std::cout);
    message = result.summary;
  } catch (const cgpe::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    code = kNumerical;
    message = e.what();
  }
  try {
    std::filesystem::create_directories(dir);
    cgpe::harness::write_manifest(dir, c, result.artifacts, code, message);
  } catch (const std::exception& e) {
    std::cerr << "manifest: " << e.what() << '\n';
    if (code == kOk) code = kNumerical;
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pumped-decaying Gross-Pitaevskii lab"};
  app.require_subcommand(1);
  Options opts;
  std::string chosen;
  for (const auto& kind : cgpe::experiment_kinds()) {
    auto* sub = app.add_subcommand(kind, "run a " + kind + " experiment");
    sub->add_option("--config", opts.config, "INI config file")->check(CLI::ExistingFile);
    sub->add_option("--out", opts.out, "output directory");
    sub->add_option("--preset", opts.preset, "desk or paper")->check(CLI::IsMember({"desk", "paper"}));
    sub->add_option_function<std::uint64_t>("--seed", [&](const std::uint64_t& s) { opts.seed = s; }, "RNG seed");
    sub->callback([&chosen, kind] { chosen = kind; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }
  return run(chosen, opts);
}
