#include "cgpe/core/config.hpp"
#include "cgpe/harness/manifest.hpp"
#include "cgpe/splitstep/snapshot.hpp"
#include "cgpe/stationary/stationary.hpp"

#include <catch_amalgamated.hpp>

#include <json.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string output;
};

fs::path scratch(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("cgpe_harness_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

// Runs the CLI with `args`; the config text (if any) goes to dir/run.ini.
Run cli(const fs::path& dir, const std::string& kind, const std::string& config, const std::string& args = "") {
  std::string cmd = std::string(CGPE_CLI_PATH) + " " + kind;
  if (!config.empty()) {
    std::ofstream(dir / "run.ini") << config;
    cmd += " --config " + (dir / "run.ini").string();
  }
  cmd += " --out " + (dir / "out").string() + " " + args + " > " + (dir / "log.txt").string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.output = slurp(dir / "log.txt");
  return r;
}

nlohmann::json manifest(const fs::path& dir) { return nlohmann::json::parse(slurp(dir / "out" / "manifest.json")); }

}  // namespace

TEST_CASE("SHA-256 of known inputs", "[manifest]") {
  const auto d = scratch("sha");
  std::ofstream(d / "abc.txt", std::ios::binary) << "abc";
  CHECK(cgpe::harness::sha256_file(d / "abc.txt") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  std::ofstream(d / "empty.txt", std::ios::binary).flush();
  CHECK(cgpe::harness::sha256_file(d / "empty.txt") ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK_THROWS(cgpe::harness::sha256_file(d / "missing"));
}

TEST_CASE("stationary run writes hashed artifacts", "[cli]") {
  const auto d = scratch("stationary");
  const auto r = cli(d, "stationary", "R = 2\n[stationary]\nmesh_h = 0.02\n", "--seed 7");
  INFO(r.output);
  REQUIRE(r.code == 0);
  const auto m = manifest(d);
  CHECK(m["kind"] == "stationary");
  CHECK(m["preset"] == "desk");
  CHECK(m["seed"] == 7);
  CHECK(m["exit_code"] == 0);
  CHECK(m["config"]["stationary"]["mesh_h"] == "0.02");
  REQUIRE(m["artifacts"].size() == 2);
  for (const auto& a : m["artifacts"]) {
    const auto p = d / "out" / a["path"].get<std::string>();
    CHECK(a["sha256"] == cgpe::harness::sha256_file(p));
    CHECK(a["bytes"] == fs::file_size(p));
  }
  const auto prof = cgpe::stationary::read_profile_csv(d / "out" / "profile.csv");
  CHECK(prof.mu > 0.0);
  CHECK(r.output.find("mu = ") != std::string::npos);
}

TEST_CASE("alpha = 0 warns and writes the zero state", "[cli]") {
  const auto d = scratch("alpha0");
  const auto r = cli(d, "stationary", "alpha = 0\n");
  INFO(r.output);
  REQUIRE(r.code == 0);
  CHECK(r.output.find("warning") != std::string::npos);
  const auto prof = cgpe::stationary::read_profile_csv(d / "out" / "profile.csv");
  for (const auto& v : prof.phi) CHECK(v == std::complex<double>(0.0, 0.0));
}

TEST_CASE("configuration errors exit with 2", "[cli]") {
  const auto d = scratch("errors");
  CHECK(cli(d, "stability", "[stability]\nm_min = 5\nm_max = 4\n").code == 2);
  CHECK(cli(d, "stationary", "bogus = 1\n").code == 2);
  CHECK(cli(d, "stationary", "sigma = -1\n").code == 2);
  CHECK(cli(d, "evolve", "[evolve]\nnx = 33\n").code == 2);
  CHECK(cli(d, "census", "[census]\ninput = /nonexistent/snapshots\n").code == 2);
  CHECK(cli(d, "stationary", "", "--config /nonexistent.ini").code == 2);
  CHECK(cli(d, "stationary", "", "--preset huge").code == 2);
  CHECK(cli(d, "plot", "").code == 2);
  CHECK(cli(d, "", "").code == 2);
}

TEST_CASE("numerical failure exits with 1 and still writes a manifest", "[cli]") {
  const auto d = scratch("failure");
  const auto r = cli(d, "stationary", "[stationary]\nmax_iterations = 1\nmesh_h = 0.02\n");
  INFO(r.output);
  CHECK(r.code == 1);
  const auto m = manifest(d);
  CHECK(m["exit_code"] == 1);
  CHECK_FALSE(m["message"].get<std::string>().empty());
}

TEST_CASE("evolve then census on its snapshots", "[cli]") {
  const auto d = scratch("evolve");
  const auto r = cli(d, "evolve", "[evolve]\nnx = 32\nny = 32\nL = 8\ntau = 0.004\nT = 0.04\nsnapshot_interval = 0.02\n");
  INFO(r.output);
  REQUIRE(r.code == 0);
  const auto m = manifest(d);
  int snaps = 0;
  for (const auto& a : m["artifacts"]) snaps += a["path"].get<std::string>().rfind("snapshots/", 0) == 0;
  CHECK(snaps == 3);
  const auto last = cgpe::splitstep::read_snapshot(d / "out" / "snapshots" / "snap_000002.cgpe");
  CHECK_THAT(last.t, Catch::Matchers::WithinAbs(0.04, 1e-12));
  CHECK(fs::exists(d / "out" / "series.csv"));
  CHECK(fs::exists(d / "out" / "radial.csv"));

  const auto c = scratch("census");
  const auto rc = cli(c, "census", "[census]\ninput = " + (d / "out" / "snapshots").string() + "\n");
  INFO(rc.output);
  REQUIRE(rc.code == 0);
  std::ifstream in(c / "out" / "census_summary.csv");
  std::string line;
  int rows = -1;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 3);
}

TEST_CASE("paper preset is recorded", "[cli]") {
  const auto d = scratch("preset");
  const auto r = cli(d, "stationary", "[stationary]\nmesh_h = 0.02\n", "--preset paper");
  INFO(r.output);
  REQUIRE(r.code == 0);
  CHECK(manifest(d)["preset"] == "paper");
}

TEST_CASE("shipped configs parse for their kind", "[config]") {
  const fs::path dir = CGPE_CONFIG_DIR;
  const std::vector<std::pair<std::string, std::string>> files = {
      {"stationary.ini", "stationary"}, {"vortex.ini", "stationary"},   {"stability.ini", "stability"},
      {"curve.ini", "curve"},           {"continue.ini", "continue"},   {"evolve_r2.ini", "evolve"},
      {"evolve_r5.ini", "evolve"},      {"split_m2.ini", "evolve"}};
  for (const auto& [file, kind] : files) {
    INFO(file);
    CHECK_NOTHROW(cgpe::load_config(dir / file, kind));
  }
  std::size_t shipped = 0;
  for (const auto& e : fs::directory_iterator(dir)) shipped += e.path().extension() == ".ini";
  CHECK(shipped == files.size() + 1);
  // the census input only exists after the R = 5 run
  CHECK_THROWS_WITH(cgpe::load_config(dir / "census.ini", "census"), Catch::Matchers::ContainsSubstring("does not exist"));
}
