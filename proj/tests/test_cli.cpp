#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
// End-to-end checks of the twinkernel binary. The path to the built tool
// arrives via the TWINKERNEL_CLI environment variable (set by ctest).

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "twinkernel/impact.hpp"
#include "twinkernel/modelspec.hpp"
#include "twinkernel/twinlink.hpp"

namespace fs = std::filesystem;
using namespace twinkernel;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr
};

std::string cli_path() {
  const char* p = std::getenv("TWINKERNEL_CLI");
  REQUIRE_MESSAGE(p != nullptr, "TWINKERNEL_CLI must point at the built binary");
  return p;
}

RunResult run_cli(const std::string& args) {
  const std::string cmd = cli_path() + " " + args + " 2>&1";
  RunResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  while (std::fgets(buf, sizeof(buf), pipe)) r.output += buf;
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("twinkernel_cli_" + std::to_string(::getpid()) + "_" +
            std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  fs::path file(const std::string& name, const std::string& content) const {
    const fs::path p = path / name;
    std::ofstream(p, std::ios::binary) << content;
    return p;
  }
};

}  // namespace

TEST_CASE("check: clean documents exit 0, broken ones 1, missing files 2") {
  TempDir dir;
  const auto good = dir.file("good.twin", impact::conveyor_fsm_source());
  auto r = run_cli("check " + good.string());
  CHECK(r.exit_code == 0);
  CHECK(r.output.empty());

  const auto bad = dir.file("bad.twin", R"(
fsm broken {
  state Idle init;
  on Ghost from Idle to Idle;
}
)");
  r = run_cli("check " + bad.string());
  CHECK(r.exit_code == 1);
  CHECK(r.output.find("unknown symbol 'Ghost'") != std::string::npos);

  r = run_cli("check " + (dir.path / "nope.twin").string());
  CHECK(r.exit_code == 2);
}

TEST_CASE("simulate writes trace and CSV deterministically") {
  TempDir dir;
  const auto doc = dir.file("belt.twin", impact::belt_source());
  const auto trace1 = dir.path / "a.jsonl";
  const auto csv1 = dir.path / "a.csv";
  auto r = run_cli("simulate " + doc.string() + " --trace " + trace1.string() + " --csv " +
                   csv1.string());
  CHECK(r.exit_code == 0);
  CHECK(fs::exists(trace1));
  CHECK(fs::exists(csv1));
  CHECK(r.output.find("macro steps") != std::string::npos);

  const auto trace2 = dir.path / "b.jsonl";
  const auto csv2 = dir.path / "b.csv";
  r = run_cli("simulate " + doc.string() + " --trace " + trace2.string() + " --csv " +
              csv2.string());
  CHECK(r.exit_code == 0);
  CHECK(read_text_file(trace1) == read_text_file(trace2));
  CHECK(read_text_file(csv1) == read_text_file(csv2));

  const std::string csv = read_text_file(csv1);
  CHECK(csv.rfind("t_seconds,", 0) == 0);

  // the trace decodes record by record
  const Trace tr = decode_trace(read_text_file(trace1));
  CHECK(trace_is_sorted(tr));
}

TEST_CASE("simulate rejects an empty horizon") {
  TempDir dir;
  const auto doc = dir.file("belt.twin", impact::belt_source());
  const auto r = run_cli("simulate " + doc.string() + " --horizon 0s --trace " +
                         (dir.path / "t.jsonl").string() + " --csv " +
                         (dir.path / "t.csv").string());
  CHECK(r.exit_code == 1);
  CHECK(r.output.find("empty horizon") != std::string::npos);
}

TEST_CASE("the CSV v column reproduces the speed trapezoid") {
  TempDir dir;
  const auto doc = dir.file("conveyor.twin", impact::conveyor_ha_source());
  const auto csv_path = dir.path / "c.csv";
  const auto r = run_cli("simulate " + doc.string() + " --trace " +
                         (dir.path / "c.jsonl").string() + " --csv " + csv_path.string());
  REQUIRE(r.exit_code == 0);

  const PlantTrace csv = parse_plant_csv(read_text_file(csv_path));
  int v_col = -1;
  for (std::size_t i = 0; i < csv.signals.size(); ++i)
    if (csv.signals[i] == "cv.belt.v") v_col = static_cast<int>(i);
  REQUIRE(v_col >= 0);
  auto v_at = [&](double t) {
    for (const auto& row : csv.rows)
      if (row.t == SimTime::from_seconds(t)) return row.values[static_cast<std::size_t>(v_col)];
    return -1.0;
  };
  CHECK(std::fabs(v_at(1.0) - 0.5) <= 1e-6);
  CHECK(std::fabs(v_at(2.0) - 1.0) <= 1e-6);
  CHECK(std::fabs(v_at(20.0) - 1.0) <= 1e-6);
  CHECK(std::fabs(v_at(22.0) - 0.0) <= 1e-6);
}

TEST_CASE("compare: identical traces report zero, missing overlap fails") {
  TempDir dir;
  const auto doc = dir.file("belt.twin", impact::belt_source());
  const auto trace = dir.path / "t.jsonl";
  const auto csv = dir.path / "t.csv";
  REQUIRE(run_cli("simulate " + doc.string() + " --trace " + trace.string() + " --csv " +
                  csv.string())
              .exit_code == 0);

  auto r = run_cli("compare --twin " + trace.string() + " --plant " + csv.string());
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("cv.belt.x") != std::string::npos);
  CHECK(r.output.find(" 0 ") != std::string::npos);

  const auto far = dir.file("far.csv", "t_seconds,cv.belt.x\n100,1\n101,1.1\n");
  r = run_cli("compare --twin " + trace.string() + " --plant " + far.string());
  CHECK(r.exit_code == 1);

  const auto alien = dir.file("alien.csv", "t_seconds,nobody.there\n0,0\n1,1\n");
  r = run_cli("compare --twin " + trace.string() + " --plant " + alien.string());
  CHECK(r.exit_code == 1);
}

TEST_CASE("calibrate recovers the plant speed and writes a patched document") {
  TempDir dir;
  const auto doc = dir.file("belt.twin", impact::belt_source());

  // plant log at v = 0.035, produced by the simulator itself
  const auto plant_trace = dir.path / "plant.jsonl";
  const auto plant_csv = dir.path / "plant.csv";
  REQUIRE(run_cli("simulate " + doc.string() + " --set belt.v_speed=0.035 --trace " +
                  plant_trace.string() + " --csv " + plant_csv.string())
              .exit_code == 0);

  const auto patched = dir.path / "belt.calibrated.twin";
  const auto r = run_cli("calibrate " + doc.string() +
                         " --param belt.v_speed --bounds 0.01:0.1 --plant " + plant_csv.string() +
                         " --signal cv.belt.x --out " + patched.string());
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("fitted") != std::string::npos);
  REQUIRE(fs::exists(patched));

  // the patched document carries the fitted value and still compiles
  const auto cr = parse_and_compile(read_text_file(patched));
  REQUIRE(cr.ok);
  const auto& model = cr.set.has[static_cast<std::size_t>(cr.set.find_ha("belt"))];
  double fitted = 0.0;
  for (const auto& p : model.params)
    if (p.name == "v_speed") fitted = p.value;
  CHECK(std::fabs(fitted - 0.035) <= 1e-3);
}

TEST_CASE("demo lists scenarios and runs them with passing checkpoints") {
  auto r = run_cli("demo");
  CHECK(r.exit_code == 0);
  for (const auto& sc : impact::scenarios())
    CHECK(r.output.find(sc.name) != std::string::npos);

  TempDir dir;
  r = run_cli("demo conveyor --out-dir " + (dir.path / "out").string());
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("FAIL") == std::string::npos);
  CHECK(fs::exists(dir.path / "out" / "conveyor.trace.jsonl"));

  r = run_cli("demo no_such_scenario");
  CHECK(r.exit_code == 1);
}

TEST_CASE("demo traces are byte-identical across invocations") {
  TempDir dir;
  const auto d1 = dir.path / "one";
  const auto d2 = dir.path / "two";
  REQUIRE(run_cli("demo hbr --out-dir " + d1.string()).exit_code == 0);
  REQUIRE(run_cli("demo hbr --out-dir " + d2.string()).exit_code == 0);
  CHECK(read_text_file(d1 / "hbr.trace.jsonl") == read_text_file(d2 / "hbr.trace.jsonl"));
}
