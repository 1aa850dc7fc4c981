// twinkernel: command-line front end for the co-simulation kernel.
// Subcommands: check, simulate, compare, calibrate, demo.
// Exit codes: 0 success, 1 domain error, 2 environment/IO error.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "twinkernel/impact.hpp"
#include "twinkernel/modelspec.hpp"
#include "twinkernel/twinlink.hpp"

namespace fs = std::filesystem;
using namespace twinkernel;

namespace {

constexpr int kOk = 0;
constexpr int kDomainError = 1;
constexpr int kIoError = 2;

bool log_enabled() {
  const char* lvl = std::getenv("TWINKERNEL_LOG");
  return lvl && std::string_view(lvl) != "" && std::string_view(lvl) != "off";
}

void log_info(const std::string& msg) {
  if (log_enabled()) std::cerr << "twinkernel: " << msg << "\n";
}

SimTime parse_duration_flag(const std::string& text, const std::string& flag) {
  dsl::lex::Lexer lexer(text);
  std::vector<dsl::lex::Token> toks;
  try {
    toks = lexer.run();
  } catch (const dsl::lex::LexError&) {
    throw CLI::ValidationError(flag, "expected a duration like 30s, 0.01s or 10ms");
  }
  if (toks.size() != 2) throw CLI::ValidationError(flag, "expected a single duration");
  const auto& t = toks.front();
  using K = dsl::lex::Token::Kind;
  if (t.kind == K::Duration) return t.dur;
  if (t.kind == K::Int) return SimTime::from_secs(t.ival);
  if (t.kind == K::Real) return SimTime::from_seconds(t.rval);
  throw CLI::ValidationError(flag, "expected a duration like 30s, 0.01s or 10ms");
}

struct LoadedDoc {
  dsl::Document doc;
  CompileResult compiled;
};

// Returns nullopt after printing diagnostics; sets `exit_code` accordingly.
std::optional<LoadedDoc> load_document(const fs::path& path, int& exit_code) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const LoadError& e) {
    std::cerr << "twinkernel: " << e.what() << "\n";
    exit_code = kIoError;
    return std::nullopt;
  }
  auto pr = parse_model(text);
  if (!pr.ok()) {
    std::cerr << format_diagnostics(pr.diagnostics, path.string());
    exit_code = kDomainError;
    return std::nullopt;
  }
  auto cr = compile_document(*pr.document);
  std::cerr << format_diagnostics(cr.diagnostics, path.string());
  if (!cr.ok) {
    exit_code = kDomainError;
    return std::nullopt;
  }
  return LoadedDoc{std::move(*pr.document), std::move(cr)};
}

int pick_system(const ModelSet& set, const std::string& wanted, const fs::path& path) {
  if (!wanted.empty()) {
    const int idx = set.find_system(wanted);
    if (idx < 0) std::cerr << "twinkernel: " << path.string() << ": no system named '" << wanted << "'\n";
    return idx;
  }
  if (set.systems.empty()) {
    std::cerr << "twinkernel: " << path.string() << ": document declares no system\n";
    return -1;
  }
  if (set.systems.size() > 1) {
    std::cerr << "twinkernel: " << path.string() << ": several systems declared, pick one with --system\n";
    return -1;
  }
  return 0;
}

struct SetFlag {
  std::string param;
  double value = 0.0;
};

std::optional<SetFlag> parse_set_flag(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos) return std::nullopt;
  SetFlag out;
  out.param = text.substr(0, eq);
  const std::string rhs = text.substr(eq + 1);
  char* end = nullptr;
  out.value = std::strtod(rhs.c_str(), &end);
  if (end != rhs.c_str() + rhs.size() || rhs.empty()) return std::nullopt;
  return out;
}

int cmd_check(const std::vector<std::string>& files) {
  int rc = kOk;
  for (const auto& f : files) {
    int code = kOk;
    if (!load_document(f, code)) rc = std::max(rc, code);
  }
  return rc;
}

int cmd_simulate(const std::string& file, const std::string& system_name,
                 const std::string& horizon_flag, const std::string& step_flag,
                 const std::string& sample_flag, const std::string& substep_flag,
                 const std::vector<std::string>& sets, std::string trace_path,
                 std::string csv_path) {
  int code = kOk;
  auto loaded = load_document(file, code);
  if (!loaded) return code;
  ModelSet set = std::move(loaded->compiled.set);

  for (const auto& s : sets) {
    const auto flag = parse_set_flag(s);
    if (!flag) {
      std::cerr << "twinkernel: bad --set '" << s << "', expected model.param=value\n";
      return kDomainError;
    }
    if (!set_model_param(set, flag->param, flag->value)) {
      std::cerr << "twinkernel: no parameter named '" << flag->param << "'\n";
      return kDomainError;
    }
  }

  const int sys_idx = pick_system(set, system_name, file);
  if (sys_idx < 0) return kDomainError;
  SystemSpec sys = set.systems[static_cast<std::size_t>(sys_idx)];
  if (!horizon_flag.empty()) sys.config.horizon = parse_duration_flag(horizon_flag, "--horizon");
  if (!step_flag.empty()) sys.config.step = parse_duration_flag(step_flag, "--step");
  if (!sample_flag.empty()) sys.config.sample = parse_duration_flag(sample_flag, "--sample");
  if (!substep_flag.empty()) sys.config.substep = parse_duration_flag(substep_flag, "--substep");
  if (sys.config.horizon.nanos <= 0) {
    std::cerr << "twinkernel: empty horizon\n";
    return kDomainError;
  }

  const auto t0 = std::chrono::steady_clock::now();
  Trace trace;
  std::int64_t steps = 0;
  try {
    SystemEngine engine(set, sys);
    engine.run();
    steps = engine.step_index();
    trace = engine.finish();
  } catch (const KernelError& e) {
    std::cerr << "twinkernel: simulation failed: " << e.what() << "\n";
    return kDomainError;
  }
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                      std::chrono::steady_clock::now() - t0)
                      .count();

  if (trace_path.empty()) trace_path = sys.name + ".trace.jsonl";
  if (csv_path.empty()) csv_path = sys.name + ".signals.csv";
  std::size_t events = 0;
  for (const auto& r : trace.records)
    if (r.kind == RecordKind::Event) ++events;
  try {
    write_text_atomic(trace_path, encode_trace(trace));
    write_text_atomic(csv_path, trace_to_signal_csv(trace));
  } catch (const LoadError& e) {
    std::cerr << "twinkernel: " << e.what() << "\n";
    return kIoError;
  }
  std::cout << "system " << sys.name << ": " << steps << " macro steps, "
            << trace.records.size() << " records (" << events << " events), " << ms << " ms\n"
            << "trace: " << trace_path << "\ncsv:   " << csv_path << "\n";
  return kOk;
}

int cmd_compare(const std::string& twin_path, const std::string& plant_path,
                const std::string& signals_flag, double tol, const std::string& report_path) {
  Trace twin;
  PlantTrace plant;
  try {
    twin = decode_trace(read_text_file(twin_path));
  } catch (const LoadError& e) {
    std::cerr << "twinkernel: " << e.what() << "\n";
    return kIoError;
  } catch (const DecodeError& e) {
    std::cerr << "twinkernel: " << twin_path << ": " << e.what() << "\n";
    return kDomainError;
  }
  try {
    plant = load_plant_trace(plant_path);
  } catch (const LoadError& e) {
    std::cerr << "twinkernel: " << plant_path << ": " << e.what() << "\n";
    return fs::exists(plant_path) ? kDomainError : kIoError;
  }
  std::vector<std::string> signals;
  if (!signals_flag.empty()) {
    std::size_t start = 0;
    while (start <= signals_flag.size()) {
      const auto comma = signals_flag.find(',', start);
      const auto end = comma == std::string::npos ? signals_flag.size() : comma;
      if (end > start) signals.push_back(signals_flag.substr(start, end - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
  }
  try {
    const auto report = compare_traces(twin, plant, signals, tol);
    std::cout << report_to_text(report);
    if (!report_path.empty()) write_text_atomic(report_path, report_to_jsonl(report));
  } catch (const ComparisonError& e) {
    std::cerr << "twinkernel: " << e.what() << "\n";
    return kDomainError;
  }
  return kOk;
}

int cmd_calibrate(const std::string& file, const std::string& param, const std::string& bounds,
                  const std::string& plant_path, const std::string& signal, double tol,
                  const std::string& system_name, std::string out_path) {
  int code = kOk;
  auto loaded = load_document(file, code);
  if (!loaded) return code;

  const auto colon = bounds.find(':');
  if (colon == std::string::npos) {
    std::cerr << "twinkernel: --bounds expects lo:hi\n";
    return kDomainError;
  }
  CalibrationRequest req;
  req.models = &loaded->compiled.set;
  req.param = param;
  req.lo = std::strtod(bounds.substr(0, colon).c_str(), nullptr);
  req.hi = std::strtod(bounds.substr(colon + 1).c_str(), nullptr);
  req.signal = signal;
  req.tol = tol;
  req.system = pick_system(loaded->compiled.set, system_name, file);
  if (req.system < 0) return kDomainError;

  PlantTrace plant;
  try {
    plant = load_plant_trace(plant_path);
  } catch (const LoadError& e) {
    std::cerr << "twinkernel: " << plant_path << ": " << e.what() << "\n";
    return fs::exists(plant_path) ? kDomainError : kIoError;
  }
  req.plant = &plant;

  CalibrationResult result;
  try {
    result = calibrate_scalar(req);
  } catch (const KernelError& e) {
    std::cerr << "twinkernel: calibration failed: " << e.what() << "\n";
    return kDomainError;
  }
  std::cout << "param:        " << result.param << "\n"
            << "fitted:       " << format_real(result.fitted) << "\n"
            << "rmse:         " << format_real(result.rmse) << "\n"
            << "evaluations:  " << result.evaluations << "\n"
            << "bracket:      " << format_real(result.bracket_width) << "\n";

  dsl::Document patched = loaded->doc;
  if (!set_document_param(patched, result.param, result.fitted)) {
    std::cerr << "twinkernel: could not patch parameter in the document\n";
    return kDomainError;
  }
  if (out_path.empty()) out_path = fs::path(file).stem().string() + ".calibrated.twin";
  try {
    write_text_atomic(out_path, canonical_print(patched));
  } catch (const LoadError& e) {
    std::cerr << "twinkernel: " << e.what() << "\n";
    return kIoError;
  }
  std::cout << "patched:      " << out_path << "\n";
  return kOk;
}

int cmd_demo(const std::string& name, bool run_all, const std::string& out_dir) {
  if (name.empty() && !run_all) {
    std::cout << "available scenarios:\n";
    for (const auto& sc : impact::scenarios())
      std::cout << "  " << sc.name << "  -  " << sc.title << "\n";
    return kOk;
  }
  std::vector<std::string> names;
  if (run_all) {
    for (const auto& sc : impact::scenarios()) names.push_back(sc.name);
  } else {
    if (!impact::find_scenario(name)) {
      std::cerr << "twinkernel: no scenario named '" << name << "'\n";
      return kDomainError;
    }
    names.push_back(name);
  }
  bool all_ok = true;
  for (const auto& n : names) {
    impact::ScenarioResult r;
    try {
      const auto t0 = std::chrono::steady_clock::now();
      r = impact::run_scenario(n);
      const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
      log_info("scenario " + n + " ran in " + std::to_string(ms) + " ms");
    } catch (const KernelError& e) {
      std::cerr << "twinkernel: scenario " << n << " failed: " << e.what() << "\n";
      return kDomainError;
    }
    std::cout << "scenario " << n << ":\n";
    for (const auto& c : r.checks)
      std::cout << (c.pass ? "  PASS  " : "  FAIL  ") << c.what
                << (c.detail.empty() ? "" : "  (" + c.detail + ")") << "\n";
    all_ok = all_ok && r.ok;
    if (!out_dir.empty()) {
      try {
        fs::create_directories(out_dir);
        write_text_atomic(fs::path(out_dir) / (n + ".trace.jsonl"), encode_trace(r.trace));
        write_text_atomic(fs::path(out_dir) / (n + ".signals.csv"),
                          trace_to_signal_csv(r.trace));
      } catch (const std::exception& e) {
        std::cerr << "twinkernel: " << e.what() << "\n";
        return kIoError;
      }
    }
  }
  return all_ok ? kOk : kDomainError;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"twinkernel - deterministic co-simulation kernel for mixed-fidelity digital twins"};
  app.require_subcommand(1);

  // check
  auto* check = app.add_subcommand("check", "parse and validate model documents");
  std::vector<std::string> check_files;
  check->add_option("files", check_files, "one or more .twin documents")->required();

  // simulate
  auto* simulate = app.add_subcommand("simulate", "run a system and write trace + CSV");
  std::string sim_file, sim_system, sim_horizon, sim_step, sim_sample, sim_substep;
  std::string sim_trace, sim_csv;
  std::vector<std::string> sim_sets;
  simulate->add_option("file", sim_file, "system document")->required();
  simulate->add_option("--system", sim_system, "system to run (default: the only one)");
  simulate->add_option("--horizon", sim_horizon, "override horizon, e.g. 30s");
  simulate->add_option("--step", sim_step, "override macro step, e.g. 10ms (default 10ms)");
  simulate->add_option("--sample", sim_sample, "trajectory sample period (default 0.1s)");
  simulate->add_option("--substep", sim_substep, "integrator substep (default 1ms)");
  simulate->add_option("--set", sim_sets, "override a model parameter, model.param=value");
  simulate->add_option("--trace", sim_trace, "trace output path (default <system>.trace.jsonl)");
  simulate->add_option("--csv", sim_csv, "CSV output path (default <system>.signals.csv)");

  // compare
  auto* compare = app.add_subcommand("compare", "measure twin-vs-plant discrepancy");
  std::string cmp_twin, cmp_plant, cmp_signals, cmp_report;
  double cmp_tol = 1e-3;
  compare->add_option("--twin", cmp_twin, "twin trace (JSONL)")->required();
  compare->add_option("--plant", cmp_plant, "plant log (CSV)")->required();
  compare->add_option("--signals", cmp_signals, "comma-separated signal names (default: common)");
  compare->add_option("--tol", cmp_tol, "divergence tolerance (default 1e-3)");
  compare->add_option("--report", cmp_report, "write the structured report here");

  // calibrate
  auto* calibrate = app.add_subcommand("calibrate", "fit one scalar parameter to a plant log");
  std::string cal_file, cal_param, cal_bounds, cal_plant, cal_signal, cal_system, cal_out;
  double cal_tol = 1e-3;
  calibrate->add_option("file", cal_file, "system document")->required();
  calibrate->add_option("--param", cal_param, "parameter path, model.param")->required();
  calibrate->add_option("--bounds", cal_bounds, "search bounds lo:hi")->required();
  calibrate->add_option("--plant", cal_plant, "plant log (CSV)")->required();
  calibrate->add_option("--signal", cal_signal, "signal to fit, e.g. cv.belt.x")->required();
  calibrate->add_option("--tol", cal_tol, "bracket tolerance (default 1e-3)");
  calibrate->add_option("--system", cal_system, "system to run (default: the only one)");
  calibrate->add_option("--out", cal_out, "patched document path");

  // demo
  auto* demo = app.add_subcommand("demo", "list or run the bundled IMPACT scenarios");
  std::string demo_name, demo_out;
  bool demo_all = false;
  demo->add_option("name", demo_name, "scenario name (omit to list)");
  demo->add_flag("--all", demo_all, "run every scenario");
  demo->add_option("--out-dir", demo_out, "write trace and CSV files here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*check) return cmd_check(check_files);
    if (*simulate)
      return cmd_simulate(sim_file, sim_system, sim_horizon, sim_step, sim_sample, sim_substep,
                          sim_sets, sim_trace, sim_csv);
    if (*compare) return cmd_compare(cmp_twin, cmp_plant, cmp_signals, cmp_tol, cmp_report);
    if (*calibrate)
      return cmd_calibrate(cal_file, cal_param, cal_bounds, cal_plant, cal_signal, cal_tol,
                           cal_system, cal_out);
    if (*demo) return cmd_demo(demo_name, demo_all, demo_out);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "twinkernel: " << e.what() << "\n";
    return kDomainError;
  } catch (const std::exception& e) {
    std::cerr << "twinkernel: " << e.what() << "\n";
    return kDomainError;
  }
  return kOk;
}
