// Acceptance suite: runs every acceptance criterion at its stated tolerance
// and prints one PASS/FAIL line per criterion. Exit code 0 iff all pass.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <vector>

#include "gen.hpp"
#include "twinkernel/impact.hpp"
#include "twinkernel/modelspec.hpp"
#include "twinkernel/twinlink.hpp"

using namespace twinkernel;

namespace {

struct Failure {
  std::string what;
};

void require(bool cond, const std::string& what) {
  if (!cond) throw Failure{what};
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double signal_at(const Trace& tr, const std::string& source, const std::string& name, double t) {
  const SimTime at = SimTime::from_seconds(t);
  double out = std::nan("");
  for (const auto& r : tr.records) {
    if (r.t > at) break;
    if (r.kind == RecordKind::Signal && r.source == source && r.name == name) out = r.value.numeric();
  }
  return out;
}

// ---------------------------------------------------------------------------

void criterion_trapezoid() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto result = impact::run_scenario("conveyor");
  const double wall = seconds_since(t0);

  for (const auto& c : result.checks) require(c.pass, c.what + " (" + c.detail + ")");
  const auto& tr = result.trace;
  require(std::fabs(signal_at(tr, "cv.belt", "v", 1.0) - 0.5) <= 1e-6, "v(1.0) != 0.5");
  for (double t = 2.0; t <= 20.0; t += 1.0)
    require(std::fabs(signal_at(tr, "cv.belt", "v", t) - 1.0) <= 1e-6,
            "v(" + format_real(t) + ") != 1.0");
  require(std::fabs(signal_at(tr, "cv.belt", "v", 22.0)) <= 1e-6, "v(22.0) != 0");
  require(std::fabs(signal_at(tr, "cv.belt", "x", 30.0) - 20.0) <= 1e-6, "x(30) != 20");
  require(wall < 5.0, "runtime " + format_real(wall) + " s >= 5 s");
}

void criterion_hbr() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto result = impact::run_scenario("hbr");
  const double wall = seconds_since(t0);
  for (const auto& c : result.checks) require(c.pass, c.what + " (" + c.detail + ")");

  const TraceRecord* e_rec = nullptr;
  for (const auto& r : result.trace.records)
    if (r.kind == RecordKind::Event && r.source == "station.arm_x" && r.name == "e") {
      e_rec = &r;
      break;
    }
  require(e_rec != nullptr, "completion event e was never emitted");
  require(std::fabs(e_rec->t.to_seconds() - 9.0) <= 1e-6, "e not at 9.0 s");

  // T2 and T7 fire within the macro step that contains e: that step's marking
  // record already shows the token back in q1 with the updated position.
  const std::int64_t step_ns = 10'000'000;
  const std::int64_t macro = e_rec->t.nanos / step_ns;
  bool same_step = false;
  for (const auto& r : result.trace.records) {
    if (r.kind != RecordKind::Marking || r.source != "station.net") continue;
    if (r.t.nanos / step_ns != macro) continue;
    same_step = r.marking.find("q1:") != std::string::npos &&
                r.marking.find("(x," + format_real_bare(e_rec->value.numeric()) + ")") != std::string::npos;
  }
  require(same_step, "T2/T7 did not fire in the same macro step as e");
  require(wall < 2.0, "runtime " + format_real(wall) + " s >= 2 s");
}

void criterion_token_conservation() {
  auto hbr = impact::build_hbr_dtc();
  const SystemSpec base = hbr.set.systems[static_cast<std::size_t>(hbr.system)];
  std::mt19937_64 rng(20260808);
  std::uniform_real_distribution<double> target(0.0, 1.0);
  int violations = 0;
  for (int run = 0; run < 1000; ++run) {
    SystemSpec sys = base;
    sys.stimuli.clear();
    sys.config.horizon = SimTime::from_secs(2);
    const char* ports[] = {"inM_x", "inM_y", "inM_z"};
    for (const char* port : ports) {
      const int n = 1 + static_cast<int>(rng() % 3);
      for (int i = 0; i < n; ++i) {
        sys.stimuli.push_back(StimulusSpec{
            SimTime::from_nanos(static_cast<std::int64_t>(rng() % 190) * 10'000'000), 0, port,
            Value::real(target(rng))});
      }
    }
    SystemEngine engine(hbr.set, sys);
    while (!engine.done()) {
      engine.step();
      const Marking* m = engine.find_marking("station", "net");
      if (!m || m->total_tokens() != 3) ++violations;
    }
  }
  require(violations == 0, std::to_string(violations) + " token-count violations");
}

void criterion_executor_vs_oracle() {
  // HBR net with a small payload domain
  {
    const auto cr = impact::compile_or_throw(impact::hbr_source(), "hbr");
    const auto& net = cr.set.cpns[static_cast<std::size_t>(cr.set.find_cpn("hbr"))];
    const auto ctx = make_cpn_context(net);
    const std::vector<AlphabetEvent> alphabet = {
        {"inM_x", {Value::real(0.3), Value::real(0.6)}},
        {"inM_y", {Value::real(0.4)}},
        {"inM_z", {Value::real(0.5)}},
        {"inT_x", {Value::real(0.27), Value::real(0.57)}},
        {"inT_y", {Value::real(0.37)}},
        {"inT_z", {Value::real(0.47)}},
    };
    const auto s0 = cpn_initial_state(ctx);
    const auto oracle = reachable_markings(ctx, s0.marking, alphabet, 20);
    require(oracle.size() == reachable_markings(ctx, s0.marking, alphabet, 25).size(),
            "hbr oracle did not saturate by depth 20");

    std::mt19937_64 rng(99);
    std::size_t checked = 0;
    for (int run = 0; run < 300; ++run) {
      CpnState s = cpn_initial_state(ctx);
      for (int step = 0; step < 5; ++step) {
        std::vector<Event> inputs;
        for (const auto& ae : alphabet) {
          if (rng() % 3 != 0) continue;
          inputs.push_back(Event{
              ae.name, ae.payloads[static_cast<std::size_t>(rng() % ae.payloads.size())],
              SimTime::zero()});
        }
        cpn_step(ctx, s, inputs, SimTime::zero());
        require(oracle.count(s.marking) == 1, "hbr executor left the reachable set");
        ++checked;
      }
    }
    require(checked == 1500, "hbr inclusion check incomplete");
  }
  // seven-station line net
  {
    const CpnNet pn = impact::build_line_flow_pn();
    const auto ctx = make_cpn_context(pn);
    CpnState s = cpn_initial_state(ctx);
    const auto oracle = reachable_markings(ctx, s.marking, {}, 20);
    cpn_step(ctx, s, {}, SimTime::zero());
    require(oracle.count(s.marking) == 1, "line executor left the reachable set");
  }
}

void criterion_integrator_accuracy() {
  struct Flow {
    const char* title;
    const HaModel* model;
    const char* loc;
    std::vector<double> x0;
    std::function<std::vector<double>(double)> exact;
  };
  const HaModel conveyor = impact::build_conveyor_ha();
  const auto arm_cr = impact::compile_or_throw(impact::hbr_source(), "hbr");
  const HaModel& arm = arm_cr.set.has[static_cast<std::size_t>(arm_cr.set.find_ha("arm"))];

  const std::vector<Flow> flows = {
      {"conveyor Acc", &conveyor, "Acc", {0, 0, 0},
       [](double t) { return std::vector<double>{0.25 * t * t, 0.5 * t, t}; }},
      {"conveyor Const", &conveyor, "Const", {0, 1, 0},
       [](double t) { return std::vector<double>{t, 1.0, t}; }},
      {"conveyor Dec", &conveyor, "Dec", {0, 1, 0},
       [](double t) { return std::vector<double>{t - 0.25 * t * t, 1.0 - 0.5 * t, t}; }},
      {"conveyor Idle", &conveyor, "Idle", {2, 3, 4},
       [](double t) { (void)t; return std::vector<double>{2, 3, 4}; }},
      {"arm q7", &arm, "q7", {0},
       [](double t) { return std::vector<double>{0.03 * t}; }},
      {"arm q8", &arm, "q8", {0},
       [](double t) { return std::vector<double>{-0.03 * t}; }},
      {"arm q6", &arm, "q6", {0.27},
       [](double t) { (void)t; return std::vector<double>{0.27}; }},
  };

  for (const auto& f : flows) {
    const auto ctx = make_ha_context(*f.model);
    HaState s = ha_initial_state(ctx);
    for (std::size_t i = 0; i < f.model->locations.size(); ++i)
      if (f.model->locations[i].name == f.loc) s.location = static_cast<int>(i);
    s.x = f.x0;
    double worst = 0.0;
    const double h = 1e-3;
    for (int k = 1; k <= 30000; ++k) {
      s = integrate_step(ctx, s, h);
      const auto expect = f.exact(static_cast<double>(k) * h);
      for (std::size_t v = 0; v < expect.size(); ++v)
        worst = std::max(worst, std::fabs(s.x[v] - expect[v]));
    }
    require(worst <= 1e-9,
            std::string(f.title) + ": max error " + format_real(worst) + " > 1e-9");
  }

  // crossings are bracketed to one nanosecond
  {
    const auto ctx = make_ha_context(conveyor);
    HaState s = ha_initial_state(ctx);
    for (std::size_t i = 0; i < conveyor.locations.size(); ++i)
      if (conveyor.locations[i].name == "Acc") s.location = static_cast<int>(i);
    int v_idx = -1;
    for (std::size_t i = 0; i < conveyor.vars.size(); ++i)
      if (conveyor.vars[i].name == "v") v_idx = static_cast<int>(i);
    s.x[static_cast<std::size_t>(v_idx)] = 0.9;
    const HaPredicate pred = [&](const HaState& st) {
      return st.x[static_cast<std::size_t>(v_idx)] >= 1.0;
    };
    const auto t_star = locate_crossing(ctx, s, pred, SimTime::from_secs(1));
    require(t_star.has_value(), "crossing not found");
    require(std::fabs(t_star->to_seconds() - 0.2) <= 1e-9, "crossing time off");
    require(pred(ha_state_at(ctx, s, *t_star)), "predicate false at t*");
    require(!pred(ha_state_at(ctx, s, *t_star - SimTime::from_nanos(1))),
            "bracket wider than 1 ns");
  }
}

void criterion_determinism() {
  for (const auto& sc : impact::scenarios()) {
    const auto a = impact::run_scenario(sc.name);
    const auto b = impact::run_scenario(sc.name);
    const auto diff = diff_traces(a.trace, b.trace);
    require(!diff.has_value(),
            "scenario " + sc.name + " differs at record " +
                (diff ? std::to_string(*diff) : std::string("-")));
    require(encode_trace(a.trace) == encode_trace(b.trace), "byte difference in " + sc.name);
  }
}

void criterion_gals() {
  const char* doc = R"(
cpn src {
  var n: real;
  input ping: real;
  output pong: real;
  trans fwd {
    when ping: n;
    emit pong(n);
  }
}
cpn sink {
  var n: real;
  input ping: real;
  trans eat {
    when ping: n;
  }
}
dtc producer {
  instance s: src;
  in ping -> s.ping;
  out pong <- s.pong;
}
dtc consumer {
  instance k: sink;
  in ping -> k.ping;
}
system two {
  step 10ms;
  horizon 91s;
  component p: producer;
  component q: consumer;
  channel c1: p.pong -> q.ping latency 1;
}
)";
  auto cr = parse_and_compile(doc);
  require(cr.ok, "gals document failed to compile");

  std::mt19937_64 rng(4242);
  const int n_sends = 10000;
  for (const int latency : {1, 2, 3}) {
    SystemSpec sys = cr.set.systems.front();
    sys.channels.front().latency = latency;
    std::vector<std::int64_t> send_step(static_cast<std::size_t>(n_sends));
    for (int i = 0; i < n_sends; ++i) {
      send_step[static_cast<std::size_t>(i)] = static_cast<std::int64_t>(rng() % 9000);
      sys.stimuli.push_back(StimulusSpec{
          SimTime::from_nanos(send_step[static_cast<std::size_t>(i)] * 10'000'000), 0, "ping",
          Value::real(static_cast<double>(i))});
    }
    std::vector<int> order(static_cast<std::size_t>(n_sends));
    for (int i = 0; i < n_sends; ++i) order[static_cast<std::size_t>(i)] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) {
                       return send_step[static_cast<std::size_t>(a)] <
                              send_step[static_cast<std::size_t>(b)];
                     });

    SystemEngine engine(cr.set, sys);
    std::size_t seen = 0;
    while (!engine.done()) {
      const auto report = engine.step();
      for (const auto& ev : report.delivered[1]) {
        require(seen < order.size(), "more deliveries than sends");
        const int expect = order[seen];
        require(ev.payload->numeric() == static_cast<double>(expect),
                "FIFO order broken at delivery " + std::to_string(seen));
        require(report.step ==
                    send_step[static_cast<std::size_t>(expect)] + latency,
                "message " + std::to_string(expect) + " delivered at step " +
                    std::to_string(report.step) + " != send+" + std::to_string(latency));
        ++seen;
      }
    }
    require(seen == static_cast<std::size_t>(n_sends),
            "only " + std::to_string(seen) + " of " + std::to_string(n_sends) + " delivered");
  }
}

void criterion_parser() {
  // round trip: generated documents plus every shipped model
  std::mt19937_64 rng(123);
  for (int i = 0; i < 1000; ++i) {
    const std::string doc = gen::random_document(rng);
    const auto p1 = dsl::parse_model(doc);
    require(p1.ok(), "generated document failed to parse (iteration " + std::to_string(i) + ")");
    const std::string once = dsl::canonical_print(*p1.document);
    const auto p2 = dsl::parse_model(once);
    require(p2.ok(), "canonical print failed to reparse");
    require(dsl::canonical_print(*p2.document) == once,
            "round trip not structurally identical (iteration " + std::to_string(i) + ")");
  }
  for (const auto& sc : impact::scenarios()) {
    const auto p1 = dsl::parse_model(sc.source);
    require(p1.ok(), sc.name + " failed to parse");
    const std::string once = dsl::canonical_print(*p1.document);
    const auto p2 = dsl::parse_model(once);
    require(p2.ok() && dsl::canonical_print(*p2.document) == once,
            sc.name + " does not round trip");
  }
  // fuzz: the parser is total over arbitrary bytes
  std::mt19937_64 fuzz(456);
  for (int i = 0; i < 100000; ++i) {
    const std::string bytes = gen::random_bytes(fuzz, 120);
    dsl::parse_model(bytes);  // must neither crash nor throw
  }
}

void criterion_calibration() {
  const auto cr = impact::compile_or_throw(impact::belt_source(), "belt");
  auto plant_at = [&](double v) {
    ModelSet set = cr.set;
    set_model_param(set, "belt.v_speed", v);
    return parse_plant_csv(trace_to_signal_csv(system_run(set, set.systems.front())));
  };

  CalibrationRequest req;
  req.models = &cr.set;
  req.system = 0;
  req.param = "belt.v_speed";
  req.lo = 0.01;
  req.hi = 0.1;
  req.signal = "cv.belt.x";
  req.tol = 1e-3;

  const PlantTrace shifted = plant_at(0.035);
  req.plant = &shifted;
  auto result = calibrate_scalar(req);
  require(std::fabs(result.fitted - 0.035) <= 1e-3,
          "fitted " + format_real(result.fitted) + " != 0.035 +- 1e-3");
  require(result.evaluations <= 40,
          std::to_string(result.evaluations) + " simulator evaluations > 40");

  const PlantTrace nominal = plant_at(0.03);
  req.plant = &nominal;
  result = calibrate_scalar(req);
  require(std::fabs(result.fitted - 0.03) <= 1e-3, "nominal fit off");
  require(result.rmse <= 1e-9, "rmse " + format_real(result.rmse) + " > 1e-9");
  require(result.evaluations <= 40, "nominal fit needed too many evaluations");
}

void criterion_guards() {
  // divergent net: the executor reports non-quiescence instead of spinning
  {
    const char* doc = R"(
cpn diverge {
  place p: unit init 1;
  trans spin {
    in p;
    out p;
  }
}
dtc d {
  instance n: diverge;
}
system s {
  step 10ms;
  horizon 1s;
  component c: d;
}
)";
    auto cr = parse_and_compile(doc);
    require(cr.ok, "divergent net failed to compile");
    bool caught = false;
    try {
      system_run(cr.set, cr.set.systems.front());
    } catch (const NonQuiescenceError&) {
      caught = true;
    }
    require(caught, "divergent net did not raise NonQuiescenceError");
  }
  // instantaneous event cycle across two machines
  {
    const char* doc = R"(
fsm a_machine {
  input kick: event;
  var out_a: bool = false;
  state S init;
  on kick from S to S do out_a := !out_a;
}
fsm b_machine {
  input kick: event;
  var out_b: bool = false;
  state S init;
  on kick from S to S do out_b := !out_b;
}
dtc cycle {
  instance a: a_machine;
  instance b: b_machine;
  wire a.out_a -> b.kick;
  wire b.out_b -> a.kick;
  in kick -> a.kick;
}
system spin {
  step 10ms;
  horizon 1s;
  component c: cycle;
  at 0s c.kick;
}
)";
    auto cr = parse_and_compile(doc);
    require(cr.ok, "cycle document failed to compile");
    bool caught = false;
    try {
      system_run(cr.set, cr.set.systems.front());
    } catch (const CausalityError&) {
      caught = true;
    }
    require(caught, "instantaneous cycle did not raise CausalityError");
  }
  // Zeno automaton aborts at the jump cap
  {
    const char* doc = R"(
ha zeno {
  var y = 0.0;
  loc A init {
    flow y' = 0.0;
  }
  loc B {
    flow y' = 0.0;
  }
  edge A -> B if y >= 0.0 urgent;
  edge B -> A if y >= 0.0 urgent;
}
dtc d {
  instance z: zeno;
}
system s {
  step 10ms;
  horizon 1s;
  component c: d;
}
)";
    auto cr = parse_and_compile(doc);
    require(cr.ok, "zeno document failed to compile");
    bool caught = false;
    try {
      system_run(cr.set, cr.set.systems.front());
    } catch (const ZenoError&) {
      caught = true;
    }
    require(caught, "zeno model did not raise ZenoError");
  }
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* title;
    std::function<void()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "trapezoid reproduction (30 s conveyor demo, +-1e-6, < 5 s)", criterion_trapezoid},
      {2, "HBR end to end (e at 9.0 s, same-step T2/T7, restored marking, < 2 s)", criterion_hbr},
      {3, "token conservation over 1000 randomized request schedules", criterion_token_conservation},
      {4, "executor markings contained in the depth-20 reachability oracle", criterion_executor_vs_oracle},
      {5, "RK4 within 1e-9 of closed forms over 30 s; 1 ns crossing brackets", criterion_integrator_accuracy},
      {6, "byte-identical traces across repeated demo runs", criterion_determinism},
      {7, "GALS delivery at send+latency with FIFO order over 10^4 sends", criterion_gals},
      {8, "parser round trip on 10^3 generated documents; 10^5-input fuzz", criterion_parser},
      {9, "calibration recovery (0.035 and nominal 0.03) within 40 evaluations", criterion_calibration},
      {10, "Zeno and non-convergence guards abort with their designated errors", criterion_guards},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    std::string verdict = "PASS";
    std::string detail;
    try {
      c.run();
    } catch (const Failure& f) {
      verdict = "FAIL";
      detail = f.what;
      ++failures;
    } catch (const std::exception& e) {
      verdict = "FAIL";
      detail = std::string("unexpected exception: ") + e.what();
      ++failures;
    }
    std::printf("%s criterion %2d: %s [%.2f s]%s%s\n", verdict.c_str(), c.id, c.title,
                seconds_since(t0), detail.empty() ? "" : " -- ", detail.c_str());
    std::fflush(stdout);
  }
  if (failures) std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
