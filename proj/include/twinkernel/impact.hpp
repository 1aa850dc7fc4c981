#pragma once
// Built-in model library and demo scenarios for the IMPACT line case study:
// the conveyor belt at two fidelities, the High-Bay Rack component (coloured
// net plus three cartesian arm axes), a coarse seven-station workpiece-flow
// net, and a constant-speed belt used by the calibration demo.

#include <cmath>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "twinkernel/composition.hpp"
#include "twinkernel/modelspec.hpp"

namespace twinkernel::impact {

// ---------------------------------------------------------------------------
// Embedded documents (also shipped under models/impact/)

inline const char* conveyor_fsm_source() {
  return R"twin(# Conveyor belt, coarse fidelity: two macro states, a speed signal and a
# workpiece staleness timer.
fsm conveyor {
  param v_speed = 0.03;
  param timeout_period = 10.0;
  input TurnOn: bool = false;
  input WP: event;
  var v: real = 0.0;
  timer TimeOut = timeout_period;
  state Idle init;
  state On;
  on TurnOn from Idle to On do v := v_speed, reset TimeOut;
  on !TurnOn or TimeOut from On to Idle do v := 0.0;
  on WP from On to On do reset TimeOut;
}

dtc conveyor_station {
  instance belt: conveyor;
  in TurnOn -> belt.TurnOn;
  in WP -> belt.WP;
}

system conveyor_fsm_demo {
  step 0.01s;
  horizon 30s;
  component cv: conveyor_station;
  at 0s cv.TurnOn(true);
  at 0.5s cv.WP;
  at 1.5s cv.WP;
  at 2.5s cv.WP;
  at 3.5s cv.WP;
  at 4.5s cv.WP;
  at 5.5s cv.WP;
  at 6.5s cv.WP;
  at 7.5s cv.WP;
  at 8.5s cv.WP;
  at 9.5s cv.WP;
  at 10.5s cv.WP;
  at 11.5s cv.WP;
  at 12.5s cv.WP;
  at 13.5s cv.WP;
  at 14.5s cv.WP;
  at 15.5s cv.WP;
  at 16.5s cv.WP;
  at 17.5s cv.WP;
  at 18.5s cv.WP;
  at 19.5s cv.WP;
  at 20s cv.TurnOn(false);
}
)twin";
}

inline const char* conveyor_ha_source() {
  return R"twin(# Conveyor belt refined as a hybrid automaton: the motor ramps at
# accel until the belt speed reaches v_max, cruises, and ramps down when
# switched off or when no workpiece arrived for timeout_period seconds.
ha conveyor_ha {
  param accel = 0.5;
  param v_max = 1.0;
  param timeout_period = 10.0;
  input TurnOn: bool = false;
  input WP: event;
  var x = 0.0;
  var v = 0.0;
  var clk = 0.0;
  loc Idle init {
    flow x' = 0.0;
    flow v' = 0.0;
    flow clk' = 0.0;
  }
  loc Acc {
    flow x' = v;
    flow v' = accel;
    flow clk' = 1.0;
    inv v < v_max;
  }
  loc Const {
    flow x' = 1.0;
    flow v' = 0.0;
    flow clk' = 1.0;
  }
  loc Dec {
    flow x' = v;
    flow v' = -accel;
    flow clk' = 1.0;
    inv v > 0.0;
  }
  edge Idle -> Acc if TurnOn urgent do clk := 0.0;
  edge Acc -> Const if v >= v_max urgent;
  edge Acc -> Dec if !TurnOn or clk >= timeout_period urgent;
  edge Const -> Const on WP do clk := 0.0;
  edge Const -> Dec if !TurnOn or clk >= timeout_period urgent;
  edge Dec -> Idle if v <= 0.0 urgent;
  edge Dec -> Acc if TurnOn and clk < timeout_period urgent do clk := 0.0;
}

dtc conveyor_ha_station {
  instance belt: conveyor_ha;
  in TurnOn -> belt.TurnOn;
  in WP -> belt.WP;
}

system conveyor_demo {
  step 0.01s;
  horizon 30s;
  component cv: conveyor_ha_station;
  at 0s cv.TurnOn(true);
  at 0.5s cv.WP;
  at 1.5s cv.WP;
  at 2.5s cv.WP;
  at 3.5s cv.WP;
  at 4.5s cv.WP;
  at 5.5s cv.WP;
  at 6.5s cv.WP;
  at 7.5s cv.WP;
  at 8.5s cv.WP;
  at 9.5s cv.WP;
  at 10.5s cv.WP;
  at 11.5s cv.WP;
  at 12.5s cv.WP;
  at 13.5s cv.WP;
  at 14.5s cv.WP;
  at 15.5s cv.WP;
  at 16.5s cv.WP;
  at 17.5s cv.WP;
  at 18.5s cv.WP;
  at 19.5s cv.WP;
  at 20s cv.TurnOn(false);
}
)twin";
}

inline const char* hbr_source() {
  return R"twin(# High-Bay Rack: a coloured net tracks which axes are idle, moving or done,
# and one hybrid automaton per axis integrates the cartesian arm position.
# A move completion event e carries the final position back into the net.
colorset dir = x | y | z;
colorset pos = real;
colorset U = dir * pos;

cpn hbr {
  param deadband = 0.03;
  var d: dir;
  var i: pos;
  var p: pos;
  input inM_x: real;
  input inM_y: real;
  input inM_z: real;
  input inT_x: real;
  input inT_y: real;
  input inT_z: real;
  place q1: U init 1'(x, 0.0) + 1'(y, 0.0) + 1'(z, 0.0);
  place q2: U;
  place q3: U;
  place q4: U;
  place q5: U;
  trans T1 {
    in q1: (d, i);
    when inM_x: x_t;
    guard d == x and abs(x_t - i) >= deadband;
    out q2: (d, i);
  }
  trans T2 {
    in q2: (d, i);
    when inT_x: p;
    out q5: (d, p);
  }
  trans T3 {
    in q1: (d, i);
    when inM_y: y_t;
    guard d == y and abs(y_t - i) >= deadband;
    out q3: (d, i);
  }
  trans T4 {
    in q3: (d, i);
    when inT_y: p;
    out q5: (d, p);
  }
  trans T5 {
    in q1: (d, i);
    when inM_z: z_t;
    guard d == z and abs(z_t - i) >= deadband;
    out q4: (d, i);
  }
  trans T6 {
    in q4: (d, i);
    when inT_z: p;
    out q5: (d, p);
  }
  trans T7 {
    in q5: (d, i);
    out q1: (d, i);
  }
  var x_t: pos;
  var y_t: pos;
  var z_t: pos;
}

ha arm {
  param arm_speed = 0.03;
  param deadband = 0.03;
  input x_d: real = 0.0;
  output e: real;
  var arm_x = 0.0;
  loc q6 init {
    flow arm_x' = 0.0;
  }
  loc q7 {
    flow arm_x' = arm_speed;
    inv abs(x_d - arm_x) >= deadband;
  }
  loc q8 {
    flow arm_x' = -arm_speed;
    inv abs(x_d - arm_x) >= deadband;
  }
  edge q6 -> q7 on x_d if x_d - arm_x >= deadband;
  edge q6 -> q8 on x_d if x_d - arm_x <= -deadband;
  edge q7 -> q6 if abs(x_d - arm_x) <= deadband urgent emit e(arm_x);
  edge q8 -> q6 if abs(x_d - arm_x) <= deadband urgent emit e(arm_x);
}

dtc hbr_station {
  instance net: hbr;
  instance arm_x: arm;
  instance arm_y: arm;
  instance arm_z: arm;
  wire arm_x.e -> net.inT_x;
  wire arm_y.e -> net.inT_y;
  wire arm_z.e -> net.inT_z;
  in inM_x -> net.inM_x, arm_x.x_d;
  in inM_y -> net.inM_y, arm_y.x_d;
  in inM_z -> net.inM_z, arm_z.x_d;
}

system hbr_demo {
  step 0.01s;
  horizon 12s;
  component station: hbr_station;
  at 0s station.inM_x(0.3);
  at 0s station.inM_y(0.2);
  at 0s station.inM_z(0.1);
}
)twin";
}

inline const char* line_flow_source() {
  return R"twin(# Workpiece flow across the seven IMPACT stations at net fidelity: the
# assembly step additionally needs a PCB box fetched by the Robotino from
# the mobile station. Untimed; a run completes within one macro step.
cpn line_flow {
  place rack: unit init 1;
  place drill: unit;
  place assembly: unit;
  place magazine: unit;
  place press: unit;
  place done: unit;
  place mobile: unit init 1;
  place robotino: unit;
  place pcb_bay: unit;
  trans to_drill {
    in rack;
    out drill;
  }
  trans to_assembly {
    in drill;
    out assembly;
  }
  trans fetch_pcbs {
    in mobile;
    out robotino;
  }
  trans deliver_pcb {
    in robotino;
    out pcb_bay;
  }
  trans assemble {
    in assembly;
    in pcb_bay;
    out magazine;
  }
  trans to_press {
    in magazine;
    out press;
  }
  trans seal {
    in press;
    out done;
  }
}

dtc line_station {
  instance line: line_flow;
}

system line_flow_demo {
  step 0.01s;
  horizon 1s;
  component line: line_station;
}
)twin";
}

inline const char* belt_source() {
  return R"twin(# Constant-speed belt transport used by the calibration demo: position is
# the integral of the (calibratable) belt speed.
ha belt {
  param v_speed = 0.03;
  var x = 0.0;
  loc Run init {
    flow x' = v_speed;
  }
}

dtc belt_station {
  instance belt: belt;
}

system belt_demo {
  step 0.01s;
  horizon 10s;
  component cv: belt_station;
}
)twin";
}

// ---------------------------------------------------------------------------
// Compiled accessors

inline CompileResult compile_or_throw(const char* source, const char* what) {
  auto cr = parse_and_compile(source);
  if (!cr.ok)
    throw ContractError(std::string("embedded model '") + what +
                        "' failed to compile:\n" + format_diagnostics(cr.diagnostics));
  return cr;
}

inline FsmModel build_conveyor_fsm() {
  auto cr = compile_or_throw(conveyor_fsm_source(), "conveyor_fsm");
  return cr.set.fsms[static_cast<std::size_t>(cr.set.find_fsm("conveyor"))];
}

inline HaModel build_conveyor_ha() {
  auto cr = compile_or_throw(conveyor_ha_source(), "conveyor_ha");
  return cr.set.has[static_cast<std::size_t>(cr.set.find_ha("conveyor_ha"))];
}

inline CpnNet build_line_flow_pn() {
  auto cr = compile_or_throw(line_flow_source(), "line_flow");
  return cr.set.cpns[static_cast<std::size_t>(cr.set.find_cpn("line_flow"))];
}

struct HbrBundle {
  ModelSet set;
  int dtc = -1;     // hbr_station
  int system = -1;  // hbr_demo
};

inline HbrBundle build_hbr_dtc() {
  auto cr = compile_or_throw(hbr_source(), "hbr");
  HbrBundle b;
  b.dtc = cr.set.find_dtc("hbr_station");
  b.system = cr.set.find_system("hbr_demo");
  b.set = std::move(cr.set);
  return b;
}

// ---------------------------------------------------------------------------
// Scenarios and checkpoints

struct SignalAt {
  std::string source, name;
  double t, expected, tol;
};
struct EventAt {
  std::string source, name;
  double expected_t, tol_t;
  std::optional<double> payload;
  double payload_tol = 0.0;
};
struct PlaceTokens {
  std::string component, instance, place;
  std::int64_t count;
};
struct TokenNear {
  std::string component, instance, place;
  std::string label;
  double pos, tol;
};
using Checkpoint = std::variant<SignalAt, EventAt, PlaceTokens, TokenNear>;

struct Scenario {
  std::string name;
  std::string title;
  const char* source;
  std::string system;
  std::vector<Checkpoint> checkpoints;
};

inline const std::vector<Scenario>& scenarios() {
  static const std::vector<Scenario> table = [] {
    std::vector<Scenario> s;
    s.push_back(Scenario{
        "conveyor",
        "conveyor belt at hybrid-automaton fidelity (speed trapezoid over 30 s)",
        conveyor_ha_source(),
        "conveyor_demo",
        {
            SignalAt{"cv.belt", "v", 1.0, 0.5, 1e-6},
            SignalAt{"cv.belt", "v", 2.0, 1.0, 1e-6},
            SignalAt{"cv.belt", "v", 10.0, 1.0, 1e-6},
            SignalAt{"cv.belt", "v", 20.0, 1.0, 1e-6},
            SignalAt{"cv.belt", "v", 22.0, 0.0, 1e-6},
            SignalAt{"cv.belt", "v", 25.0, 0.0, 1e-6},
            SignalAt{"cv.belt", "x", 30.0, 20.0, 1e-6},
        }});
    s.push_back(Scenario{
        "conveyor_fsm",
        "conveyor belt at state-machine fidelity (speed steps)",
        conveyor_fsm_source(),
        "conveyor_fsm_demo",
        {
            SignalAt{"cv.belt", "v", 0.0, 0.03, 1e-9},
            SignalAt{"cv.belt", "v", 10.0, 0.03, 1e-9},
            SignalAt{"cv.belt", "v", 19.99, 0.03, 1e-9},
            SignalAt{"cv.belt", "v", 20.0, 0.0, 1e-9},
            SignalAt{"cv.belt", "v", 30.0, 0.0, 1e-9},
        }});
    s.push_back(Scenario{
        "hbr",
        "High-Bay Rack: three simultaneous axis moves through the coloured net",
        hbr_source(),
        "hbr_demo",
        {
            EventAt{"station.arm_x", "e", 9.0, 1e-6, 0.27, 1e-6},
            EventAt{"station.arm_y", "e", 17.0 / 3.0, 1e-3, 0.17, 1e-6},
            EventAt{"station.arm_z", "e", 7.0 / 3.0, 1e-3, 0.07, 1e-6},
            PlaceTokens{"station", "net", "q1", 3},
            PlaceTokens{"station", "net", "q2", 0},
            PlaceTokens{"station", "net", "q5", 0},
            TokenNear{"station", "net", "q1", "x", 0.27, 1e-6},
            TokenNear{"station", "net", "q1", "y", 0.17, 1e-6},
            TokenNear{"station", "net", "q1", "z", 0.07, 1e-6},
        }});
    s.push_back(Scenario{
        "line_flow",
        "seven-station workpiece flow net (assembly waits for the PCB supply)",
        line_flow_source(),
        "line_flow_demo",
        {
            PlaceTokens{"line", "line", "done", 1},
            PlaceTokens{"line", "line", "rack", 0},
            PlaceTokens{"line", "line", "pcb_bay", 0},
        }});
    s.push_back(Scenario{
        "belt",
        "constant-speed belt transport (calibration subject)",
        belt_source(),
        "belt_demo",
        {
            SignalAt{"cv.belt", "x", 10.0, 0.3, 1e-9},
        }});
    return s;
  }();
  return table;
}

inline const Scenario* find_scenario(std::string_view name) {
  for (const auto& s : scenarios())
    if (s.name == name) return &s;
  return nullptr;
}

struct CheckOutcome {
  std::string what;
  bool pass = false;
  std::string detail;
};

struct ScenarioResult {
  std::string name;
  Trace trace;
  std::vector<CheckOutcome> checks;
  bool ok = true;
};

namespace detail {

inline std::optional<double> signal_value_at(const Trace& tr, const std::string& source,
                                             const std::string& name, double t) {
  const SimTime at = SimTime::from_seconds(t);
  std::optional<double> out;
  for (const auto& r : tr.records) {
    if (r.t > at) break;
    if (r.kind == RecordKind::Signal && r.source == source && r.name == name &&
        r.value.is_numeric())
      out = r.value.numeric();
  }
  return out;
}

inline const TraceRecord* first_event(const Trace& tr, const std::string& source,
                                      const std::string& name) {
  for (const auto& r : tr.records)
    if (r.kind == RecordKind::Event && r.source == source && r.name == name) return &r;
  return nullptr;
}

}  // namespace detail

// Parses, compiles and runs a named scenario, then evaluates its checkpoints.
inline ScenarioResult run_scenario(std::string_view name) {
  const Scenario* sc = find_scenario(name);
  if (!sc) throw ContractError("no scenario named '" + std::string(name) + "'");
  auto cr = compile_or_throw(sc->source, sc->name.c_str());
  const int sys = cr.set.find_system(sc->system);
  if (sys < 0) throw ContractError("scenario system missing: " + sc->system);

  SystemEngine engine(cr.set, cr.set.systems[static_cast<std::size_t>(sys)]);
  engine.run();

  ScenarioResult result;
  result.name = sc->name;
  result.trace = engine.finish();

  char buf[256];
  for (const auto& cp : sc->checkpoints) {
    CheckOutcome oc;
    if (const auto* s = std::get_if<SignalAt>(&cp)) {
      std::snprintf(buf, sizeof(buf), "%s.%s(%g) = %g +- %g", s->source.c_str(), s->name.c_str(),
                    s->t, s->expected, s->tol);
      oc.what = buf;
      const auto v = detail::signal_value_at(result.trace, s->source, s->name, s->t);
      if (!v) {
        oc.detail = "no sample at or before t";
      } else {
        oc.pass = std::fabs(*v - s->expected) <= s->tol;
        oc.detail = "got " + format_real(*v);
      }
    } else if (const auto* e = std::get_if<EventAt>(&cp)) {
      std::snprintf(buf, sizeof(buf), "event %s.%s at t = %g +- %g", e->source.c_str(),
                    e->name.c_str(), e->expected_t, e->tol_t);
      oc.what = buf;
      const auto* rec = detail::first_event(result.trace, e->source, e->name);
      if (!rec) {
        oc.detail = "event never emitted";
      } else {
        const double at = rec->t.to_seconds();
        oc.pass = std::fabs(at - e->expected_t) <= e->tol_t;
        oc.detail = "emitted at " + format_real(at);
        if (oc.pass && e->payload) {
          const double p = rec->value.numeric();
          oc.pass = std::fabs(p - *e->payload) <= e->payload_tol;
          oc.detail += ", payload " + format_real(p);
        }
      }
    } else if (const auto* p = std::get_if<PlaceTokens>(&cp)) {
      std::snprintf(buf, sizeof(buf), "place %s.%s.%s holds %lld token(s)", p->component.c_str(),
                    p->instance.c_str(), p->place.c_str(), static_cast<long long>(p->count));
      oc.what = buf;
      const Marking* m = engine.find_marking(p->component, p->instance);
      if (!m) {
        oc.detail = "no such net instance";
      } else {
        // place index via the runtime's net
        std::int64_t got = -1;
        for (int c = 0; c < static_cast<int>(cr.set.systems[static_cast<std::size_t>(sys)]
                                                 .components.size()); ++c) {
          if (cr.set.systems[static_cast<std::size_t>(sys)].components[static_cast<std::size_t>(c)]
                  .id != p->component)
            continue;
          const auto& rt = engine.component_runtime(c);
          const int inst = rt.spec().instance_index(p->instance);
          const auto& net = *rt.cpn_ctx(inst).net;
          const int place = net.place_index(p->place);
          if (place < 0) break;
          got = 0;
          for (const auto& [tok, count] : m->places[static_cast<std::size_t>(place)]) got += count;
        }
        oc.pass = got == p->count;
        oc.detail = "got " + format_int(got);
      }
    } else if (const auto* tn = std::get_if<TokenNear>(&cp)) {
      std::snprintf(buf, sizeof(buf), "token (%s, %g +- %g) in %s.%s.%s", tn->label.c_str(),
                    tn->pos, tn->tol, tn->component.c_str(), tn->instance.c_str(),
                    tn->place.c_str());
      oc.what = buf;
      const Marking* m = engine.find_marking(tn->component, tn->instance);
      if (m) {
        for (int c = 0; c < static_cast<int>(cr.set.systems[static_cast<std::size_t>(sys)]
                                                 .components.size()); ++c) {
          if (cr.set.systems[static_cast<std::size_t>(sys)].components[static_cast<std::size_t>(c)]
                  .id != tn->component)
            continue;
          const auto& rt = engine.component_runtime(c);
          const int inst = rt.spec().instance_index(tn->instance);
          const auto& net = *rt.cpn_ctx(inst).net;
          const int place = net.place_index(tn->place);
          if (place < 0) break;
          for (const auto& [tok, count] : m->places[static_cast<std::size_t>(place)]) {
            if (tok.size() == 2 && tok[0].is_label() && tok[0].as_label() == tn->label &&
                tok[1].is_numeric() && std::fabs(tok[1].numeric() - tn->pos) <= tn->tol) {
              oc.pass = true;
              oc.detail = "found at " + format_real(tok[1].numeric());
            }
          }
        }
        if (!oc.pass && oc.detail.empty()) oc.detail = "no matching token";
      } else {
        oc.detail = "no such net instance";
      }
    }
    result.ok = result.ok && oc.pass;
    result.checks.push_back(std::move(oc));
  }
  return result;
}

}  // namespace twinkernel::impact
