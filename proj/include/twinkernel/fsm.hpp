#pragma once
// Finite-state machine executor: guarded transitions in declaration order,
// signal assignments, one-shot timers whose expiry synthesizes a pulse event.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "twinkernel/core.hpp"
#include "twinkernel/diag.hpp"
#include "twinkernel/expr.hpp"

namespace twinkernel {

struct FsmVar {
  std::string name;
  TypeRef type = TypeRef::real();
  Value init;
};

struct FsmTimer {
  std::string name;
  Expr period;  // seconds, over params
};

struct FsmAction {
  enum class Kind : std::uint8_t { Assign, ResetTimer };
  Kind kind = Kind::Assign;
  int target = -1;  // var index / timer index
  Expr value;       // Assign only
};

struct FsmTransition {
  int from = -1;
  int to = -1;
  Expr guard;
  std::vector<FsmAction> actions;
  SourceSpan span;
};

struct FsmModel {
  std::string name;
  std::vector<std::string> states;
  int initial = -1;
  std::vector<FsmVar> vars;       // output signals
  std::vector<InputSpec> inputs;  // latched values and pulse events
  std::vector<ParamSpec> params;
  std::vector<FsmTimer> timers;
  std::vector<FsmTransition> transitions;

  int pulse_count() const noexcept {
    return static_cast<int>(inputs.size() + timers.size());
  }
};

// Model plus per-instance parameter values and resolved timer periods.
struct FsmContext {
  const FsmModel* model = nullptr;
  std::vector<Value> params;
  std::vector<SimTime> timer_periods;
};

struct FsmState {
  int current = -1;
  std::vector<Value> vars;
  std::vector<Value> inputs;  // latched values; pulse slots keep their init
  std::vector<std::optional<SimTime>> timers;

  friend bool operator==(const FsmState&, const FsmState&) = default;
};

inline std::vector<Diagnostic> fsm_validate(const FsmModel& m) {
  std::vector<Diagnostic> out;
  const std::string head = "fsm " + m.name;
  if (m.states.empty()) out.push_back(make_error("no states declared", {}, head));
  if (m.initial < 0 || m.initial >= static_cast<int>(m.states.size()))
    out.push_back(make_error("unknown state: initial state index out of range", {}, head));
  const int n_vars = static_cast<int>(m.vars.size());
  const int n_params = static_cast<int>(m.params.size());
  const int n_inputs = static_cast<int>(m.inputs.size());
  const int n_pulses = m.pulse_count();

  for (std::size_t i = 0; i < m.timers.size(); ++i) {
    const std::string where = head + ", timer " + m.timers[i].name;
    detail::check_expr_slots(m.timers[i].period, 0, n_params, 0, 0, 0, where, out);
  }
  for (std::size_t i = 0; i < m.transitions.size(); ++i) {
    const auto& t = m.transitions[i];
    const std::string where = head + ", transition " + std::to_string(i + 1);
    if (t.from < 0 || t.from >= static_cast<int>(m.states.size()))
      out.push_back(make_error("unknown state in transition source", t.span, where));
    if (t.to < 0 || t.to >= static_cast<int>(m.states.size()))
      out.push_back(make_error("unknown state in transition target", t.span, where));
    detail::check_expr_slots(t.guard, n_vars, n_params, n_inputs, n_pulses, 0, where, out);
    for (const auto& a : t.actions) {
      if (a.kind == FsmAction::Kind::Assign) {
        if (a.target < 0 || a.target >= n_vars)
          out.push_back(make_error("assignment to undeclared signal", t.span, where));
        detail::check_expr_slots(a.value, n_vars, n_params, n_inputs, n_pulses, 0, where, out);
      } else {
        if (a.target < 0 || a.target >= static_cast<int>(m.timers.size()))
          out.push_back(make_error("reset of undeclared timer", t.span, where));
      }
    }
  }
  return out;
}

inline FsmContext make_fsm_context(const FsmModel& m,
                                   std::span<const std::pair<std::string, double>> overrides = {}) {
  FsmContext ctx;
  ctx.model = &m;
  std::vector<ParamSpec> params = m.params;
  for (const auto& [name, value] : overrides) {
    bool found = false;
    for (auto& p : params) {
      if (p.name == name) {
        p.value = value;
        found = true;
      }
    }
    if (!found) throw ContractError("fsm " + m.name + ": no parameter named " + name);
  }
  ctx.params = params_to_values(params);
  EvalEnv env;
  env.params = ctx.params;
  for (const auto& t : m.timers) {
    const double secs = eval_real(t.period, env);
    if (!(secs > 0)) throw ContractError("fsm " + m.name + ": timer " + t.name + " period must be positive");
    ctx.timer_periods.push_back(SimTime::from_seconds(secs));
  }
  return ctx;
}

inline FsmState fsm_initial_state(const FsmContext& ctx) {
  const FsmModel& m = *ctx.model;
  FsmState s;
  s.current = m.initial;
  for (const auto& v : m.vars) s.vars.push_back(v.init);
  for (const auto& in : m.inputs) s.inputs.push_back(in.is_event ? Value() : in.init);
  s.timers.assign(m.timers.size(), std::nullopt);
  return s;
}

struct FsmStepResult {
  FsmState state;
  bool fired = false;
  std::vector<std::pair<int, Value>> assignments;  // (var index, new value) in action order
  std::vector<Event> events;                       // assignments as events, stamped `now`
};

// One reaction: latch inputs, synthesize timer expiries, fire at most one
// transition (declaration order, first true guard). Leaving a state clears
// all timers; actions then run in order and may re-arm them.
inline FsmStepResult fsm_step(const FsmContext& ctx, const FsmState& s,
                              std::span<const Event> inputs, SimTime now) {
  const FsmModel& m = *ctx.model;
  FsmStepResult r;
  r.state = s;

  PulseSet pulses(static_cast<std::size_t>(m.pulse_count()), 0);

  for (std::size_t ti = 0; ti < m.timers.size(); ++ti) {
    auto& expiry = r.state.timers[ti];
    if (expiry && now >= *expiry) {
      pulses[m.inputs.size() + ti] = 1;
      expiry.reset();
    }
  }

  for (const auto& ev : inputs) {
    int idx = -1;
    for (std::size_t i = 0; i < m.inputs.size(); ++i)
      if (m.inputs[i].name == ev.name) idx = static_cast<int>(i);
    if (idx < 0)
      throw ContractError("fsm " + m.name + ": event '" + ev.name + "' matches no declared input");
    const auto& decl = m.inputs[static_cast<std::size_t>(idx)];
    if (decl.is_event) {
      pulses[static_cast<std::size_t>(idx)] = 1;
    } else {
      Value v = ev.payload ? *ev.payload
                           : (decl.type.base == TypeRef::Base::Bool ? Value::boolean(true) : Value());
      if (!coerce_value(v, decl.type))
        throw ContractError("fsm " + m.name + ": payload of '" + ev.name + "' has the wrong type");
      r.state.inputs[static_cast<std::size_t>(idx)] = v;
    }
  }

  EvalEnv env;
  env.vars = r.state.vars;
  env.params = ctx.params;
  env.inputs = r.state.inputs;
  env.pulses = pulses;

  for (const auto& t : m.transitions) {
    if (t.from != r.state.current) continue;
    if (!eval_bool(t.guard, env)) continue;

    if (t.to != t.from)
      for (auto& timer : r.state.timers) timer.reset();

    for (const auto& a : t.actions) {
      if (a.kind == FsmAction::Kind::Assign) {
        Value v = eval(a.value, env);
        const auto& decl = m.vars[static_cast<std::size_t>(a.target)];
        if (!coerce_value(v, decl.type))
          throw ContractError("fsm " + m.name + ": assignment to " + decl.name +
                              " has the wrong type");
        r.state.vars[static_cast<std::size_t>(a.target)] = v;
        r.assignments.emplace_back(a.target, v);
      } else {
        r.state.timers[static_cast<std::size_t>(a.target)] =
            now + ctx.timer_periods[static_cast<std::size_t>(a.target)];
      }
    }
    r.state.current = t.to;
    r.fired = true;
    break;
  }

  for (const auto& [var, value] : r.assignments)
    r.events.push_back(Event{m.vars[static_cast<std::size_t>(var)].name, value, now});
  return r;
}

}  // namespace twinkernel
