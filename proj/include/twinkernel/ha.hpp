#pragma once
// Hybrid automaton executor: per-location ODE flows and invariants, guarded
// and event-triggered edges with resets and emissions, fixed-step RK4
// integration, and nanosecond-resolution bisection of urgent crossings.

#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "twinkernel/core.hpp"
#include "twinkernel/diag.hpp"
#include "twinkernel/expr.hpp"

namespace twinkernel {

struct HaVar {
  std::string name;
  double init = 0.0;
};

struct HaLocation {
  std::string name;
  std::vector<Expr> flows;  // aligned with vars; absent flows are rate 0
  std::optional<Expr> invariant;
};

struct HaEmit {
  int output = -1;
  std::optional<Expr> payload;
};

struct HaEdge {
  int from = -1;
  int to = -1;
  int trigger = -1;  // input index consumed as a pulse, or -1
  std::optional<Expr> guard;
  bool urgent = false;  // urgent trigger-less guards fire at their crossing time
  std::vector<std::pair<int, Expr>> resets;  // var := expr, applied in order
  std::vector<HaEmit> emits;
  SourceSpan span;
};

struct HaModel {
  std::string name;
  std::vector<HaVar> vars;
  std::vector<InputSpec> inputs;
  std::vector<OutputSpec> outputs;
  std::vector<ParamSpec> params;
  std::vector<HaLocation> locations;
  std::vector<HaEdge> edges;
  int initial = -1;
};

struct HaConfig {
  SimTime substep = SimTime::from_nanos(1'000'000);        // 1 ms integration step
  SimTime sample_period = SimTime::from_nanos(100'000'000); // 0.1 s trajectory samples
  int max_jumps = 1000;                                     // Zeno guard per macro step
};

struct HaContext {
  const HaModel* model = nullptr;
  std::vector<Value> params;
  HaConfig config;
};

struct HaState {
  int location = -1;
  std::vector<double> x;
  std::vector<Value> inputs;  // latched input values

  friend bool operator==(const HaState&, const HaState&) = default;
};

inline std::vector<Diagnostic> ha_validate(const HaModel& m) {
  std::vector<Diagnostic> out;
  const std::string head = "ha " + m.name;
  if (m.locations.empty()) out.push_back(make_error("no locations declared", {}, head));
  if (m.initial < 0 || m.initial >= static_cast<int>(m.locations.size()))
    out.push_back(make_error("unknown location: initial location out of range", {}, head));
  const int n_vars = static_cast<int>(m.vars.size());
  const int n_params = static_cast<int>(m.params.size());
  const int n_inputs = static_cast<int>(m.inputs.size());

  for (const auto& loc : m.locations) {
    const std::string where = head + ", location " + loc.name;
    if (loc.flows.size() != m.vars.size())
      out.push_back(make_error("flow table does not cover every variable", {}, where));
    for (const auto& f : loc.flows)
      detail::check_expr_slots(f, n_vars, n_params, n_inputs, 0, 0, where, out);
    if (loc.invariant)
      detail::check_expr_slots(*loc.invariant, n_vars, n_params, n_inputs, 0, 0, where, out);
  }
  for (std::size_t i = 0; i < m.edges.size(); ++i) {
    const auto& e = m.edges[i];
    const std::string where = head + ", edge " + std::to_string(i + 1);
    if (e.from < 0 || e.from >= static_cast<int>(m.locations.size()))
      out.push_back(make_error("unknown location in edge source", e.span, where));
    if (e.to < 0 || e.to >= static_cast<int>(m.locations.size()))
      out.push_back(make_error("unknown location in edge target", e.span, where));
    if (e.trigger >= n_inputs)
      out.push_back(make_error("unknown input in edge trigger", e.span, where));
    if (e.guard) detail::check_expr_slots(*e.guard, n_vars, n_params, n_inputs, 0, 0, where, out);
    for (const auto& [target, rhs] : e.resets) {
      if (target < 0 || target >= n_vars)
        out.push_back(make_error("reset of undeclared variable", e.span, where));
      detail::check_expr_slots(rhs, n_vars, n_params, n_inputs, 0, 0, where, out);
    }
    for (const auto& em : e.emits)
      if (em.output < 0 || em.output >= static_cast<int>(m.outputs.size()))
        out.push_back(make_error("unknown output in emit", e.span, where));
  }
  return out;
}

inline HaContext make_ha_context(const HaModel& m,
                                 std::span<const std::pair<std::string, double>> overrides = {},
                                 HaConfig config = {}) {
  HaContext ctx;
  ctx.model = &m;
  ctx.config = config;
  std::vector<ParamSpec> params = m.params;
  for (const auto& [name, value] : overrides) {
    bool found = false;
    for (auto& p : params) {
      if (p.name == name) {
        p.value = value;
        found = true;
      }
    }
    if (!found) throw ContractError("ha " + m.name + ": no parameter named " + name);
  }
  ctx.params = params_to_values(params);
  return ctx;
}

inline HaState ha_initial_state(const HaContext& ctx) {
  const HaModel& m = *ctx.model;
  HaState s;
  s.location = m.initial;
  for (const auto& v : m.vars) s.x.push_back(v.init);
  for (const auto& in : m.inputs) s.inputs.push_back(in.is_event ? Value() : in.init);
  return s;
}

namespace detail {

inline EvalEnv ha_env(const HaContext& ctx, std::span<const double> x,
                      std::span<const Value> inputs) {
  EvalEnv env;
  env.vars_real = x;
  env.params = ctx.params;
  env.inputs = inputs;
  return env;
}

inline void ha_rhs(const HaContext& ctx, const HaLocation& loc, std::span<const double> x,
                   std::span<const Value> inputs, std::vector<double>& dx) {
  const EvalEnv env = ha_env(ctx, x, inputs);
  dx.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) dx[i] = eval_real(loc.flows[i], env);
}

}  // namespace detail

// One classical 4th-order Runge-Kutta step of size h seconds in the current
// location. No guard or invariant processing.
inline HaState integrate_step(const HaContext& ctx, const HaState& s, double h) {
  if (!(h > 0)) throw ContractError("integrate_step: step size must be positive");
  const HaLocation& loc = ctx.model->locations[static_cast<std::size_t>(s.location)];
  const std::size_t n = s.x.size();

  std::vector<double> k1, k2, k3, k4, stage(n);
  detail::ha_rhs(ctx, loc, s.x, s.inputs, k1);
  for (std::size_t i = 0; i < n; ++i) stage[i] = s.x[i] + 0.5 * h * k1[i];
  detail::ha_rhs(ctx, loc, stage, s.inputs, k2);
  for (std::size_t i = 0; i < n; ++i) stage[i] = s.x[i] + 0.5 * h * k2[i];
  detail::ha_rhs(ctx, loc, stage, s.inputs, k3);
  for (std::size_t i = 0; i < n; ++i) stage[i] = s.x[i] + h * k3[i];
  detail::ha_rhs(ctx, loc, stage, s.inputs, k4);

  HaState out = s;
  for (std::size_t i = 0; i < n; ++i) {
    out.x[i] = s.x[i] + h / 6.0 * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]);
    if (!std::isfinite(out.x[i]))
      throw NumericDivergenceError("ha " + ctx.model->name + ": variable " +
                                   ctx.model->vars[i].name + " diverged");
  }
  return out;
}

using HaPredicate = std::function<bool(const HaState&)>;

namespace detail {

// Integrates from `base` for `offset` relative nanoseconds (single RK4 step;
// our crossing refinement always re-integrates from the sub-step start).
inline HaState ha_at_offset(const HaContext& ctx, const HaState& base, SimTime offset) {
  if (offset.nanos == 0) return base;
  return integrate_step(ctx, base, static_cast<double>(offset.nanos) * 1e-9);
}

}  // namespace detail

// Earliest time in (0, window] at which `pred` becomes true, refined by
// bisection to a one-nanosecond bracket; nullopt if it stays false. The
// predicate must be false at `s` — a predicate that is already true (or that
// oscillates faster than the integration sub-step) cannot be located soundly
// and raises AmbiguityError.
inline std::optional<SimTime> locate_crossing(const HaContext& ctx, const HaState& s,
                                              const HaPredicate& pred, SimTime window) {
  if (pred(s))
    throw AmbiguityError("ha " + ctx.model->name +
                         ": crossing predicate already true at the window start");
  SimTime base_t = SimTime::zero();
  HaState base = s;
  while (base_t < window) {
    const SimTime win = std::min(ctx.config.substep, window - base_t);
    const HaState end = detail::ha_at_offset(ctx, base, win);
    if (pred(end)) {
      // first true nanosecond within (base_t, base_t + win]
      std::int64_t lo = 0, hi = win.nanos;
      while (hi - lo > 1) {
        const std::int64_t mid = lo + (hi - lo) / 2;
        if (pred(detail::ha_at_offset(ctx, base, SimTime::from_nanos(mid))))
          hi = mid;
        else
          lo = mid;
      }
      return base_t + SimTime::from_nanos(hi);
    }
    base = end;
    base_t = base_t + win;
  }
  return std::nullopt;
}

// State reached from `s` after `offset` within the current location, evaluated
// exactly as the crossing search evaluates probe points: whole sub-steps, then
// one step of the remainder.
inline HaState ha_state_at(const HaContext& ctx, HaState s, SimTime offset) {
  SimTime done = SimTime::zero();
  while (done + ctx.config.substep <= offset) {
    s = integrate_step(ctx, s, static_cast<double>(ctx.config.substep.nanos) * 1e-9);
    done = done + ctx.config.substep;
  }
  if (done < offset)
    s = integrate_step(ctx, s, static_cast<double>((offset - done).nanos) * 1e-9);
  return s;
}

struct HaAdvanceResult {
  HaState state;
  std::vector<Event> emitted;  // stamped at their crossing/processing instant
  std::vector<std::pair<SimTime, int>> location_changes;
  std::vector<std::pair<SimTime, std::vector<double>>> samples;
  int jumps = 0;
};

// Advances one macro step [t0, t0 + delta]. Event-triggered and enabled edges
// are processed at the step start; during integration, urgent guards and
// invariant violations commit at their bisected crossing time, after which
// discrete processing resumes at that instant. delta == 0 runs the discrete
// micro phase only.
inline HaAdvanceResult ha_advance(const HaContext& ctx, const HaState& s,
                                  std::span<const Event> inputs, SimTime t0, SimTime delta) {
  const HaModel& m = *ctx.model;
  HaAdvanceResult r;
  r.state = s;

  std::vector<int> pulse_count(m.inputs.size(), 0);
  for (const auto& ev : inputs) {
    int idx = -1;
    for (std::size_t i = 0; i < m.inputs.size(); ++i)
      if (m.inputs[i].name == ev.name) idx = static_cast<int>(i);
    if (idx < 0)
      throw ContractError("ha " + m.name + ": event '" + ev.name + "' matches no declared input");
    const auto& decl = m.inputs[static_cast<std::size_t>(idx)];
    pulse_count[static_cast<std::size_t>(idx)] += 1;
    if (!decl.is_event) {
      Value v = ev.payload ? *ev.payload
                           : (decl.type.base == TypeRef::Base::Bool ? Value::boolean(true) : Value());
      if (!coerce_value(v, decl.type))
        throw ContractError("ha " + m.name + ": payload of '" + ev.name + "' has the wrong type");
      r.state.inputs[static_cast<std::size_t>(idx)] = v;
    }
  }

  auto guard_true = [&](const HaEdge& e, const HaState& st) {
    if (!e.guard) return true;
    return eval_bool(*e.guard, detail::ha_env(ctx, st.x, st.inputs));
  };

  // Fires chains of enabled edges at one instant. Pulses are only available
  // in the step-start phase; they die once integration begins.
  auto discrete_phase = [&](SimTime at, bool pulses_live) {
    int fired_here = 0;
    while (true) {
      const HaEdge* chosen = nullptr;
      for (const auto& e : m.edges) {
        if (e.from != r.state.location) continue;
        if (e.trigger >= 0) {
          if (!pulses_live || pulse_count[static_cast<std::size_t>(e.trigger)] <= 0) continue;
        }
        if (!guard_true(e, r.state)) continue;
        chosen = &e;
        break;
      }
      if (!chosen) break;
      if (chosen->trigger >= 0) pulse_count[static_cast<std::size_t>(chosen->trigger)] -= 1;
      for (const auto& [target, rhs] : chosen->resets) {
        const double v = eval_real(rhs, detail::ha_env(ctx, r.state.x, r.state.inputs));
        r.state.x[static_cast<std::size_t>(target)] = v;
      }
      for (const auto& em : chosen->emits) {
        std::optional<Value> payload;
        if (em.payload)
          payload = eval(*em.payload, detail::ha_env(ctx, r.state.x, r.state.inputs));
        r.emitted.push_back(Event{m.outputs[static_cast<std::size_t>(em.output)].name, payload, at});
      }
      r.state.location = chosen->to;
      r.location_changes.emplace_back(at, chosen->to);
      ++fired_here;
      if (++r.jumps > ctx.config.max_jumps)
        throw ZenoError("ha " + m.name + ": more than " + std::to_string(ctx.config.max_jumps) +
                        " discrete transitions in one macro step (Zeno behaviour?)");
    }
    return fired_here;
  };

  discrete_phase(t0, true);

  SimTime consumed = SimTime::zero();
  while (consumed < delta) {
    const auto& loc = m.locations[static_cast<std::size_t>(r.state.location)];
    const EvalEnv here = detail::ha_env(ctx, r.state.x, r.state.inputs);
    const bool inv_ok = !loc.invariant || eval_bool(*loc.invariant, here);

    const SimTime win = std::min(ctx.config.substep, delta - consumed);
    const HaState tried = integrate_step(ctx, r.state, static_cast<double>(win.nanos) * 1e-9);

    // Candidate crossings: urgent trigger-less guards and the invariant
    // boundary, each refined to the earliest true nanosecond.
    std::optional<SimTime> earliest;
    bool invariant_cause = false;
    auto consider = [&](const HaPredicate& pred, bool is_inv) {
      if (pred(r.state) || !pred(tried)) return;
      std::int64_t lo = 0, hi = win.nanos;
      while (hi - lo > 1) {
        const std::int64_t mid = lo + (hi - lo) / 2;
        if (pred(detail::ha_at_offset(ctx, r.state, SimTime::from_nanos(mid))))
          hi = mid;
        else
          lo = mid;
      }
      const SimTime t_star = SimTime::from_nanos(hi);
      if (!earliest || t_star < *earliest) {
        earliest = t_star;
        invariant_cause = is_inv;
      } else if (t_star == *earliest && is_inv) {
        invariant_cause = true;
      }
    };

    for (const auto& e : m.edges) {
      if (e.from != r.state.location || e.trigger >= 0 || !e.urgent || !e.guard) continue;
      consider([&](const HaState& st) {
        return eval_bool(*e.guard, detail::ha_env(ctx, st.x, st.inputs));
      }, false);
    }
    if (loc.invariant && inv_ok) {
      consider([&](const HaState& st) {
        return !eval_bool(*loc.invariant, detail::ha_env(ctx, st.x, st.inputs));
      }, true);
    }
    if (!inv_ok) {
      // Entered only if a committed crossing state sits a nanosecond past the
      // boundary and no edge is enabled there; integrating further away from
      // the invariant is a model error.
      const HaPredicate inv_pred = [&](const HaState& st) {
        return eval_bool(*loc.invariant, detail::ha_env(ctx, st.x, st.inputs));
      };
      if (!inv_pred(tried))
        throw InvariantViolationError("ha " + m.name + ": invariant of location " + loc.name +
                                      " violated with no enabled edge");
    }

    if (earliest) {
      r.state = detail::ha_at_offset(ctx, r.state, *earliest);
      consumed = consumed + *earliest;
      const int fired = discrete_phase(t0 + consumed, false);
      if (fired == 0 && invariant_cause)
        throw InvariantViolationError("ha " + m.name + ": invariant of location " + loc.name +
                                      " violated with no enabled edge");
    } else {
      r.state = tried;
      consumed = consumed + win;
    }
  }

  if (delta.nanos > 0 && ctx.config.sample_period.nanos > 0) {
    const SimTime end = t0 + delta;
    if (end.nanos % ctx.config.sample_period.nanos == 0) r.samples.emplace_back(end, r.state.x);
  }
  return r;
}

}  // namespace twinkernel
