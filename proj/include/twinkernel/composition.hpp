#pragma once
// Digital-twin runtime: model instances composed into DTCs (synchronous macro
// steps with an intra-step micro phase) and DTCs composed over asynchronous
// FIFO channels with integer macro-step latency — the GALS layer.

#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "twinkernel/core.hpp"
#include "twinkernel/cpn.hpp"
#include "twinkernel/fsm.hpp"
#include "twinkernel/ha.hpp"

namespace twinkernel {

enum class ModelKind : std::uint8_t { Fsm, Cpn, Ha };

struct InstanceSpec {
  std::string id;
  ModelKind kind = ModelKind::Fsm;
  int model = -1;  // index into the owning ModelSet's per-kind vector
  std::vector<std::pair<std::string, double>> param_overrides;
};

struct WireSpec {
  int from_instance = -1;
  std::string from_name;
  int to_instance = -1;
  std::string to_name;
};

struct PortSpec {
  std::string name;
  std::vector<std::pair<int, std::string>> endpoints;  // (instance, input/output name)
};

struct DtcSpec {
  std::string name;
  std::vector<InstanceSpec> instances;
  std::vector<WireSpec> wires;
  std::vector<PortSpec> inputs;
  std::vector<PortSpec> outputs;

  int instance_index(std::string_view id) const {
    for (std::size_t i = 0; i < instances.size(); ++i)
      if (instances[i].id == id) return static_cast<int>(i);
    return -1;
  }
};

struct ComponentSpec {
  std::string id;
  int dtc = -1;
  std::vector<std::pair<std::string, double>> overrides;  // "instance.param"
};

struct ChannelSpec {
  std::string id;
  int from_component = -1;
  std::string from_port;
  int to_component = -1;
  std::string to_port;
  int latency = 1;  // macro steps, >= 1
};

struct StimulusSpec {
  SimTime at;
  int component = -1;
  std::string port;
  std::optional<Value> payload;
};

struct SystemConfig {
  SimTime step = SimTime::from_nanos(10'000'000);           // 0.01 s
  SimTime horizon = SimTime::zero();
  SimTime sample = SimTime::from_nanos(100'000'000);        // 0.1 s
  SimTime substep = SimTime::from_nanos(1'000'000);         // 1 ms
  int max_micro_iters = 64;    // intra-DTC micro phase
  int max_firings = 4096;      // per-CPN firings per macro step
  int max_jumps = 1000;        // per-HA jumps per macro step
};

struct SystemSpec {
  std::string name;
  std::vector<ComponentSpec> components;
  std::vector<ChannelSpec> channels;
  std::vector<StimulusSpec> stimuli;
  SystemConfig config;
};

struct ModelSet {
  std::vector<ColorSet> colorsets;
  std::vector<FsmModel> fsms;
  std::vector<CpnNet> cpns;
  std::vector<HaModel> has;
  std::vector<DtcSpec> dtcs;
  std::vector<SystemSpec> systems;

  int find_fsm(std::string_view n) const {
    for (std::size_t i = 0; i < fsms.size(); ++i)
      if (fsms[i].name == n) return static_cast<int>(i);
    return -1;
  }
  int find_cpn(std::string_view n) const {
    for (std::size_t i = 0; i < cpns.size(); ++i)
      if (cpns[i].name == n) return static_cast<int>(i);
    return -1;
  }
  int find_ha(std::string_view n) const {
    for (std::size_t i = 0; i < has.size(); ++i)
      if (has[i].name == n) return static_cast<int>(i);
    return -1;
  }
  int find_dtc(std::string_view n) const {
    for (std::size_t i = 0; i < dtcs.size(); ++i)
      if (dtcs[i].name == n) return static_cast<int>(i);
    return -1;
  }
  int find_system(std::string_view n) const {
    for (std::size_t i = 0; i < systems.size(); ++i)
      if (systems[i].name == n) return static_cast<int>(i);
    return -1;
  }
};

// Sets the default value of "model.param" across every model kind. Returns
// false when no such parameter exists.
inline bool set_model_param(ModelSet& set, std::string_view path, double value) {
  const auto dot = path.find('.');
  if (dot == std::string_view::npos) return false;
  const std::string_view model = path.substr(0, dot);
  const std::string_view param = path.substr(dot + 1);
  auto patch = [&](auto& models) {
    for (auto& m : models) {
      if (m.name != model) continue;
      for (auto& p : m.params) {
        if (p.name == param) {
          p.value = value;
          return true;
        }
      }
    }
    return false;
  };
  return patch(set.fsms) || patch(set.cpns) || patch(set.has);
}

// ---------------------------------------------------------------------------
// Compiled per-DTC runtime

using InstanceState = std::variant<FsmState, CpnState, HaState>;

struct DtcState {
  std::vector<InstanceState> instances;
};

namespace detail {

struct RouteTarget {
  int instance = -1;   // internal consumer, or -1 for an external port
  std::string name;    // consumer input name / port name
};

}  // namespace detail

class DtcRuntime {
 public:
  DtcRuntime(const ModelSet& set, const DtcSpec& spec, std::string component_id,
             const SystemConfig& config,
             std::span<const std::pair<std::string, double>> overrides = {}) {
    spec_ = &spec;
    id_ = std::move(component_id);
    config_ = config;

    for (const auto& inst : spec.instances) {
      std::vector<std::pair<std::string, double>> merged = inst.param_overrides;
      const std::string prefix = inst.id + ".";
      for (const auto& [path, value] : overrides) {
        if (path.rfind(prefix, 0) == 0) merged.emplace_back(path.substr(prefix.size()), value);
      }
      switch (inst.kind) {
        case ModelKind::Fsm:
          fsm_.push_back(make_fsm_context(set.fsms[static_cast<std::size_t>(inst.model)], merged));
          slots_.emplace_back(inst.kind, static_cast<int>(fsm_.size()) - 1);
          break;
        case ModelKind::Cpn: {
          auto ctx = make_cpn_context(set.cpns[static_cast<std::size_t>(inst.model)], merged);
          ctx.max_micro_iters = config.max_firings;
          cpn_.push_back(std::move(ctx));
          slots_.emplace_back(inst.kind, static_cast<int>(cpn_.size()) - 1);
          break;
        }
        case ModelKind::Ha: {
          HaConfig hc;
          hc.substep = config.substep;
          hc.sample_period = config.sample;
          hc.max_jumps = config.max_jumps;
          ha_.push_back(make_ha_context(set.has[static_cast<std::size_t>(inst.model)], merged, hc));
          slots_.emplace_back(inst.kind, static_cast<int>(ha_.size()) - 1);
          break;
        }
      }
    }

    for (const auto& w : spec.wires)
      routes_[{w.from_instance, w.from_name}].push_back({w.to_instance, w.to_name});
    for (const auto& p : spec.outputs)
      routes_[{p.endpoints.front().first, p.endpoints.front().second}].push_back({-1, p.name});
    for (const auto& p : spec.inputs)
      for (const auto& [inst, name] : p.endpoints) port_targets_[p.name].push_back({inst, name});
  }

  const DtcSpec& spec() const { return *spec_; }
  const std::string& id() const { return id_; }
  const SystemConfig& config() const { return config_; }

  std::string source_of(int instance) const {
    return id_ + "." + spec_->instances[static_cast<std::size_t>(instance)].id;
  }

  ModelKind kind_of(int instance) const { return slots_[static_cast<std::size_t>(instance)].first; }

  const FsmContext& fsm_ctx(int instance) const {
    return fsm_[static_cast<std::size_t>(slots_[static_cast<std::size_t>(instance)].second)];
  }
  const CpnContext& cpn_ctx(int instance) const {
    return cpn_[static_cast<std::size_t>(slots_[static_cast<std::size_t>(instance)].second)];
  }
  const HaContext& ha_ctx(int instance) const {
    return ha_[static_cast<std::size_t>(slots_[static_cast<std::size_t>(instance)].second)];
  }

  DtcState initial_state() const {
    DtcState s;
    for (std::size_t i = 0; i < slots_.size(); ++i) {
      switch (slots_[i].first) {
        case ModelKind::Fsm: s.instances.emplace_back(fsm_initial_state(fsm_ctx(static_cast<int>(i)))); break;
        case ModelKind::Cpn: s.instances.emplace_back(cpn_initial_state(cpn_ctx(static_cast<int>(i)))); break;
        case ModelKind::Ha: s.instances.emplace_back(ha_initial_state(ha_ctx(static_cast<int>(i)))); break;
      }
    }
    return s;
  }

  const std::vector<detail::RouteTarget>* routes_from(int instance, const std::string& name) const {
    const auto it = routes_.find({instance, name});
    return it == routes_.end() ? nullptr : &it->second;
  }
  const std::vector<detail::RouteTarget>* port_route(const std::string& port) const {
    const auto it = port_targets_.find(port);
    return it == port_targets_.end() ? nullptr : &it->second;
  }

 private:
  const DtcSpec* spec_ = nullptr;
  std::string id_;
  SystemConfig config_;
  std::vector<std::pair<ModelKind, int>> slots_;
  std::vector<FsmContext> fsm_;
  std::vector<CpnContext> cpn_;
  std::vector<HaContext> ha_;
  std::map<std::pair<int, std::string>, std::vector<detail::RouteTarget>> routes_;
  std::map<std::string, std::vector<detail::RouteTarget>> port_targets_;
};

struct DtcStepResult {
  std::vector<Event> outputs;        // events on external output ports
  std::vector<TraceRecord> records;  // uncoalesced, production order
};

// One synchronous macro step of a DTC over [t, t + delta]. Phase A integrates
// the hybrid instances; phase B micro-iterates the discrete instances until
// global quiescence, with every wired event visible within this same step.
// Phase-B events aimed at a hybrid instance are processed by a discrete-only
// advance at the step end.
inline DtcStepResult dtc_macro_step(const DtcRuntime& rt, DtcState& state,
                                    std::span<const Event> port_inputs, SimTime t, SimTime delta) {
  const DtcSpec& spec = rt.spec();
  const std::size_t n = spec.instances.size();
  DtcStepResult result;

  std::vector<std::vector<Event>> pool(n);
  for (const auto& ev : port_inputs) {
    const auto* targets = rt.port_route(ev.name);
    if (!targets)
      throw ContractError("dtc " + rt.id() + ": no input port named '" + ev.name + "'");
    for (const auto& tgt : *targets)
      pool[static_cast<std::size_t>(tgt.instance)].push_back(Event{tgt.name, ev.payload, t});
  }

  auto route_events = [&](int producer, std::span<const Event> events,
                          std::vector<std::vector<Event>>& into, bool* any_internal) {
    for (const auto& ev : events) {
      const auto* targets = rt.routes_from(producer, ev.name);
      if (!targets) continue;
      for (const auto& tgt : *targets) {
        if (tgt.instance < 0) {
          result.outputs.push_back(Event{tgt.name, ev.payload, ev.stamp});
        } else {
          into[static_cast<std::size_t>(tgt.instance)].push_back(
              Event{tgt.name, ev.payload, ev.stamp});
          if (any_internal) *any_internal = true;
        }
      }
    }
  };

  // Phase A: hybrid instances integrate over the whole step.
  for (std::size_t i = 0; i < n; ++i) {
    if (rt.kind_of(static_cast<int>(i)) != ModelKind::Ha) continue;
    const auto& ctx = rt.ha_ctx(static_cast<int>(i));
    auto& st = std::get<HaState>(state.instances[i]);
    const auto adv = ha_advance(ctx, st, pool[i], t, delta);
    pool[i].clear();
    st = adv.state;
    const std::string source = rt.source_of(static_cast<int>(i));
    for (const auto& [at, loc] : adv.location_changes)
      result.records.push_back(TraceRecord{
          at, source, RecordKind::Location, "location",
          Value::label(ctx.model->locations[static_cast<std::size_t>(loc)].name), ""});
    for (const auto& [at, xs] : adv.samples)
      for (std::size_t v = 0; v < xs.size(); ++v)
        result.records.push_back(TraceRecord{at, source, RecordKind::Signal,
                                             ctx.model->vars[v].name, Value::real(xs[v]), ""});
    for (const auto& ev : adv.emitted)
      result.records.push_back(
          TraceRecord{ev.stamp, source, RecordKind::Event, ev.name,
                      ev.payload ? *ev.payload : Value::boolean(true), ""});
    route_events(static_cast<int>(i), adv.emitted, pool, nullptr);
  }

  // Phase B: discrete micro phase to global quiescence.
  std::vector<Marking> marking_before(n);
  for (std::size_t i = 0; i < n; ++i)
    if (rt.kind_of(static_cast<int>(i)) == ModelKind::Cpn)
      marking_before[i] = std::get<CpnState>(state.instances[i]).marking;

  int iter = 0;
  bool first_round = true;
  std::string cycling;  // instances that progressed in the latest iteration
  while (true) {
    if (++iter > rt.config().max_micro_iters)
      throw CausalityError("dtc " + rt.id() + ": micro phase did not converge after " +
                           std::to_string(rt.config().max_micro_iters) +
                           " iterations (instances: " + cycling + ")");
    bool progress = false;
    cycling.clear();
    auto note_progress = [&](std::size_t i) {
      progress = true;
      if (!cycling.empty()) cycling += ", ";
      cycling += spec.instances[i].id;
    };
    std::vector<std::vector<Event>> next_pool(n);
    for (std::size_t i = 0; i < n; ++i) {
      const int inst = static_cast<int>(i);
      switch (rt.kind_of(inst)) {
        case ModelKind::Fsm: {
          const auto& ctx = rt.fsm_ctx(inst);
          auto& st = std::get<FsmState>(state.instances[i]);
          const auto r = fsm_step(ctx, st, pool[i], t);
          st = r.state;
          if (r.fired) {
            note_progress(i);
            const std::string source = rt.source_of(inst);
            result.records.push_back(TraceRecord{
                t, source, RecordKind::Location, "location",
                Value::label(ctx.model->states[static_cast<std::size_t>(st.current)]), ""});
            for (const auto& [var, value] : r.assignments)
              result.records.push_back(TraceRecord{
                  t, source, RecordKind::Signal,
                  ctx.model->vars[static_cast<std::size_t>(var)].name, value, ""});
            route_events(inst, r.events, next_pool, nullptr);
          }
          break;
        }
        case ModelKind::Cpn: {
          if (pool[i].empty() && !first_round) break;
          const auto& ctx = rt.cpn_ctx(inst);
          auto& st = std::get<CpnState>(state.instances[i]);
          const auto r = cpn_step(ctx, st, pool[i], t);
          if (r.firings > 0) {
            note_progress(i);
            const std::string source = rt.source_of(inst);
            for (const auto& ev : r.emitted)
              result.records.push_back(
                  TraceRecord{ev.stamp, source, RecordKind::Event, ev.name,
                              ev.payload ? *ev.payload : Value::boolean(true), ""});
            route_events(inst, r.emitted, next_pool, nullptr);
          }
          break;
        }
        case ModelKind::Ha: {
          if (pool[i].empty()) break;
          // Events produced inside this step for a hybrid consumer: discrete
          // processing only, at the step end.
          const auto& ctx = rt.ha_ctx(inst);
          auto& st = std::get<HaState>(state.instances[i]);
          const auto adv = ha_advance(ctx, st, pool[i], t + delta, SimTime::zero());
          st = adv.state;
          if (!adv.location_changes.empty() || !adv.emitted.empty()) note_progress(i);
          const std::string source = rt.source_of(inst);
          for (const auto& [at, loc] : adv.location_changes)
            result.records.push_back(TraceRecord{
                at, source, RecordKind::Location, "location",
                Value::label(ctx.model->locations[static_cast<std::size_t>(loc)].name), ""});
          for (const auto& ev : adv.emitted)
            result.records.push_back(
                TraceRecord{ev.stamp, source, RecordKind::Event, ev.name,
                            ev.payload ? *ev.payload : Value::boolean(true), ""});
          route_events(inst, adv.emitted, next_pool, nullptr);
          break;
        }
      }
      pool[i].clear();
    }
    first_round = false;
    pool = std::move(next_pool);
    bool pending = false;
    for (const auto& p : pool) pending |= !p.empty();
    if (!progress && !pending) break;
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (rt.kind_of(static_cast<int>(i)) != ModelKind::Cpn) continue;
    const auto& st = std::get<CpnState>(state.instances[i]);
    if (!(st.marking == marking_before[i]))
      result.records.push_back(TraceRecord{t, rt.source_of(static_cast<int>(i)),
                                           RecordKind::Marking, "marking", Value(),
                                           serialize_marking(*rt.cpn_ctx(static_cast<int>(i)).net,
                                                             st.marking)});
  }
  return result;
}

// ---------------------------------------------------------------------------
// Channels

struct ChannelQueue {
  const ChannelSpec* spec = nullptr;
  std::deque<std::pair<std::int64_t, Event>> queue;  // (delivery step, event)
};

// Dequeues exactly the messages due at `step`, grouped per destination DTC.
// Order: channel declaration order, FIFO within a channel.
inline std::vector<std::vector<Event>> channel_deliver(std::span<ChannelQueue> channels,
                                                       std::int64_t step, std::size_t n_components) {
  std::vector<std::vector<Event>> batches(n_components);
  for (auto& ch : channels) {
    while (!ch.queue.empty() && ch.queue.front().first == step) {
      Event ev = std::move(ch.queue.front().second);
      ch.queue.pop_front();
      ev.name = ch.spec->to_port;
      batches[static_cast<std::size_t>(ch.spec->to_component)].push_back(std::move(ev));
    }
  }
  return batches;
}

// ---------------------------------------------------------------------------
// System engine

class SystemEngine {
 public:
  SystemEngine(const ModelSet& set, const SystemSpec& sys) : set_(&set), sys_(&sys) {
    if (sys.config.step.nanos <= 0) throw ContractError("system " + sys.name + ": step must be > 0");
    if (sys.config.horizon.nanos <= 0)
      throw ContractError("system " + sys.name + ": empty horizon");
    for (const auto& comp : sys.components) {
      runtimes_.push_back(std::make_unique<DtcRuntime>(
          set, set.dtcs[static_cast<std::size_t>(comp.dtc)], comp.id, sys.config, comp.overrides));
      states_.push_back(runtimes_.back()->initial_state());
    }
    // deterministic scheduling order: components by id
    for (std::size_t i = 0; i < runtimes_.size(); ++i) order_.push_back(static_cast<int>(i));
    std::sort(order_.begin(), order_.end(), [&](int a, int b) {
      return sys.components[static_cast<std::size_t>(a)].id <
             sys.components[static_cast<std::size_t>(b)].id;
    });
    for (const auto& ch : sys.channels) channels_.push_back(ChannelQueue{&ch, {}});
    // cross-channel delivery order is channel id order
    std::sort(channels_.begin(), channels_.end(), [](const ChannelQueue& a, const ChannelQueue& b) {
      return a.spec->id < b.spec->id;
    });

    stimuli_ = sys.stimuli;
    std::stable_sort(stimuli_.begin(), stimuli_.end(),
                     [](const StimulusSpec& a, const StimulusSpec& b) { return a.at < b.at; });

    total_steps_ = sys.config.horizon.nanos / sys.config.step.nanos;
    if (total_steps_ * sys.config.step.nanos != sys.config.horizon.nanos)
      throw ContractError("system " + sys.name + ": horizon must be a multiple of the step");

    emit_initial_records();
  }

  struct StepReport {
    std::int64_t step = 0;
    SimTime t;
    std::vector<std::vector<Event>> delivered;  // per component (declaration order)
    std::vector<std::vector<Event>> outputs;
  };

  bool done() const { return step_ >= total_steps_; }
  std::int64_t step_index() const { return step_; }
  SimTime now() const { return SimTime::from_nanos(step_ * sys_->config.step.nanos); }

  StepReport step() {
    if (done()) throw ContractError("system " + sys_->name + ": horizon reached");
    const SimTime t = now();
    StepReport report;
    report.step = step_;
    report.t = t;
    report.delivered = channel_deliver(channels_, step_, runtimes_.size());
    report.outputs.resize(runtimes_.size());

    while (next_stimulus_ < stimuli_.size() &&
           stimulus_step(stimuli_[next_stimulus_]) == step_) {
      const auto& st = stimuli_[next_stimulus_];
      report.delivered[static_cast<std::size_t>(st.component)].push_back(
          Event{st.port, st.payload, t});
      ++next_stimulus_;
    }

    records_.push_back(
        TraceRecord{t, "system", RecordKind::Event, "step", Value::integer(step_), ""});

    for (const int ci : order_) {
      const auto& rt = *runtimes_[static_cast<std::size_t>(ci)];
      DtcStepResult r;
      auto where = [&] { return "step " + std::to_string(step_) + ", dtc " + rt.id() + ": "; };
      try {
        r = dtc_macro_step(rt, states_[static_cast<std::size_t>(ci)],
                           report.delivered[static_cast<std::size_t>(ci)], t, sys_->config.step);
      } catch (const ZenoError& e) {
        throw ZenoError(where() + e.what());
      } catch (const NonQuiescenceError& e) {
        throw NonQuiescenceError(where() + e.what());
      } catch (const CausalityError& e) {
        throw CausalityError(where() + e.what());
      } catch (const KernelError& e) {
        throw KernelError(where() + e.what());
      }
      for (auto& rec : r.records) records_.push_back(std::move(rec));
      for (const auto& ev : r.outputs) {
        records_.push_back(TraceRecord{ev.stamp, rt.id(), RecordKind::Event, ev.name,
                                       ev.payload ? *ev.payload : Value::boolean(true), ""});
        for (auto& ch : channels_) {
          if (ch.spec->from_component == ci && ch.spec->from_port == ev.name)
            ch.queue.emplace_back(step_ + ch.spec->latency, ev);
        }
        report.outputs[static_cast<std::size_t>(ci)].push_back(ev);
      }
    }
    ++step_;
    return report;
  }

  void run() {
    while (!done()) step();
  }

  // Coalesces records per (t, source, name) keeping the last produced, then
  // sorts by the canonical key. The result is the run's canonical trace.
  Trace finish() const {
    std::map<std::string, std::size_t> last;
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < records_.size(); ++i) {
      const auto& r = records_[i];
      const std::string key =
          format_int(r.t.nanos) + "\x01" + r.source + "\x01" + r.name;
      const auto it = last.find(key);
      if (it == last.end()) {
        last.emplace(key, keep.size());
        keep.push_back(i);
      } else {
        keep[it->second] = i;
      }
    }
    Trace tr;
    tr.records.reserve(keep.size());
    for (const std::size_t i : keep) tr.records.push_back(records_[i]);
    std::stable_sort(tr.records.begin(), tr.records.end(), record_key_less);
    return tr;
  }

  const DtcState& component_state(int component) const {
    return states_[static_cast<std::size_t>(component)];
  }
  const DtcRuntime& component_runtime(int component) const {
    return *runtimes_[static_cast<std::size_t>(component)];
  }

  // Convenience for tests: the marking of a CPN instance addressed by ids.
  const Marking* find_marking(std::string_view component, std::string_view instance) const {
    for (std::size_t c = 0; c < runtimes_.size(); ++c) {
      if (sys_->components[c].id != component) continue;
      const auto& spec = runtimes_[c]->spec();
      const int i = spec.instance_index(instance);
      if (i < 0) return nullptr;
      if (const auto* st = std::get_if<CpnState>(&states_[c].instances[static_cast<std::size_t>(i)]))
        return &st->marking;
    }
    return nullptr;
  }
  const HaState* find_ha_state(std::string_view component, std::string_view instance) const {
    for (std::size_t c = 0; c < runtimes_.size(); ++c) {
      if (sys_->components[c].id != component) continue;
      const int i = runtimes_[c]->spec().instance_index(instance);
      if (i < 0) return nullptr;
      return std::get_if<HaState>(&states_[c].instances[static_cast<std::size_t>(i)]);
    }
    return nullptr;
  }

 private:
  std::int64_t stimulus_step(const StimulusSpec& st) const {
    return st.at.nanos / sys_->config.step.nanos;
  }

  void emit_initial_records() {
    const SimTime t0 = SimTime::zero();
    for (std::size_t c = 0; c < runtimes_.size(); ++c) {
      const auto& rt = *runtimes_[c];
      for (std::size_t i = 0; i < rt.spec().instances.size(); ++i) {
        const int inst = static_cast<int>(i);
        const std::string source = rt.source_of(inst);
        switch (rt.kind_of(inst)) {
          case ModelKind::Fsm: {
            const auto& ctx = rt.fsm_ctx(inst);
            const auto& st = std::get<FsmState>(states_[c].instances[i]);
            records_.push_back(TraceRecord{
                t0, source, RecordKind::Location, "location",
                Value::label(ctx.model->states[static_cast<std::size_t>(st.current)]), ""});
            for (std::size_t v = 0; v < ctx.model->vars.size(); ++v)
              records_.push_back(TraceRecord{t0, source, RecordKind::Signal,
                                             ctx.model->vars[v].name, st.vars[v], ""});
            break;
          }
          case ModelKind::Cpn: {
            const auto& ctx = rt.cpn_ctx(inst);
            const auto& st = std::get<CpnState>(states_[c].instances[i]);
            records_.push_back(TraceRecord{t0, source, RecordKind::Marking, "marking", Value(),
                                           serialize_marking(*ctx.net, st.marking)});
            break;
          }
          case ModelKind::Ha: {
            const auto& ctx = rt.ha_ctx(inst);
            const auto& st = std::get<HaState>(states_[c].instances[i]);
            records_.push_back(TraceRecord{
                t0, source, RecordKind::Location, "location",
                Value::label(ctx.model->locations[static_cast<std::size_t>(st.location)].name),
                ""});
            for (std::size_t v = 0; v < ctx.model->vars.size(); ++v)
              records_.push_back(TraceRecord{t0, source, RecordKind::Signal,
                                             ctx.model->vars[v].name, Value::real(st.x[v]), ""});
            break;
          }
        }
      }
    }
  }

  const ModelSet* set_;
  const SystemSpec* sys_;
  std::vector<std::unique_ptr<DtcRuntime>> runtimes_;
  std::vector<DtcState> states_;
  std::vector<int> order_;
  std::vector<ChannelQueue> channels_;
  std::vector<StimulusSpec> stimuli_;
  std::vector<TraceRecord> records_;
  std::int64_t step_ = 0;
  std::int64_t total_steps_ = 0;
  std::size_t next_stimulus_ = 0;
};

// Runs a system to its horizon and returns the canonical trace. A pure
// function of its SystemSpec: the same input yields byte-identical traces.
inline Trace system_run(const ModelSet& set, const SystemSpec& sys) {
  SystemEngine engine(set, sys);
  engine.run();
  return engine.finish();
}

}  // namespace twinkernel
