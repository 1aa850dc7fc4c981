#pragma once
// Coloured Petri-Net executor: typed tokens, transition guards, arc binding
// patterns and input-event arcs. Uncoloured nets are the unit-colour special
// case. Includes an independent brute-force reachability oracle for tests.

#include <deque>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "twinkernel/core.hpp"
#include "twinkernel/diag.hpp"
#include "twinkernel/expr.hpp"

namespace twinkernel {

// ---------------------------------------------------------------------------
// Colour sets

struct ColorSet {
  enum class Kind : std::uint8_t { Bool, Int, Real, Enum, Unit, Product };
  std::string name;
  Kind kind = Kind::Unit;
  std::vector<std::string> labels;  // Enum
  std::vector<int> components;      // Product: indices of scalar colour sets
};

inline int colorset_arity(const std::vector<ColorSet>& table, int cs) {
  const auto& c = table[static_cast<std::size_t>(cs)];
  if (c.kind == ColorSet::Kind::Unit) return 0;
  if (c.kind == ColorSet::Kind::Product) return static_cast<int>(c.components.size());
  return 1;
}

inline TypeRef colorset_scalar_type(const std::vector<ColorSet>& table, int cs) {
  const auto& c = table[static_cast<std::size_t>(cs)];
  switch (c.kind) {
    case ColorSet::Kind::Bool: return TypeRef::boolean();
    case ColorSet::Kind::Int: return TypeRef::integer();
    case ColorSet::Kind::Real: return TypeRef::real();
    case ColorSet::Kind::Enum: return TypeRef::enumeration(cs);
    case ColorSet::Kind::Unit: return TypeRef::unit();
    case ColorSet::Kind::Product: throw ContractError("product colour set is not scalar");
  }
  return TypeRef::real();
}

inline TypeRef colorset_component_type(const std::vector<ColorSet>& table, int cs, int elem) {
  const auto& c = table[static_cast<std::size_t>(cs)];
  if (c.kind == ColorSet::Kind::Product)
    return colorset_scalar_type(table, c.components[static_cast<std::size_t>(elem)]);
  return colorset_scalar_type(table, cs);
}

// ---------------------------------------------------------------------------
// Tokens, multisets, markings

using Token = std::vector<Value>;

inline bool token_less(const Token& a, const Token& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(), Value::less);
}

struct TokenLess {
  bool operator()(const Token& a, const Token& b) const { return token_less(a, b); }
};

using Multiset = std::map<Token, std::int64_t, TokenLess>;

struct Marking {
  std::vector<Multiset> places;

  std::int64_t total_tokens() const {
    std::int64_t n = 0;
    for (const auto& p : places)
      for (const auto& [tok, count] : p) n += count;
    return n;
  }

  friend bool operator==(const Marking& a, const Marking& b) {
    if (a.places.size() != b.places.size()) return false;
    for (std::size_t i = 0; i < a.places.size(); ++i) {
      const auto& x = a.places[i];
      const auto& y = b.places[i];
      if (x.size() != y.size()) return false;
      auto it = y.begin();
      for (const auto& [tok, count] : x) {
        if (token_less(tok, it->first) || token_less(it->first, tok) || count != it->second)
          return false;
        ++it;
      }
    }
    return true;
  }
};

inline bool marking_less(const Marking& a, const Marking& b) {
  if (a.places.size() != b.places.size()) return a.places.size() < b.places.size();
  for (std::size_t i = 0; i < a.places.size(); ++i) {
    const auto& x = a.places[i];
    const auto& y = b.places[i];
    auto xi = x.begin();
    auto yi = y.begin();
    for (; xi != x.end() && yi != y.end(); ++xi, ++yi) {
      if (token_less(xi->first, yi->first)) return true;
      if (token_less(yi->first, xi->first)) return false;
      if (xi->second != yi->second) return xi->second < yi->second;
    }
    if (xi == x.end() && yi != y.end()) return true;
    if (xi != x.end() && yi == y.end()) return false;
  }
  return false;
}

struct MarkingLess {
  bool operator()(const Marking& a, const Marking& b) const { return marking_less(a, b); }
};

struct PlaceTokenLess {
  bool operator()(const std::pair<int, Token>& a, const std::pair<int, Token>& b) const {
    if (a.first != b.first) return a.first < b.first;
    return token_less(a.second, b.second);
  }
};

// ---------------------------------------------------------------------------
// Net structure

struct CpnPlace {
  std::string name;
  int colorset = -1;
  Multiset init;
};

struct CpnVarDecl {
  std::string name;
  int colorset = -1;  // scalar colour sets only
};

struct CpnPatternElem {
  bool is_var = false;
  int var = -1;  // net variable index
  Value lit;
};

struct CpnInArc {
  int place = -1;
  std::vector<CpnPatternElem> elems;
};

struct CpnEventArc {
  int input = -1;    // index into net inputs
  int bind_var = -1; // variable bound to the payload, or -1
  std::optional<Value> match;
};

struct CpnOutArc {
  int place = -1;
  std::vector<Expr> elems;
};

struct CpnEmit {
  int output = -1;
  std::optional<Expr> payload;
};

struct CpnTransition {
  std::string name;
  std::vector<CpnInArc> in_arcs;
  std::vector<CpnEventArc> event_arcs;
  std::optional<Expr> guard;
  std::vector<CpnOutArc> out_arcs;
  std::vector<CpnEmit> emits;
  SourceSpan span;
};

struct CpnNet {
  std::string name;
  std::vector<ColorSet> colorsets;
  std::vector<CpnPlace> places;
  std::vector<CpnVarDecl> vars;
  std::vector<InputSpec> inputs;
  std::vector<OutputSpec> outputs;
  std::vector<ParamSpec> params;
  std::vector<CpnTransition> transitions;

  int place_index(std::string_view n) const {
    for (std::size_t i = 0; i < places.size(); ++i)
      if (places[i].name == n) return static_cast<int>(i);
    return -1;
  }
};

struct CpnContext {
  const CpnNet* net = nullptr;
  std::vector<Value> params;
  int max_micro_iters = 4096;
};

inline CpnContext make_cpn_context(const CpnNet& net,
                                   std::span<const std::pair<std::string, double>> overrides = {}) {
  CpnContext ctx;
  ctx.net = &net;
  std::vector<ParamSpec> params = net.params;
  for (const auto& [name, value] : overrides) {
    bool found = false;
    for (auto& p : params) {
      if (p.name == name) {
        p.value = value;
        found = true;
      }
    }
    if (!found) throw ContractError("cpn " + net.name + ": no parameter named " + name);
  }
  ctx.params = params_to_values(params);
  return ctx;
}

struct CpnState {
  Marking marking;
  std::vector<Event> pending;  // unconsumed input events of the current macro step

  friend bool operator==(const CpnState&, const CpnState&) = default;
};

inline CpnState cpn_initial_state(const CpnContext& ctx) {
  CpnState s;
  for (const auto& p : ctx.net->places) s.marking.places.push_back(p.init);
  return s;
}

// Canonical marking text, e.g. "q1:1'(x,0)+1'(y,0.3);q5:1'(z,0)"; unit places
// print the bare count. Empty places are omitted.
inline std::string serialize_marking(const CpnNet& net, const Marking& m) {
  std::string out;
  for (std::size_t pi = 0; pi < m.places.size(); ++pi) {
    if (m.places[pi].empty()) continue;
    if (!out.empty()) out += ';';
    out += net.places[pi].name;
    out += ':';
    bool first = true;
    for (const auto& [tok, count] : m.places[pi]) {
      if (!first) out += '+';
      first = false;
      out += format_int(count);
      if (!tok.empty()) {
        out += "'(";
        for (std::size_t e = 0; e < tok.size(); ++e) {
          if (e) out += ',';
          out += tok[e].is_real() ? format_real_bare(tok[e].as_real()) : tok[e].to_text();
        }
        out += ')';
      }
    }
  }
  return out.empty() ? "-" : out;
}

// ---------------------------------------------------------------------------
// Validation

inline std::vector<Diagnostic> cpn_validate(const CpnNet& net) {
  std::vector<Diagnostic> out;
  const std::string head = "cpn " + net.name;
  const auto& cs = net.colorsets;

  auto cs_ok = [&](int c) { return c >= 0 && c < static_cast<int>(cs.size()); };

  for (const auto& c : cs) {
    if (c.kind == ColorSet::Kind::Product) {
      if (c.components.empty())
        out.push_back(make_error("product colour set must have arity >= 1", {}, head));
      for (int comp : c.components) {
        if (!cs_ok(comp) || cs[static_cast<std::size_t>(comp)].kind == ColorSet::Kind::Product ||
            cs[static_cast<std::size_t>(comp)].kind == ColorSet::Kind::Unit)
          out.push_back(make_error("product components must be scalar colour sets", {},
                                   head + ", colorset " + c.name));
      }
    }
    if (c.kind == ColorSet::Kind::Enum) {
      std::set<std::string> seen;
      for (const auto& l : c.labels)
        if (!seen.insert(l).second)
          out.push_back(make_error("duplicate enum label " + l, {}, head + ", colorset " + c.name));
    }
  }

  auto token_matches = [&](const Token& tok, int colorset) {
    if (!cs_ok(colorset)) return false;
    if (static_cast<int>(tok.size()) != colorset_arity(cs, colorset)) return false;
    for (std::size_t e = 0; e < tok.size(); ++e) {
      Value v = tok[e];
      const TypeRef t = colorset_component_type(cs, colorset, static_cast<int>(e));
      Value copy = v;
      if (!coerce_value(copy, t) || copy != v) return false;
      if (t.base == TypeRef::Base::Enum) {
        const auto& labels = cs[static_cast<std::size_t>(t.colorset)].labels;
        if (std::find(labels.begin(), labels.end(), v.as_label()) == labels.end()) return false;
      }
    }
    return true;
  };

  for (const auto& p : net.places) {
    const std::string where = head + ", place " + p.name;
    if (!cs_ok(p.colorset)) {
      out.push_back(make_error("unknown colour set", {}, where));
      continue;
    }
    for (const auto& [tok, count] : p.init) {
      if (count < 1) out.push_back(make_error("token multiplicity must be >= 1", {}, where));
      if (!token_matches(tok, p.colorset))
        out.push_back(make_error("colour mismatch in initial marking", {}, where));
    }
  }

  for (const auto& v : net.vars) {
    if (!cs_ok(v.colorset) || cs[static_cast<std::size_t>(v.colorset)].kind == ColorSet::Kind::Product ||
        cs[static_cast<std::size_t>(v.colorset)].kind == ColorSet::Kind::Unit)
      out.push_back(make_error("variable must have a scalar colour set", {}, head + ", var " + v.name));
  }

  const int n_places = static_cast<int>(net.places.size());
  const int n_vars = static_cast<int>(net.vars.size());
  for (const auto& t : net.transitions) {
    const std::string where = head + ", transition " + t.name;
    std::vector<bool> bound(static_cast<std::size_t>(n_vars), false);

    for (const auto& arc : t.in_arcs) {
      if (arc.place < 0 || arc.place >= n_places) {
        out.push_back(make_error("unknown place in input arc", t.span, where));
        continue;
      }
      const int colorset = net.places[static_cast<std::size_t>(arc.place)].colorset;
      if (static_cast<int>(arc.elems.size()) != colorset_arity(cs, colorset)) {
        out.push_back(make_error("colour mismatch: pattern arity does not match place " +
                                     net.places[static_cast<std::size_t>(arc.place)].name,
                                 t.span, where));
        continue;
      }
      for (std::size_t e = 0; e < arc.elems.size(); ++e) {
        const TypeRef ct = colorset_component_type(cs, colorset, static_cast<int>(e));
        const auto& el = arc.elems[e];
        if (el.is_var) {
          if (el.var < 0 || el.var >= n_vars) {
            out.push_back(make_error("unknown variable in pattern", t.span, where));
            continue;
          }
          const TypeRef vt = colorset_scalar_type(cs, net.vars[static_cast<std::size_t>(el.var)].colorset);
          if (!(vt == ct))
            out.push_back(make_error("colour mismatch: variable " +
                                         net.vars[static_cast<std::size_t>(el.var)].name +
                                         " does not match place component",
                                     t.span, where));
          bound[static_cast<std::size_t>(el.var)] = true;
        } else {
          Value copy = el.lit;
          if (!coerce_value(copy, ct))
            out.push_back(make_error("colour mismatch: literal pattern component", t.span, where));
        }
      }
    }

    for (const auto& arc : t.event_arcs) {
      if (arc.input < 0 || arc.input >= static_cast<int>(net.inputs.size())) {
        out.push_back(make_error("unknown input in event arc", t.span, where));
        continue;
      }
      const auto& in = net.inputs[static_cast<std::size_t>(arc.input)];
      if (arc.bind_var >= 0) {
        if (in.is_event) {
          out.push_back(make_error("event input " + in.name + " carries no payload to bind", t.span, where));
        } else if (arc.bind_var >= n_vars) {
          out.push_back(make_error("unknown variable in event arc", t.span, where));
        } else {
          const TypeRef vt =
              colorset_scalar_type(cs, net.vars[static_cast<std::size_t>(arc.bind_var)].colorset);
          if (!(vt == in.type) && !(vt.base == TypeRef::Base::Real && in.type.base == TypeRef::Base::Int))
            out.push_back(make_error("colour mismatch: payload of " + in.name, t.span, where));
          bound[static_cast<std::size_t>(arc.bind_var)] = true;
        }
      }
    }

    auto check_bound = [&](const Expr& e, const char* what) {
      std::vector<Diagnostic> slots;
      detail::check_expr_slots(e, 0, static_cast<int>(net.params.size()), 0, 0, n_vars, where, slots);
      for (auto& d : slots) out.push_back(std::move(d));
      // every Binding reference must be bound by some arc
      std::vector<const Expr*> stack{&e};
      while (!stack.empty()) {
        const Expr* cur = stack.back();
        stack.pop_back();
        if (cur->op == Expr::Op::Ref && cur->slot.kind == RefSlot::Kind::Binding &&
            cur->slot.index >= 0 && cur->slot.index < n_vars &&
            !bound[static_cast<std::size_t>(cur->slot.index)])
          out.push_back(make_error(std::string("unbound variable '") + cur->name + "' in " + what,
                                   cur->span, where));
        for (const auto& a : cur->args) stack.push_back(&a);
      }
    };

    if (t.guard) check_bound(*t.guard, "guard");
    for (const auto& arc : t.out_arcs) {
      if (arc.place < 0 || arc.place >= n_places) {
        out.push_back(make_error("unknown place in output arc", t.span, where));
        continue;
      }
      const int colorset = net.places[static_cast<std::size_t>(arc.place)].colorset;
      if (static_cast<int>(arc.elems.size()) != colorset_arity(cs, colorset))
        out.push_back(make_error("colour mismatch: output arc arity does not match place " +
                                     net.places[static_cast<std::size_t>(arc.place)].name,
                                 t.span, where));
      for (const auto& e : arc.elems) check_bound(e, "output arc");
    }
    for (const auto& em : t.emits) {
      if (em.output < 0 || em.output >= static_cast<int>(net.outputs.size()))
        out.push_back(make_error("unknown output in emit", t.span, where));
      if (em.payload) check_bound(*em.payload, "emit");
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Enabling and firing

struct EnabledFiring {
  int transition = -1;
  std::vector<Value> binding;        // indexed by net variable; unbound slots default
  std::vector<bool> bound;
  std::vector<int> consumed_events;  // indices into the pending buffer
};

namespace detail {

struct BindCursor {
  const CpnNet* net;
  const CpnContext* ctx;
  const Marking* marking;
  std::span<const Event> events;
  const CpnTransition* trans;
  int trans_index;

  std::vector<Value> binding;
  std::vector<bool> bound;
  std::map<std::pair<int, Token>, std::int64_t, PlaceTokenLess> used;  // (place, token) -> taken
  std::vector<bool> event_used;
  std::vector<int> consumed;
  std::vector<EnabledFiring>* out;

  void run() {
    binding.assign(net->vars.size(), Value());
    bound.assign(net->vars.size(), false);
    event_used.assign(events.size(), false);
    arcs(0);
  }

  void arcs(std::size_t k) {
    if (k < trans->in_arcs.size()) {
      const auto& arc = trans->in_arcs[k];
      const auto& pool = marking->places[static_cast<std::size_t>(arc.place)];
      for (const auto& [tok, count] : pool) {
        auto& taken = used[{arc.place, tok}];
        if (taken >= count) continue;
        std::vector<int> newly;
        if (!match_pattern(arc.elems, tok, newly)) {
          unbind(newly);
          continue;
        }
        taken += 1;
        arcs(k + 1);
        taken -= 1;
        unbind(newly);
      }
      return;
    }
    const std::size_t ek = k - trans->in_arcs.size();
    if (ek < trans->event_arcs.size()) {
      const auto& arc = trans->event_arcs[ek];
      const auto& decl = net->inputs[static_cast<std::size_t>(arc.input)];
      for (std::size_t i = 0; i < events.size(); ++i) {
        if (event_used[i]) continue;
        if (events[i].name != decl.name) continue;
        std::vector<int> newly;
        if (!match_event(arc, decl, events[i], newly)) {
          unbind(newly);
          continue;
        }
        event_used[i] = true;
        consumed.push_back(static_cast<int>(i));
        arcs(k + 1);
        consumed.pop_back();
        event_used[i] = false;
        unbind(newly);
      }
      return;
    }
    // all arcs satisfied: evaluate the guard
    EvalEnv env;
    env.params = ctx->params;
    env.bindings = binding;
    if (trans->guard && !eval_bool(*trans->guard, env)) return;
    out->push_back(EnabledFiring{trans_index, binding, bound, consumed});
  }

  bool match_pattern(const std::vector<CpnPatternElem>& elems, const Token& tok,
                     std::vector<int>& newly) {
    for (std::size_t e = 0; e < elems.size(); ++e) {
      const auto& el = elems[e];
      if (el.is_var) {
        if (bound[static_cast<std::size_t>(el.var)]) {
          if (binding[static_cast<std::size_t>(el.var)] != tok[e]) return false;
        } else {
          bound[static_cast<std::size_t>(el.var)] = true;
          binding[static_cast<std::size_t>(el.var)] = tok[e];
          newly.push_back(el.var);
        }
      } else {
        Value lit = el.lit;
        const int colorset = net->vars.empty() ? -1 : 0;
        (void)colorset;
        if (!(lit == tok[e])) {
          // ints written where the place holds reals still match numerically
          if (!(lit.is_numeric() && tok[e].is_numeric() && lit.numeric() == tok[e].numeric()))
            return false;
        }
      }
    }
    return true;
  }

  bool match_event(const CpnEventArc& arc, const InputSpec& decl, const Event& ev,
                   std::vector<int>& newly) {
    if (arc.bind_var >= 0) {
      if (!ev.payload) return false;
      Value v = *ev.payload;
      const TypeRef vt = colorset_scalar_type(
          net->colorsets, net->vars[static_cast<std::size_t>(arc.bind_var)].colorset);
      if (!coerce_value(v, vt)) return false;
      if (bound[static_cast<std::size_t>(arc.bind_var)]) {
        return binding[static_cast<std::size_t>(arc.bind_var)] == v;
      }
      bound[static_cast<std::size_t>(arc.bind_var)] = true;
      binding[static_cast<std::size_t>(arc.bind_var)] = v;
      newly.push_back(arc.bind_var);
      return true;
    }
    if (arc.match) {
      if (!ev.payload) return false;
      return detail::compare_eq(*ev.payload, *arc.match);
    }
    (void)decl;
    return true;
  }

  void unbind(const std::vector<int>& newly) {
    for (int v : newly) {
      bound[static_cast<std::size_t>(v)] = false;
      binding[static_cast<std::size_t>(v)] = Value();
    }
  }
};

inline bool firing_less(const EnabledFiring& a, const EnabledFiring& b) {
  if (a.transition != b.transition) return a.transition < b.transition;
  for (std::size_t i = 0; i < a.binding.size(); ++i) {
    if (a.bound[i] != b.bound[i]) return b.bound[i];
    if (!a.bound[i]) continue;
    if (Value::less(a.binding[i], b.binding[i])) return true;
    if (Value::less(b.binding[i], a.binding[i])) return false;
  }
  return a.consumed_events < b.consumed_events;
}

}  // namespace detail

// All (transition, binding) pairs enabled by the marking and the given input
// events, in the canonical order: transition declaration order, then
// lexicographic binding order.
inline std::vector<EnabledFiring> enabled_bindings(const CpnContext& ctx, const CpnState& s,
                                                   std::span<const Event> inputs) {
  std::vector<EnabledFiring> out;
  const CpnNet& net = *ctx.net;
  for (std::size_t ti = 0; ti < net.transitions.size(); ++ti) {
    detail::BindCursor cur;
    cur.net = &net;
    cur.ctx = &ctx;
    cur.marking = &s.marking;
    cur.events = inputs;
    cur.trans = &net.transitions[ti];
    cur.trans_index = static_cast<int>(ti);
    cur.out = &out;
    cur.run();
  }
  std::sort(out.begin(), out.end(), detail::firing_less);
  return out;
}

// Instantiates an input-arc pattern under a binding; every element is concrete
// after a successful match.
inline Token instantiate_pattern(const CpnNet& net, const CpnInArc& arc,
                                 const EnabledFiring& f) {
  Token tok;
  tok.reserve(arc.elems.size());
  for (const auto& el : arc.elems) {
    if (el.is_var) {
      tok.push_back(f.binding[static_cast<std::size_t>(el.var)]);
    } else {
      Value lit = el.lit;
      const int place_cs = net.places[static_cast<std::size_t>(arc.place)].colorset;
      const TypeRef ct = colorset_component_type(net.colorsets, place_cs,
                                                 static_cast<int>(tok.size()));
      coerce_value(lit, ct);
      tok.push_back(lit);
    }
  }
  return tok;
}

struct CpnFireResult {
  std::vector<Event> emitted;
};

// Fires one enabled (transition, binding): input tokens out, output tokens in,
// consumed events dropped from the pending buffer, emissions stamped `now`.
inline CpnFireResult cpn_fire(const CpnContext& ctx, CpnState& s, const EnabledFiring& f,
                              SimTime now) {
  const CpnNet& net = *ctx.net;
  if (f.transition < 0 || f.transition >= static_cast<int>(net.transitions.size()))
    throw ContractError("cpn " + net.name + ": fired transition index out of range");
  const auto& t = net.transitions[static_cast<std::size_t>(f.transition)];

  // Re-verify enabledness of this exact pair.
  std::map<std::pair<int, Token>, std::int64_t, PlaceTokenLess> need;
  for (const auto& arc : t.in_arcs) {
    const Token tok = instantiate_pattern(net, arc, f);
    need[{arc.place, tok}] += 1;
  }
  for (const auto& [key, count] : need) {
    const auto& pool = s.marking.places[static_cast<std::size_t>(key.first)];
    const auto it = pool.find(key.second);
    if (it == pool.end() || it->second < count)
      throw ContractError("cpn " + net.name + ": transition " + t.name +
                          " fired while not enabled (missing tokens)");
  }
  if (f.consumed_events.size() != t.event_arcs.size())
    throw ContractError("cpn " + net.name + ": transition " + t.name +
                        " fired with mismatched event arcs");
  for (std::size_t i = 0; i < t.event_arcs.size(); ++i) {
    const int ei = f.consumed_events[i];
    if (ei < 0 || ei >= static_cast<int>(s.pending.size()))
      throw ContractError("cpn " + net.name + ": transition " + t.name +
                          " fired with a stale event reference");
    const auto& decl = net.inputs[static_cast<std::size_t>(t.event_arcs[i].input)];
    if (s.pending[static_cast<std::size_t>(ei)].name != decl.name)
      throw ContractError("cpn " + net.name + ": transition " + t.name +
                          " fired while not enabled (event mismatch)");
  }
  if (t.guard) {
    EvalEnv env;
    env.params = ctx.params;
    env.bindings = f.binding;
    if (!eval_bool(*t.guard, env))
      throw ContractError("cpn " + net.name + ": transition " + t.name +
                          " fired while not enabled (guard false)");
  }

  for (const auto& [key, count] : need) {
    auto& pool = s.marking.places[static_cast<std::size_t>(key.first)];
    const auto it = pool.find(key.second);
    it->second -= count;
    if (it->second == 0) pool.erase(it);
  }

  EvalEnv env;
  env.params = ctx.params;
  env.bindings = f.binding;
  for (const auto& arc : t.out_arcs) {
    Token tok;
    const int place_cs = net.places[static_cast<std::size_t>(arc.place)].colorset;
    for (std::size_t e = 0; e < arc.elems.size(); ++e) {
      Value v = eval(arc.elems[e], env);
      const TypeRef ct = colorset_component_type(net.colorsets, place_cs, static_cast<int>(e));
      if (!coerce_value(v, ct))
        throw ContractError("cpn " + net.name + ": colour mismatch producing into " +
                            net.places[static_cast<std::size_t>(arc.place)].name);
      tok.push_back(std::move(v));
    }
    s.marking.places[static_cast<std::size_t>(arc.place)][tok] += 1;
  }

  CpnFireResult r;
  for (const auto& em : t.emits) {
    const auto& out = net.outputs[static_cast<std::size_t>(em.output)];
    std::optional<Value> payload;
    if (em.payload) payload = eval(*em.payload, env);
    r.emitted.push_back(Event{out.name, payload, now});
  }

  // Drop consumed events (highest index first keeps earlier indices stable).
  std::vector<int> drop = f.consumed_events;
  std::sort(drop.begin(), drop.end(), std::greater<int>());
  for (int ei : drop) s.pending.erase(s.pending.begin() + ei);
  return r;
}

struct CpnStepResult {
  std::vector<Event> emitted;
  int firings = 0;
};

// Fires the first enabled binding repeatedly until quiescence. Each input
// event is consumable at most once; events never persist across macro steps.
inline CpnStepResult cpn_step(const CpnContext& ctx, CpnState& s, std::span<const Event> inputs,
                              SimTime now) {
  CpnStepResult r;
  s.pending.assign(inputs.begin(), inputs.end());
  while (true) {
    const auto list = enabled_bindings(ctx, s, s.pending);
    if (list.empty()) break;
    if (++r.firings > ctx.max_micro_iters) {
      s.pending.clear();
      throw NonQuiescenceError("cpn " + ctx.net->name + ": no quiescence after " +
                               std::to_string(ctx.max_micro_iters) + " firings (transition " +
                               ctx.net->transitions[static_cast<std::size_t>(list.front().transition)].name +
                               " still enabled)");
    }
    auto fr = cpn_fire(ctx, s, list.front(), now);
    for (auto& e : fr.emitted) r.emitted.push_back(std::move(e));
  }
  s.pending.clear();
  return r;
}

// ---------------------------------------------------------------------------
// Brute-force reachability oracle. Deliberately written as its own naive
// enumeration (not on top of enabled_bindings) so tests get an independent
// route to the same semantics. Event arcs may consume any event from the
// alphabet; payload domains must be small.

struct AlphabetEvent {
  std::string name;
  std::vector<std::optional<Value>> payloads;  // nullopt = event without payload
};

inline std::set<Marking, MarkingLess> reachable_markings(const CpnContext& ctx,
                                                         const Marking& initial,
                                                         std::span<const AlphabetEvent> alphabet,
                                                         int depth,
                                                         std::size_t state_cap = 200000) {
  const CpnNet& net = *ctx.net;
  std::set<Marking, MarkingLess> seen;
  seen.insert(initial);
  std::deque<Marking> frontier{initial};

  struct Enumerator {
    const CpnNet* net;
    const CpnContext* ctx;
    const Marking* m;
    std::span<const AlphabetEvent> alphabet;
    const CpnTransition* t;
    std::vector<Value> binding;
    std::vector<bool> bound;
    std::vector<Marking>* successors;

    void slot(std::size_t k, Marking scratch) {
      if (k < t->in_arcs.size()) {
        const auto& arc = t->in_arcs[k];
        auto pool = scratch.places[static_cast<std::size_t>(arc.place)];  // copy for iteration
        for (const auto& [tok, count] : pool) {
          if (count <= 0) continue;
          auto saved_binding = binding;
          auto saved_bound = bound;
          bool ok = true;
          for (std::size_t e = 0; e < arc.elems.size() && ok; ++e) {
            const auto& el = arc.elems[e];
            if (el.is_var) {
              if (bound[static_cast<std::size_t>(el.var)]) {
                if (!(binding[static_cast<std::size_t>(el.var)] == tok[e])) ok = false;
              } else {
                bound[static_cast<std::size_t>(el.var)] = true;
                binding[static_cast<std::size_t>(el.var)] = tok[e];
              }
            } else if (!(el.lit == tok[e]) &&
                       !(el.lit.is_numeric() && tok[e].is_numeric() &&
                         el.lit.numeric() == tok[e].numeric())) {
              ok = false;
            }
          }
          if (ok) {
            Marking next = scratch;
            auto& np = next.places[static_cast<std::size_t>(arc.place)];
            auto it = np.find(tok);
            it->second -= 1;
            if (it->second == 0) np.erase(it);
            slot(k + 1, std::move(next));
          }
          binding = std::move(saved_binding);
          bound = std::move(saved_bound);
        }
        return;
      }
      const std::size_t ek = k - t->in_arcs.size();
      if (ek < t->event_arcs.size()) {
        const auto& arc = t->event_arcs[ek];
        const auto& decl = net->inputs[static_cast<std::size_t>(arc.input)];
        for (const auto& ae : alphabet) {
          if (ae.name != decl.name) continue;
          for (const auto& payload : ae.payloads) {
            auto saved_binding = binding;
            auto saved_bound = bound;
            bool ok = true;
            if (arc.bind_var >= 0) {
              if (!payload) {
                ok = false;
              } else {
                Value v = *payload;
                const TypeRef vt = colorset_scalar_type(
                    net->colorsets, net->vars[static_cast<std::size_t>(arc.bind_var)].colorset);
                if (!coerce_value(v, vt)) {
                  ok = false;
                } else if (bound[static_cast<std::size_t>(arc.bind_var)]) {
                  ok = binding[static_cast<std::size_t>(arc.bind_var)] == v;
                } else {
                  bound[static_cast<std::size_t>(arc.bind_var)] = true;
                  binding[static_cast<std::size_t>(arc.bind_var)] = v;
                }
              }
            } else if (arc.match) {
              ok = payload && detail::compare_eq(*payload, *arc.match);
            }
            if (ok) slot(k + 1, scratch);
            binding = std::move(saved_binding);
            bound = std::move(saved_bound);
          }
        }
        return;
      }
      EvalEnv env;
      env.params = ctx->params;
      env.bindings = binding;
      if (t->guard && !eval_bool(*t->guard, env)) return;
      Marking next = std::move(scratch);
      for (const auto& arc : t->out_arcs) {
        Token tok;
        const int place_cs = net->places[static_cast<std::size_t>(arc.place)].colorset;
        for (std::size_t e = 0; e < arc.elems.size(); ++e) {
          Value v = eval(arc.elems[e], env);
          coerce_value(v, colorset_component_type(net->colorsets, place_cs, static_cast<int>(e)));
          tok.push_back(std::move(v));
        }
        next.places[static_cast<std::size_t>(arc.place)][tok] += 1;
      }
      successors->push_back(std::move(next));
    }
  };

  for (int level = 0; level < depth && !frontier.empty(); ++level) {
    std::deque<Marking> next_frontier;
    for (const auto& m : frontier) {
      std::vector<Marking> successors;
      for (const auto& t : net.transitions) {
        Enumerator en;
        en.net = &net;
        en.ctx = &ctx;
        en.m = &m;
        en.alphabet = alphabet;
        en.t = &t;
        en.binding.assign(net.vars.size(), Value());
        en.bound.assign(net.vars.size(), false);
        en.successors = &successors;
        en.slot(0, m);
      }
      for (auto& s2 : successors) {
        if (seen.size() > state_cap)
          throw OracleOverflowError("reachability oracle exceeded " + std::to_string(state_cap) +
                                    " states");
        if (seen.insert(s2).second) next_frontier.push_back(std::move(s2));
      }
    }
    frontier = std::move(next_frontier);
  }
  return seen;
}

}  // namespace twinkernel
