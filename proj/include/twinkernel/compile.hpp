#pragma once
// Turns parsed documents into executable models: name resolution, type
// checking, wire/port/channel validation. Diagnostics carry source spans;
// nothing throws for user errors.

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "twinkernel/ast.hpp"
#include "twinkernel/composition.hpp"
#include "twinkernel/parser.hpp"

namespace twinkernel {

struct CompileResult {
  ModelSet set;
  std::vector<Diagnostic> diagnostics;
  bool ok = false;
};

namespace compile_detail {

// Names that would collide with fixed trace-record keys or record names.
inline bool reserved_name(const std::string& n) {
  return n == "kind" || n == "source" || n == "t" || n == "location" || n == "marking";
}

struct SymbolInfo {
  RefSlot slot;
  TypeRef type;
};

using Resolver = std::function<std::optional<SymbolInfo>(const std::string&, SourceSpan)>;

class Compiler {
 public:
  CompileResult run(const dsl::Document& doc) {
    // Builtin colour sets, usable by places and variables directly.
    for (const auto& [name, kind] :
         {std::pair<const char*, ColorSet::Kind>{"bool", ColorSet::Kind::Bool},
          {"int", ColorSet::Kind::Int},
          {"real", ColorSet::Kind::Real},
          {"unit", ColorSet::Kind::Unit}}) {
      ColorSet cs;
      cs.name = name;
      cs.kind = kind;
      colorset_by_name_[name] = static_cast<int>(set_.colorsets.size());
      set_.colorsets.push_back(std::move(cs));
    }
    // Colour sets first (ordered: alias-vs-label disambiguation depends on
    // what exists so far), then models, then DTCs, then systems.
    for (const auto& block : doc.blocks)
      if (const auto* cs = std::get_if<dsl::ColorsetAst>(&block)) add_colorset(*cs);
    for (const auto& block : doc.blocks) {
      if (const auto* fsm = std::get_if<dsl::FsmAst>(&block)) add_fsm(*fsm);
      else if (const auto* cpn = std::get_if<dsl::CpnAst>(&block)) add_cpn(*cpn);
      else if (const auto* ha = std::get_if<dsl::HaAst>(&block)) add_ha(*ha);
    }
    for (const auto& block : doc.blocks)
      if (const auto* dtc = std::get_if<dsl::DtcAst>(&block)) add_dtc(*dtc);
    for (const auto& block : doc.blocks)
      if (const auto* sys = std::get_if<dsl::SystemAst>(&block)) add_system(*sys);

    CompileResult result;
    result.set = std::move(set_);
    result.diagnostics = std::move(diags_);
    result.ok = !has_errors(result.diagnostics);
    return result;
  }

 private:
  // ---- shared helpers ----

  void error(std::string msg, SourceSpan span, std::string where = {}) {
    diags_.push_back(make_error(std::move(msg), span, std::move(where)));
  }
  void warning(std::string msg, SourceSpan span, std::string where = {}) {
    diags_.push_back(make_warning(std::move(msg), span, std::move(where)));
  }

  int find_colorset(const std::string& n) const {
    const auto it = colorset_by_name_.find(n);
    return it == colorset_by_name_.end() ? -1 : it->second;
  }

  std::optional<TypeRef> type_from_name(const std::string& n, SourceSpan span,
                                        const std::string& where) {
    if (n == "bool") return TypeRef::boolean();
    if (n == "int") return TypeRef::integer();
    if (n == "real") return TypeRef::real();
    const int cs = find_colorset(n);
    if (cs < 0) {
      error("unknown type '" + n + "'", span, where);
      return std::nullopt;
    }
    switch (set_.colorsets[static_cast<std::size_t>(cs)].kind) {
      case ColorSet::Kind::Bool: return TypeRef::boolean();
      case ColorSet::Kind::Int: return TypeRef::integer();
      case ColorSet::Kind::Real: return TypeRef::real();
      case ColorSet::Kind::Enum: return TypeRef::enumeration(cs);
      default:
        error("colorset '" + n + "' cannot type a scalar value", span, where);
        return std::nullopt;
    }
  }

  static bool assignable(const TypeRef& dst, const TypeRef& src) {
    if (dst == src) return true;
    return dst.base == TypeRef::Base::Real && src.base == TypeRef::Base::Int;
  }

  std::string type_text(const TypeRef& t) const {
    if (t.base == TypeRef::Base::Enum)
      return set_.colorsets[static_cast<std::size_t>(t.colorset)].name;
    return std::string(type_name(t));
  }

  // ---- expression checking ----

  struct CheckCtx {
    Resolver resolve;
    std::string where;
  };

  std::optional<TypeRef> check_expr(Expr& e, const CheckCtx& cc) {
    using Op = Expr::Op;
    switch (e.op) {
      case Op::Lit:
        switch (e.lit.kind()) {
          case Value::Kind::Bool: return TypeRef::boolean();
          case Value::Kind::Int: return TypeRef::integer();
          case Value::Kind::Real: return TypeRef::real();
          case Value::Kind::Label: return std::nullopt;
        }
        return std::nullopt;
      case Op::Ref: {
        if (cc.resolve) {
          if (auto info = cc.resolve(e.name, e.span)) {
            if (info->slot.kind == RefSlot::Kind::Unresolved) return std::nullopt;  // reported
            e.slot = info->slot;
            return info->type;
          }
        }
        const auto owners = label_owners_.find(e.name);
        if (owners != label_owners_.end()) {
          if (owners->second.size() > 1) {
            error("label '" + e.name + "' is ambiguous between colorsets", e.span, cc.where);
            return std::nullopt;
          }
          e.slot = RefSlot{RefSlot::Kind::EnumLabel, owners->second.front()};
          return TypeRef::enumeration(owners->second.front());
        }
        error("unknown symbol '" + e.name + "'", e.span, cc.where);
        return std::nullopt;
      }
      case Op::Not: {
        const auto t = check_expr(e.args[0], cc);
        if (t && t->base != TypeRef::Base::Bool)
          error("operand of '!' must be bool, got " + type_text(*t), e.span, cc.where);
        return TypeRef::boolean();
      }
      case Op::Neg: {
        const auto t = check_expr(e.args[0], cc);
        if (t && !t->is_numeric())
          error("operand of unary '-' must be numeric", e.span, cc.where);
        return t;
      }
      case Op::And:
      case Op::Or: {
        for (auto& a : e.args) {
          const auto t = check_expr(a, cc);
          if (t && t->base != TypeRef::Base::Bool)
            error("logical operands must be bool, got " + type_text(*t), a.span, cc.where);
        }
        return TypeRef::boolean();
      }
      case Op::Eq:
      case Op::Ne: {
        const auto l = check_expr(e.args[0], cc);
        const auto r = check_expr(e.args[1], cc);
        if (l && r) {
          const bool ok = (l->is_numeric() && r->is_numeric()) || *l == *r;
          if (!ok)
            error("type error: cannot compare " + type_text(*l) + " to " + type_text(*r), e.span,
                  cc.where);
        }
        return TypeRef::boolean();
      }
      case Op::Lt:
      case Op::Le:
      case Op::Gt:
      case Op::Ge: {
        for (auto& a : e.args) {
          const auto t = check_expr(a, cc);
          if (t && !t->is_numeric())
            error("type error: ordered comparison needs numeric operands, got " + type_text(*t),
                  a.span, cc.where);
        }
        return TypeRef::boolean();
      }
      case Op::Add:
      case Op::Sub:
      case Op::Mul:
      case Op::Div: {
        bool all_int = true;
        for (auto& a : e.args) {
          const auto t = check_expr(a, cc);
          if (t && !t->is_numeric()) {
            error("type error: arithmetic needs numeric operands, got " + type_text(*t), a.span,
                  cc.where);
            all_int = false;
          } else if (t) {
            all_int = all_int && t->base == TypeRef::Base::Int;
          }
        }
        if (e.op == Op::Div) return TypeRef::real();
        return all_int ? TypeRef::integer() : TypeRef::real();
      }
      case Op::Abs: {
        const auto t = check_expr(e.args[0], cc);
        if (t && !t->is_numeric()) error("abs needs a numeric operand", e.span, cc.where);
        return t ? *t : TypeRef::real();
      }
      case Op::Min:
      case Op::Max: {
        for (auto& a : e.args) {
          const auto t = check_expr(a, cc);
          if (t && !t->is_numeric())
            error("min/max need numeric operands", a.span, cc.where);
        }
        return TypeRef::real();
      }
    }
    return std::nullopt;
  }

  // Constant expression: literals, enum labels, unary minus and arithmetic.
  std::optional<Value> const_eval(Expr e, const std::string& where) {
    CheckCtx cc;
    cc.resolve = nullptr;
    cc.where = where;
    const std::size_t before = diags_.size();
    check_expr(e, cc);
    if (has_errors({diags_.begin() + static_cast<std::ptrdiff_t>(before), diags_.end()}))
      return std::nullopt;
    try {
      return eval(e, EvalEnv{});
    } catch (const KernelError& err) {
      error(std::string("cannot evaluate constant: ") + err.what(), e.span, where);
      return std::nullopt;
    }
  }

  std::optional<double> const_real(const Expr& e, const std::string& where) {
    const auto v = const_eval(e, where);
    if (!v) return std::nullopt;
    if (!v->is_numeric()) {
      error("expected a numeric constant", e.span, where);
      return std::nullopt;
    }
    return v->numeric();
  }

  Value default_for(const TypeRef& t) const {
    switch (t.base) {
      case TypeRef::Base::Bool: return Value::boolean(false);
      case TypeRef::Base::Int: return Value::integer(0);
      case TypeRef::Base::Real: return Value::real(0.0);
      case TypeRef::Base::Enum:
        return Value::label(set_.colorsets[static_cast<std::size_t>(t.colorset)].labels.front());
      case TypeRef::Base::Unit: return Value();
    }
    return Value();
  }

  bool literal_matches(Value& v, const TypeRef& t, SourceSpan span, const std::string& where) {
    if (!coerce_value(v, t)) {
      error("type error: literal does not match " + type_text(t), span, where);
      return false;
    }
    if (t.base == TypeRef::Base::Enum) {
      const auto& labels = set_.colorsets[static_cast<std::size_t>(t.colorset)].labels;
      if (std::find(labels.begin(), labels.end(), v.as_label()) == labels.end()) {
        error("label '" + v.as_label() + "' is not part of " + type_text(t), span, where);
        return false;
      }
    }
    return true;
  }

  // ---- declarations shared by the three model kinds ----

  struct Namespace {
    std::set<std::string> names;
    Compiler* c;
    std::string where;

    bool claim(const std::string& n, SourceSpan span) {
      if (reserved_name(n)) {
        c->error("name '" + n + "' is reserved", span, where);
        return false;
      }
      if (!names.insert(n).second) {
        c->error("duplicate name '" + n + "'", span, where);
        return false;
      }
      return true;
    }
  };

  std::vector<ParamSpec> build_params(const std::vector<dsl::ParamAst>& params, Namespace& ns,
                                      const std::string& where) {
    std::vector<ParamSpec> out;
    for (const auto& p : params) {
      ns.claim(p.name, p.span);
      const auto v = const_real(p.value, where + ", param " + p.name);
      out.push_back(ParamSpec{p.name, v.value_or(0.0)});
    }
    return out;
  }

  std::vector<InputSpec> build_inputs(const std::vector<dsl::InputAst>& inputs, Namespace& ns,
                                      const std::string& where) {
    std::vector<InputSpec> out;
    for (const auto& in : inputs) {
      ns.claim(in.name, in.span);
      InputSpec spec;
      spec.name = in.name;
      if (in.type == "event") {
        spec.is_event = true;
        if (in.init) error("event inputs take no initial value", in.span, where);
      } else {
        const auto t = type_from_name(in.type, in.span, where);
        spec.type = t.value_or(TypeRef::real());
        spec.init = default_for(spec.type);
        if (in.init) {
          auto v = const_eval(*in.init, where + ", input " + in.name);
          if (v && literal_matches(*v, spec.type, in.span, where)) spec.init = *v;
        }
      }
      out.push_back(std::move(spec));
    }
    return out;
  }

  std::vector<OutputSpec> build_outputs(const std::vector<dsl::OutputAst>& outputs, Namespace& ns,
                                        const std::string& where) {
    std::vector<OutputSpec> out;
    for (const auto& o : outputs) {
      ns.claim(o.name, o.span);
      OutputSpec spec;
      spec.name = o.name;
      if (o.type == "event") {
        spec.has_payload = false;
      } else {
        spec.has_payload = true;
        spec.type = type_from_name(o.type, o.span, where).value_or(TypeRef::real());
      }
      out.push_back(std::move(spec));
    }
    return out;
  }

  // ---- colour sets ----

  void add_colorset(const dsl::ColorsetAst& cs) {
    const std::string where = "colorset " + cs.name;
    if (find_colorset(cs.name) >= 0) {
      error("duplicate colorset '" + cs.name + "'", cs.span, where);
      return;
    }
    ColorSet out;
    out.name = cs.name;
    switch (cs.form) {
      case dsl::ColorsetAst::Form::Primitive:
        if (cs.primitive == "bool") out.kind = ColorSet::Kind::Bool;
        else if (cs.primitive == "int") out.kind = ColorSet::Kind::Int;
        else if (cs.primitive == "real") out.kind = ColorSet::Kind::Real;
        else out.kind = ColorSet::Kind::Unit;
        break;
      case dsl::ColorsetAst::Form::Labels:
        out.kind = ColorSet::Kind::Enum;
        out.labels = cs.labels;
        break;
      case dsl::ColorsetAst::Form::Single: {
        const int ref = find_colorset(cs.single);
        if (ref >= 0) {
          out = set_.colorsets[static_cast<std::size_t>(ref)];  // alias copies the definition
          out.name = cs.name;
        } else {
          out.kind = ColorSet::Kind::Enum;  // one-label enum, e.g. E = e
          out.labels = {cs.single};
        }
        break;
      }
      case dsl::ColorsetAst::Form::Product: {
        out.kind = ColorSet::Kind::Product;
        for (const auto& comp : cs.components) {
          const int ref = find_colorset(comp);
          if (ref < 0) {
            error("unknown colorset '" + comp + "' in product", cs.span, where);
            continue;
          }
          const auto kind = set_.colorsets[static_cast<std::size_t>(ref)].kind;
          if (kind == ColorSet::Kind::Product || kind == ColorSet::Kind::Unit) {
            error("product components must be scalar colorsets", cs.span, where);
            continue;
          }
          out.components.push_back(ref);
        }
        break;
      }
    }
    const int index = static_cast<int>(set_.colorsets.size());
    set_.colorsets.push_back(out);
    colorset_by_name_[cs.name] = index;
    if (out.kind == ColorSet::Kind::Enum)
      for (const auto& l : out.labels) label_owners_[l].push_back(index);
  }

  // ---- FSM ----

  void add_fsm(const dsl::FsmAst& ast) {
    const std::string where = "fsm " + ast.name;
    claim_model_name(ast.name, ast.span);

    FsmModel m;
    m.name = ast.name;
    Namespace ns{{}, this, where};

    m.params = build_params(ast.params, ns, where);
    m.inputs = build_inputs(ast.inputs, ns, where);
    for (const auto& v : ast.vars) {
      ns.claim(v.name, v.span);
      FsmVar var;
      var.name = v.name;
      var.type = type_from_name(v.type, v.span, where).value_or(TypeRef::real());
      var.init = default_for(var.type);
      if (v.init) {
        auto val = const_eval(*v.init, where + ", var " + v.name);
        if (val && literal_matches(*val, var.type, v.span, where)) var.init = *val;
      }
      m.vars.push_back(std::move(var));
    }

    // timers: period over params only
    CheckCtx param_cc;
    param_cc.where = where;
    param_cc.resolve = [&](const std::string& n, SourceSpan) -> std::optional<SymbolInfo> {
      for (std::size_t i = 0; i < m.params.size(); ++i)
        if (m.params[i].name == n)
          return SymbolInfo{RefSlot{RefSlot::Kind::Param, static_cast<int>(i)}, TypeRef::real()};
      return std::nullopt;
    };
    for (const auto& t : ast.timers) {
      ns.claim(t.name, t.span);
      FsmTimer timer;
      timer.name = t.name;
      timer.period = t.period;
      const auto ty = check_expr(timer.period, param_cc);
      if (ty && !ty->is_numeric()) error("timer period must be numeric", t.span, where);
      m.timers.push_back(std::move(timer));
    }

    std::map<std::string, int> state_index;
    for (const auto& s : ast.states) {
      if (state_index.count(s.name)) {
        error("duplicate state '" + s.name + "'", s.span, where);
        continue;
      }
      state_index[s.name] = static_cast<int>(m.states.size());
      m.states.push_back(s.name);
      if (s.init) {
        if (m.initial >= 0) error("more than one init state", s.span, where);
        m.initial = state_index[s.name];
      }
    }
    if (m.initial < 0 && !m.states.empty())
      error("no init state declared", ast.span, where);

    CheckCtx cc;
    cc.where = where;
    cc.resolve = [&](const std::string& n, SourceSpan) -> std::optional<SymbolInfo> {
      for (std::size_t i = 0; i < m.vars.size(); ++i)
        if (m.vars[i].name == n)
          return SymbolInfo{RefSlot{RefSlot::Kind::Var, static_cast<int>(i)}, m.vars[i].type};
      for (std::size_t i = 0; i < m.params.size(); ++i)
        if (m.params[i].name == n)
          return SymbolInfo{RefSlot{RefSlot::Kind::Param, static_cast<int>(i)}, TypeRef::real()};
      for (std::size_t i = 0; i < m.inputs.size(); ++i) {
        if (m.inputs[i].name != n) continue;
        if (m.inputs[i].is_event)
          return SymbolInfo{RefSlot{RefSlot::Kind::Pulse, static_cast<int>(i)}, TypeRef::boolean()};
        return SymbolInfo{RefSlot{RefSlot::Kind::Input, static_cast<int>(i)}, m.inputs[i].type};
      }
      for (std::size_t i = 0; i < m.timers.size(); ++i)
        if (m.timers[i].name == n)
          return SymbolInfo{
              RefSlot{RefSlot::Kind::Pulse, static_cast<int>(m.inputs.size() + i)},
              TypeRef::boolean()};
      return std::nullopt;
    };

    for (const auto& t : ast.transitions) {
      FsmTransition tr;
      tr.span = t.span;
      const auto from = state_index.find(t.from);
      const auto to = state_index.find(t.to);
      if (from == state_index.end())
        error("unknown state '" + t.from + "'", t.span, where);
      if (to == state_index.end())
        error("unknown state '" + t.to + "'", t.span, where);
      tr.from = from == state_index.end() ? -1 : from->second;
      tr.to = to == state_index.end() ? -1 : to->second;
      tr.guard = t.guard;
      const auto gt = check_expr(tr.guard, cc);
      if (gt && gt->base != TypeRef::Base::Bool)
        error("guard must be boolean", t.span, where);
      for (const auto& a : t.actions) {
        FsmAction action;
        if (a.is_reset) {
          action.kind = FsmAction::Kind::ResetTimer;
          action.target = -1;
          for (std::size_t i = 0; i < m.timers.size(); ++i)
            if (m.timers[i].name == a.target) action.target = static_cast<int>(i);
          if (action.target < 0) error("unknown timer '" + a.target + "'", a.span, where);
        } else {
          action.kind = FsmAction::Kind::Assign;
          action.target = -1;
          for (std::size_t i = 0; i < m.vars.size(); ++i)
            if (m.vars[i].name == a.target) action.target = static_cast<int>(i);
          if (action.target < 0) {
            error("assignment to undeclared signal '" + a.target + "'", a.span, where);
          } else {
            action.value = a.value;
            const auto vt = check_expr(action.value, cc);
            if (vt && !assignable(m.vars[static_cast<std::size_t>(action.target)].type, *vt))
              error("type error: cannot assign " + type_text(*vt) + " to " + a.target, a.span,
                    where);
          }
        }
        tr.actions.push_back(std::move(action));
      }
      if (tr.from >= 0 && tr.to >= 0) m.transitions.push_back(std::move(tr));
    }

    const int index = static_cast<int>(set_.fsms.size());
    set_.fsms.push_back(std::move(m));
    models_[ast.name] = {ModelKind::Fsm, index};
    if (!has_errors(diags_))
      for (auto& d : fsm_validate(set_.fsms.back())) diags_.push_back(std::move(d));
  }

  // ---- CPN ----

  void add_cpn(const dsl::CpnAst& ast) {
    const std::string where = "cpn " + ast.name;
    claim_model_name(ast.name, ast.span);

    CpnNet net;
    net.name = ast.name;
    net.colorsets = set_.colorsets;
    Namespace ns{{}, this, where};

    net.params = build_params(ast.params, ns, where);
    for (const auto& v : ast.vars) {
      ns.claim(v.name, v.span);
      CpnVarDecl var;
      var.name = v.name;
      var.colorset = find_colorset(v.colorset);
      if (var.colorset < 0) error("unknown colorset '" + v.colorset + "'", v.span, where);
      net.vars.push_back(std::move(var));
    }
    net.inputs = build_inputs(ast.inputs, ns, where);
    net.outputs = build_outputs(ast.outputs, ns, where);

    for (const auto& p : ast.places) {
      ns.claim(p.name, p.span);
      CpnPlace place;
      place.name = p.name;
      place.colorset = find_colorset(p.colorset);
      if (place.colorset < 0) {
        error("unknown colorset '" + p.colorset + "'", p.span, where);
        place.colorset = 0;
        if (set_.colorsets.empty()) continue;
      }
      const int arity = colorset_arity(net.colorsets, place.colorset);
      for (const auto& term : p.init) {
        if (term.count < 1) {
          error("token multiplicity must be >= 1", term.span, where);
          continue;
        }
        if (static_cast<int>(term.elems.size()) != arity) {
          error("colour mismatch: initial token arity does not match place " + p.name, term.span,
                where);
          continue;
        }
        Token tok;
        bool ok = true;
        for (std::size_t e = 0; e < term.elems.size(); ++e) {
          auto v = const_eval(term.elems[e], where + ", place " + p.name);
          const TypeRef ct =
              colorset_component_type(net.colorsets, place.colorset, static_cast<int>(e));
          if (!v || !literal_matches(*v, ct, term.span, where)) {
            ok = false;
            break;
          }
          tok.push_back(*v);
        }
        if (ok) place.init[tok] += term.count;
      }
      net.places.push_back(std::move(place));
    }

    auto var_index = [&](const std::string& n) {
      for (std::size_t i = 0; i < net.vars.size(); ++i)
        if (net.vars[i].name == n) return static_cast<int>(i);
      return -1;
    };
    auto input_index = [&](const std::string& n) {
      for (std::size_t i = 0; i < net.inputs.size(); ++i)
        if (net.inputs[i].name == n) return static_cast<int>(i);
      return -1;
    };

    CheckCtx cc;
    cc.where = where;
    cc.resolve = [&](const std::string& n, SourceSpan) -> std::optional<SymbolInfo> {
      const int v = var_index(n);
      if (v >= 0)
        return SymbolInfo{
            RefSlot{RefSlot::Kind::Binding, v},
            colorset_scalar_type(net.colorsets, net.vars[static_cast<std::size_t>(v)].colorset)};
      for (std::size_t i = 0; i < net.params.size(); ++i)
        if (net.params[i].name == n)
          return SymbolInfo{RefSlot{RefSlot::Kind::Param, static_cast<int>(i)}, TypeRef::real()};
      return std::nullopt;
    };

    for (const auto& t : ast.transitions) {
      CpnTransition tr;
      tr.name = t.name;
      tr.span = t.span;
      const std::string twhere = where + ", transition " + t.name;

      for (const auto& arc : t.in_arcs) {
        CpnInArc in;
        in.place = net.place_index(arc.place);
        if (in.place < 0) {
          error("unknown place '" + arc.place + "'", arc.span, twhere);
          continue;
        }
        const int colorset = net.places[static_cast<std::size_t>(in.place)].colorset;
        const int arity = colorset_arity(net.colorsets, colorset);
        if (static_cast<int>(arc.pattern.size()) != arity) {
          error("colour mismatch: pattern arity does not match place " + arc.place, arc.span,
                twhere);
          continue;
        }
        bool ok = true;
        for (std::size_t e = 0; e < arc.pattern.size(); ++e) {
          const TypeRef ct = colorset_component_type(net.colorsets, colorset, static_cast<int>(e));
          CpnPatternElem elem;
          const Expr& pe = arc.pattern[e];
          const int v = pe.op == Expr::Op::Ref ? var_index(pe.name) : -1;
          if (v >= 0) {
            elem.is_var = true;
            elem.var = v;
            const TypeRef vt = colorset_scalar_type(
                net.colorsets, net.vars[static_cast<std::size_t>(v)].colorset);
            if (!(vt == ct)) {
              error("colour mismatch: variable " + pe.name + " does not match place component",
                    pe.span, twhere);
              ok = false;
            }
          } else {
            auto val = const_eval(pe, twhere);
            if (!val || !literal_matches(*val, ct, pe.span, twhere)) {
              ok = false;
            } else {
              elem.is_var = false;
              elem.lit = *val;
            }
          }
          in.elems.push_back(std::move(elem));
        }
        if (ok) tr.in_arcs.push_back(std::move(in));
      }

      for (const auto& arc : t.event_arcs) {
        CpnEventArc ev;
        ev.input = input_index(arc.input);
        if (ev.input < 0) {
          error("unknown input '" + arc.input + "'", arc.span, twhere);
          continue;
        }
        const auto& decl = net.inputs[static_cast<std::size_t>(ev.input)];
        if (arc.binding) {
          if (decl.is_event) {
            error("event input '" + decl.name + "' carries no payload to bind", arc.span, twhere);
            continue;
          }
          const int v = arc.binding->op == Expr::Op::Ref ? var_index(arc.binding->name) : -1;
          if (v >= 0) {
            ev.bind_var = v;
            const TypeRef vt = colorset_scalar_type(
                net.colorsets, net.vars[static_cast<std::size_t>(v)].colorset);
            if (!assignable(vt, decl.type))
              error("colour mismatch: payload of " + decl.name + " does not match variable " +
                        arc.binding->name,
                    arc.span, twhere);
          } else {
            auto val = const_eval(*arc.binding, twhere);
            if (val && literal_matches(*val, decl.type, arc.span, twhere)) ev.match = *val;
          }
        }
        tr.event_arcs.push_back(std::move(ev));
      }

      if (t.guard) {
        Expr g = *t.guard;
        const auto gt = check_expr(g, cc);
        if (gt && gt->base != TypeRef::Base::Bool) error("guard must be boolean", t.span, twhere);
        tr.guard = std::move(g);
      }

      for (const auto& arc : t.out_arcs) {
        CpnOutArc out;
        out.place = net.place_index(arc.place);
        if (out.place < 0) {
          error("unknown place '" + arc.place + "'", arc.span, twhere);
          continue;
        }
        const int colorset = net.places[static_cast<std::size_t>(out.place)].colorset;
        const int arity = colorset_arity(net.colorsets, colorset);
        if (static_cast<int>(arc.elems.size()) != arity) {
          error("colour mismatch: output arc arity does not match place " + arc.place, arc.span,
                twhere);
          continue;
        }
        for (std::size_t e = 0; e < arc.elems.size(); ++e) {
          Expr elem = arc.elems[e];
          const auto et = check_expr(elem, cc);
          const TypeRef ct = colorset_component_type(net.colorsets, colorset, static_cast<int>(e));
          if (et && !assignable(ct, *et))
            error("colour mismatch: output arc component does not match place " + arc.place,
                  elem.span, twhere);
          out.elems.push_back(std::move(elem));
        }
        tr.out_arcs.push_back(std::move(out));
      }

      for (const auto& em : t.emits) {
        CpnEmit emit;
        emit.output = -1;
        for (std::size_t i = 0; i < net.outputs.size(); ++i)
          if (net.outputs[i].name == em.output) emit.output = static_cast<int>(i);
        if (emit.output < 0) {
          error("unknown output '" + em.output + "'", em.span, twhere);
          continue;
        }
        const auto& decl = net.outputs[static_cast<std::size_t>(emit.output)];
        if (em.payload) {
          if (!decl.has_payload) {
            error("output '" + decl.name + "' takes no payload", em.span, twhere);
          } else {
            Expr p = *em.payload;
            const auto pt = check_expr(p, cc);
            if (pt && !assignable(decl.type, *pt))
              error("type error: payload of " + decl.name, em.span, twhere);
            emit.payload = std::move(p);
          }
        } else if (decl.has_payload) {
          error("output '" + decl.name + "' requires a payload", em.span, twhere);
        }
        tr.emits.push_back(std::move(emit));
      }

      net.transitions.push_back(std::move(tr));
    }

    const int index = static_cast<int>(set_.cpns.size());
    set_.cpns.push_back(std::move(net));
    models_[ast.name] = {ModelKind::Cpn, index};
    if (!has_errors(diags_))
      for (auto& d : cpn_validate(set_.cpns.back())) diags_.push_back(std::move(d));
  }

  // ---- HA ----

  void add_ha(const dsl::HaAst& ast) {
    const std::string where = "ha " + ast.name;
    claim_model_name(ast.name, ast.span);

    HaModel m;
    m.name = ast.name;
    Namespace ns{{}, this, where};

    m.params = build_params(ast.params, ns, where);
    m.inputs = build_inputs(ast.inputs, ns, where);
    m.outputs = build_outputs(ast.outputs, ns, where);
    for (const auto& v : ast.vars) {
      ns.claim(v.name, v.span);
      HaVar var;
      var.name = v.name;
      if (v.init) var.init = const_real(*v.init, where + ", var " + v.name).value_or(0.0);
      m.vars.push_back(std::move(var));
    }

    auto var_index = [&](const std::string& n) {
      for (std::size_t i = 0; i < m.vars.size(); ++i)
        if (m.vars[i].name == n) return static_cast<int>(i);
      return -1;
    };
    auto input_index = [&](const std::string& n) {
      for (std::size_t i = 0; i < m.inputs.size(); ++i)
        if (m.inputs[i].name == n) return static_cast<int>(i);
      return -1;
    };

    CheckCtx cc;
    cc.where = where;
    cc.resolve = [&](const std::string& n, SourceSpan span) -> std::optional<SymbolInfo> {
      const int v = var_index(n);
      if (v >= 0) return SymbolInfo{RefSlot{RefSlot::Kind::Var, v}, TypeRef::real()};
      for (std::size_t i = 0; i < m.params.size(); ++i)
        if (m.params[i].name == n)
          return SymbolInfo{RefSlot{RefSlot::Kind::Param, static_cast<int>(i)}, TypeRef::real()};
      const int in = input_index(n);
      if (in >= 0) {
        if (m.inputs[static_cast<std::size_t>(in)].is_event) {
          error("event input '" + n + "' can only be used as an edge trigger", span, where);
          return SymbolInfo{RefSlot{RefSlot::Kind::Unresolved, -1}, TypeRef::boolean()};
        }
        return SymbolInfo{RefSlot{RefSlot::Kind::Input, in},
                          m.inputs[static_cast<std::size_t>(in)].type};
      }
      return std::nullopt;
    };

    std::map<std::string, int> loc_index;
    for (const auto& loc : ast.locations) {
      if (loc_index.count(loc.name)) {
        error("duplicate location '" + loc.name + "'", loc.span, where);
        continue;
      }
      HaLocation out;
      out.name = loc.name;
      out.flows.assign(m.vars.size(), Expr::literal(Value::real(0.0)));
      std::set<int> flowed;
      for (const auto& f : loc.flows) {
        const int v = var_index(f.var);
        if (v < 0) {
          error("unknown variable '" + f.var + "' in flow", f.span, where);
          continue;
        }
        if (!flowed.insert(v).second) {
          error("duplicate flow for variable '" + f.var + "'", f.span, where);
          continue;
        }
        Expr rate = f.rate;
        const auto rt = check_expr(rate, cc);
        if (rt && !rt->is_numeric()) error("flow rate must be numeric", f.span, where);
        out.flows[static_cast<std::size_t>(v)] = std::move(rate);
      }
      if (loc.invariant) {
        Expr inv = *loc.invariant;
        const auto it = check_expr(inv, cc);
        if (it && it->base != TypeRef::Base::Bool) error("invariant must be boolean", loc.span, where);
        out.invariant = std::move(inv);
      }
      loc_index[loc.name] = static_cast<int>(m.locations.size());
      m.locations.push_back(std::move(out));
      if (loc.init) {
        if (m.initial >= 0) error("more than one init location", loc.span, where);
        m.initial = loc_index[loc.name];
      }
    }
    if (m.initial < 0 && !m.locations.empty()) error("no init location declared", ast.span, where);

    for (const auto& e : ast.edges) {
      HaEdge edge;
      edge.span = e.span;
      const auto from = loc_index.find(e.from);
      const auto to = loc_index.find(e.to);
      if (from == loc_index.end()) error("unknown location '" + e.from + "'", e.span, where);
      if (to == loc_index.end()) error("unknown location '" + e.to + "'", e.span, where);
      edge.from = from == loc_index.end() ? -1 : from->second;
      edge.to = to == loc_index.end() ? -1 : to->second;
      edge.urgent = e.urgent;
      if (e.trigger) {
        edge.trigger = input_index(*e.trigger);
        if (edge.trigger < 0) error("unknown input '" + *e.trigger + "'", e.span, where);
      }
      if (e.guard) {
        Expr g = *e.guard;
        const auto gt = check_expr(g, cc);
        if (gt && gt->base != TypeRef::Base::Bool) error("guard must be boolean", e.span, where);
        edge.guard = std::move(g);
      }
      if (edge.urgent && !edge.guard && edge.trigger < 0)
        error("urgent edge needs a guard", e.span, where);
      for (const auto& a : e.resets) {
        const int v = var_index(a.target);
        if (v < 0) {
          error("reset of undeclared variable '" + a.target + "'", a.span, where);
          continue;
        }
        Expr rhs = a.value;
        const auto rt = check_expr(rhs, cc);
        if (rt && !rt->is_numeric()) error("reset value must be numeric", a.span, where);
        edge.resets.emplace_back(v, std::move(rhs));
      }
      for (const auto& em : e.emits) {
        HaEmit emit;
        emit.output = -1;
        for (std::size_t i = 0; i < m.outputs.size(); ++i)
          if (m.outputs[i].name == em.output) emit.output = static_cast<int>(i);
        if (emit.output < 0) {
          error("unknown output '" + em.output + "'", em.span, where);
          continue;
        }
        const auto& decl = m.outputs[static_cast<std::size_t>(emit.output)];
        if (em.payload) {
          if (!decl.has_payload) {
            error("output '" + decl.name + "' takes no payload", em.span, where);
          } else {
            Expr p = *em.payload;
            const auto pt = check_expr(p, cc);
            if (pt && !assignable(decl.type, *pt))
              error("type error: payload of " + decl.name, em.span, where);
            emit.payload = std::move(p);
          }
        } else if (decl.has_payload) {
          error("output '" + decl.name + "' requires a payload", em.span, where);
        }
        edge.emits.push_back(std::move(emit));
      }
      if (edge.from >= 0 && edge.to >= 0) m.edges.push_back(std::move(edge));
    }

    const int index = static_cast<int>(set_.has.size());
    set_.has.push_back(std::move(m));
    models_[ast.name] = {ModelKind::Ha, index};
    if (!has_errors(diags_))
      for (auto& d : ha_validate(set_.has.back())) diags_.push_back(std::move(d));
  }

  void claim_model_name(const std::string& name, SourceSpan span) {
    if (models_.count(name) || dtc_by_name_.count(name))
      error("duplicate model name '" + name + "'", span);
  }

  // ---- producible / consumable lookups used by dtc wiring ----

  struct Produced {
    bool found = false;
    bool has_payload = false;
    TypeRef type;
  };

  Produced producer_info(const InstanceSpec& inst, const std::string& name) const {
    Produced p;
    switch (inst.kind) {
      case ModelKind::Fsm: {
        const auto& m = set_.fsms[static_cast<std::size_t>(inst.model)];
        for (const auto& v : m.vars)
          if (v.name == name) return Produced{true, true, v.type};
        break;
      }
      case ModelKind::Cpn: {
        const auto& m = set_.cpns[static_cast<std::size_t>(inst.model)];
        for (const auto& o : m.outputs)
          if (o.name == name) return Produced{true, o.has_payload, o.type};
        break;
      }
      case ModelKind::Ha: {
        const auto& m = set_.has[static_cast<std::size_t>(inst.model)];
        for (const auto& o : m.outputs)
          if (o.name == name) return Produced{true, o.has_payload, o.type};
        break;
      }
    }
    return p;
  }

  struct Consumed {
    bool found = false;
    bool is_event = false;
    TypeRef type;
  };

  Consumed consumer_info(const InstanceSpec& inst, const std::string& name) const {
    auto scan = [&](const std::vector<InputSpec>& inputs) {
      for (const auto& in : inputs)
        if (in.name == name) return Consumed{true, in.is_event, in.type};
      return Consumed{};
    };
    switch (inst.kind) {
      case ModelKind::Fsm: return scan(set_.fsms[static_cast<std::size_t>(inst.model)].inputs);
      case ModelKind::Cpn: return scan(set_.cpns[static_cast<std::size_t>(inst.model)].inputs);
      case ModelKind::Ha: return scan(set_.has[static_cast<std::size_t>(inst.model)].inputs);
    }
    return {};
  }

  bool param_exists(const InstanceSpec& inst, const std::string& name) const {
    auto scan = [&](const std::vector<ParamSpec>& params) {
      for (const auto& p : params)
        if (p.name == name) return true;
      return false;
    };
    switch (inst.kind) {
      case ModelKind::Fsm: return scan(set_.fsms[static_cast<std::size_t>(inst.model)].params);
      case ModelKind::Cpn: return scan(set_.cpns[static_cast<std::size_t>(inst.model)].params);
      case ModelKind::Ha: return scan(set_.has[static_cast<std::size_t>(inst.model)].params);
    }
    return false;
  }

  // ---- DTC ----

  void add_dtc(const dsl::DtcAst& ast) {
    const std::string where = "dtc " + ast.name;
    claim_model_name(ast.name, ast.span);

    DtcSpec dtc;
    dtc.name = ast.name;

    std::set<std::string> ids;
    for (const auto& inst : ast.instances) {
      if (!ids.insert(inst.id).second) {
        error("duplicate instance id '" + inst.id + "'", inst.span, where);
        continue;
      }
      const auto it = models_.find(inst.model);
      if (it == models_.end()) {
        error("unknown model '" + inst.model + "'", inst.span, where);
        continue;
      }
      InstanceSpec spec;
      spec.id = inst.id;
      spec.kind = it->second.first;
      spec.model = it->second.second;
      for (const auto& o : inst.overrides) {
        const auto v = const_real(o.value, where + ", instance " + inst.id);
        if (!param_exists(spec, o.name))
          error("unknown parameter '" + o.name + "' of model " + inst.model, o.span, where);
        else if (v)
          spec.param_overrides.emplace_back(o.name, *v);
      }
      dtc.instances.push_back(std::move(spec));
    }

    for (const auto& w : ast.wires) {
      WireSpec wire;
      wire.from_instance = dtc.instance_index(w.from_instance);
      wire.to_instance = dtc.instance_index(w.to_instance);
      if (wire.from_instance < 0) {
        error("unknown instance '" + w.from_instance + "'", w.span, where);
        continue;
      }
      if (wire.to_instance < 0) {
        error("unknown instance '" + w.to_instance + "'", w.span, where);
        continue;
      }
      const auto& from = dtc.instances[static_cast<std::size_t>(wire.from_instance)];
      const auto& to = dtc.instances[static_cast<std::size_t>(wire.to_instance)];
      const Produced p = producer_info(from, w.from_name);
      const Consumed c = consumer_info(to, w.to_name);
      if (!p.found) {
        error("instance " + w.from_instance + " produces no signal or event named '" +
                  w.from_name + "'",
              w.span, where);
        continue;
      }
      if (!c.found) {
        error("instance " + w.to_instance + " has no input named '" + w.to_name + "'", w.span,
              where);
        continue;
      }
      if (!c.is_event) {
        if (!p.has_payload)
          error("wire carries no payload for valued input " + w.to_name, w.span, where);
        else if (!assignable(c.type, p.type))
          error("type error: wire " + w.from_name + " -> " + w.to_name, w.span, where);
      }
      wire.from_name = w.from_name;
      wire.to_name = w.to_name;
      dtc.wires.push_back(std::move(wire));
    }

    std::set<std::string> port_names;
    for (const auto& p : ast.ports) {
      if (reserved_name(p.name) || p.name == "step") {
        error("port name '" + p.name + "' is reserved", p.span, where);
        continue;
      }
      if (!port_names.insert(p.name).second) {
        error("duplicate port name '" + p.name + "'", p.span, where);
        continue;
      }
      PortSpec port;
      port.name = p.name;
      std::optional<TypeRef> port_type;
      bool ok = true;
      for (const auto& ep : p.endpoints) {
        const int inst = dtc.instance_index(ep.instance);
        if (inst < 0) {
          error("unknown instance '" + ep.instance + "'", ep.span, where);
          ok = false;
          continue;
        }
        const auto& spec = dtc.instances[static_cast<std::size_t>(inst)];
        if (p.is_input) {
          const Consumed c = consumer_info(spec, ep.name);
          if (!c.found) {
            error("instance " + ep.instance + " has no input named '" + ep.name + "'", ep.span,
                  where);
            ok = false;
            continue;
          }
          if (!c.is_event) {
            if (port_type && !(*port_type == c.type)) {
              error("input port '" + p.name + "' fans out to differently typed inputs", ep.span,
                    where);
              ok = false;
            }
            port_type = c.type;
          }
        } else {
          const Produced pr = producer_info(spec, ep.name);
          if (!pr.found) {
            error("instance " + ep.instance + " produces no signal or event named '" + ep.name +
                      "'",
                  ep.span, where);
            ok = false;
            continue;
          }
          if (pr.has_payload) port_type = pr.type;
        }
        port.endpoints.emplace_back(inst, ep.name);
      }
      if (!ok) continue;
      if (p.is_input) {
        dtc.inputs.push_back(port);
        port_types_[{static_cast<int>(set_.dtcs.size()), p.name}] = port_type;
      } else {
        if (port.endpoints.size() != 1) {
          error("output port '" + p.name + "' needs exactly one source", p.span, where);
          continue;
        }
        dtc.outputs.push_back(port);
        port_types_[{static_cast<int>(set_.dtcs.size()), p.name}] = port_type;
      }
    }

    const int index = static_cast<int>(set_.dtcs.size());
    set_.dtcs.push_back(std::move(dtc));
    dtc_by_name_[ast.name] = index;
  }

  // ---- system ----

  void add_system(const dsl::SystemAst& ast) {
    const std::string where = "system " + ast.name;
    if (set_.find_system(ast.name) >= 0) {
      error("duplicate system '" + ast.name + "'", ast.span, where);
      return;
    }

    SystemSpec sys;
    sys.name = ast.name;
    if (ast.step) sys.config.step = *ast.step;
    if (ast.horizon) sys.config.horizon = *ast.horizon;
    if (ast.sample) sys.config.sample = *ast.sample;
    if (ast.substep) sys.config.substep = *ast.substep;

    if (sys.config.step.nanos <= 0) error("step must be positive", ast.span, where);
    if (ast.horizon && sys.config.horizon.nanos <= 0) error("empty horizon", ast.span, where);
    if (sys.config.step.nanos > 0) {
      if (ast.horizon && sys.config.horizon.nanos % sys.config.step.nanos != 0)
        error("horizon must be a multiple of the step", ast.span, where);
      if (sys.config.sample.nanos % sys.config.step.nanos != 0)
        error("sample period must be a multiple of the step", ast.span, where);
      if (sys.config.substep.nanos <= 0 || sys.config.step.nanos % sys.config.substep.nanos != 0)
        error("step must be a multiple of the substep", ast.span, where);
    }

    std::set<std::string> ids;
    for (const auto& c : ast.components) {
      if (c.id == "system" || c.id == "scenario") {
        error("component id '" + c.id + "' is reserved", c.span, where);
        continue;
      }
      if (!ids.insert(c.id).second) {
        error("duplicate component id '" + c.id + "'", c.span, where);
        continue;
      }
      const auto it = dtc_by_name_.find(c.dtc);
      if (it == dtc_by_name_.end()) {
        error("unknown dtc '" + c.dtc + "'", c.span, where);
        continue;
      }
      ComponentSpec comp;
      comp.id = c.id;
      comp.dtc = it->second;
      const auto& dtc = set_.dtcs[static_cast<std::size_t>(comp.dtc)];
      for (const auto& o : c.overrides) {
        const auto dot = o.name.find('.');
        bool known = false;
        if (dot != std::string::npos) {
          const int inst = dtc.instance_index(o.name.substr(0, dot));
          if (inst >= 0)
            known = param_exists(dtc.instances[static_cast<std::size_t>(inst)],
                                 o.name.substr(dot + 1));
        }
        const auto v = const_real(o.value, where + ", component " + c.id);
        if (!known)
          error("unknown parameter '" + o.name + "' of dtc " + c.dtc, o.span, where);
        else if (v)
          comp.overrides.emplace_back(o.name, *v);
      }
      sys.components.push_back(std::move(comp));
    }

    auto component_index = [&](const std::string& id) {
      for (std::size_t i = 0; i < sys.components.size(); ++i)
        if (sys.components[i].id == id) return static_cast<int>(i);
      return -1;
    };
    auto port_of = [&](int comp, const std::string& port, bool input) -> const PortSpec* {
      const auto& dtc = set_.dtcs[static_cast<std::size_t>(
          sys.components[static_cast<std::size_t>(comp)].dtc)];
      const auto& ports = input ? dtc.inputs : dtc.outputs;
      for (const auto& p : ports)
        if (p.name == port) return &p;
      return nullptr;
    };

    std::set<std::string> channel_ids;
    for (const auto& ch : ast.channels) {
      if (!channel_ids.insert(ch.id).second) {
        error("duplicate channel id '" + ch.id + "'", ch.span, where);
        continue;
      }
      ChannelSpec spec;
      spec.id = ch.id;
      spec.from_component = component_index(ch.from_component);
      spec.to_component = component_index(ch.to_component);
      if (spec.from_component < 0) {
        error("unknown component '" + ch.from_component + "'", ch.span, where);
        continue;
      }
      if (spec.to_component < 0) {
        error("unknown component '" + ch.to_component + "'", ch.span, where);
        continue;
      }
      if (!port_of(spec.from_component, ch.from_port, false)) {
        error("component " + ch.from_component + " has no output port '" + ch.from_port + "'",
              ch.span, where);
        continue;
      }
      if (!port_of(spec.to_component, ch.to_port, true)) {
        error("component " + ch.to_component + " has no input port '" + ch.to_port + "'", ch.span,
              where);
        continue;
      }
      if (ch.latency < 1) {
        error("channel latency must be at least 1 macro step", ch.span, where);
        continue;
      }
      if (ch.latency > 1'000'000) {
        error("channel latency is unreasonably large", ch.span, where);
        continue;
      }
      spec.from_port = ch.from_port;
      spec.to_port = ch.to_port;
      spec.latency = static_cast<int>(ch.latency);
      sys.channels.push_back(std::move(spec));
    }

    for (const auto& st : ast.stimuli) {
      StimulusSpec spec;
      spec.at = st.at;
      spec.component = component_index(st.component);
      if (spec.component < 0) {
        error("unknown component '" + st.component + "'", st.span, where);
        continue;
      }
      const PortSpec* port = port_of(spec.component, st.port, true);
      if (!port) {
        error("component " + st.component + " has no input port '" + st.port + "'", st.span,
              where);
        continue;
      }
      spec.port = st.port;
      if (st.payload) {
        auto v = const_eval(*st.payload, where);
        if (!v) continue;
        const auto ty = port_types_.find(
            {sys.components[static_cast<std::size_t>(spec.component)].dtc, st.port});
        if (ty != port_types_.end() && ty->second) {
          if (!literal_matches(*v, *ty->second, st.span, where)) continue;
        }
        spec.payload = *v;
      }
      if (ast.horizon) {
        if (spec.at > *ast.horizon)
          error("stimulus beyond the horizon is never delivered", st.span, where);
        else if (spec.at == *ast.horizon)
          warning("stimulus at the horizon is never delivered", st.span, where);
      }
      sys.stimuli.push_back(std::move(spec));
    }
    std::stable_sort(sys.stimuli.begin(), sys.stimuli.end(),
                     [](const StimulusSpec& a, const StimulusSpec& b) { return a.at < b.at; });

    set_.systems.push_back(std::move(sys));
  }

  ModelSet set_;
  std::vector<Diagnostic> diags_;
  std::map<std::string, int> colorset_by_name_;
  std::map<std::string, std::vector<int>> label_owners_;
  std::map<std::string, std::pair<ModelKind, int>> models_;
  std::map<std::string, int> dtc_by_name_;
  std::map<std::pair<int, std::string>, std::optional<TypeRef>> port_types_;
};

}  // namespace compile_detail

// Name resolution, type checking and spec construction for a parsed document.
inline CompileResult compile_document(const dsl::Document& doc) {
  compile_detail::Compiler c;
  return c.run(doc);
}

inline CompileResult parse_and_compile(std::string_view text) {
  const auto pr = dsl::parse_model(text);
  if (!pr.ok()) {
    CompileResult r;
    r.diagnostics = pr.diagnostics;
    r.ok = false;
    return r;
  }
  return compile_document(*pr.document);
}

// Rewrites the default of "model.param" inside a parsed document, for writing
// calibrated documents back out through the canonical printer.
inline bool set_document_param(dsl::Document& doc, std::string_view path, double value) {
  const auto dot = path.find('.');
  if (dot == std::string_view::npos) return false;
  const std::string_view model = path.substr(0, dot);
  const std::string_view param = path.substr(dot + 1);
  auto patch_params = [&](std::vector<dsl::ParamAst>& params) {
    for (auto& p : params) {
      if (p.name == param) {
        p.value = Expr::literal(Value::real(value));
        return true;
      }
    }
    return false;
  };
  for (auto& block : doc.blocks) {
    if (auto* fsm = std::get_if<dsl::FsmAst>(&block)) {
      if (fsm->name == model && patch_params(fsm->params)) return true;
    } else if (auto* cpn = std::get_if<dsl::CpnAst>(&block)) {
      if (cpn->name == model && patch_params(cpn->params)) return true;
    } else if (auto* ha = std::get_if<dsl::HaAst>(&block)) {
      if (ha->name == model && patch_params(ha->params)) return true;
    }
  }
  return false;
}

}  // namespace twinkernel
