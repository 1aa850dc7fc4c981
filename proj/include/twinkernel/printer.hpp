#pragma once
// Canonical printer for .twin documents: deterministic layout, items grouped
// by kind (declaration order preserved within a kind), comments dropped,
// minimal parentheses. parse(print(parse(t))) is structurally parse(t).

#include <string>

#include "twinkernel/ast.hpp"

namespace twinkernel::dsl {

namespace print_detail {

inline int precedence(Expr::Op op) {
  switch (op) {
    case Expr::Op::Or: return 1;
    case Expr::Op::And: return 2;
    case Expr::Op::Eq:
    case Expr::Op::Ne:
    case Expr::Op::Lt:
    case Expr::Op::Le:
    case Expr::Op::Gt:
    case Expr::Op::Ge: return 3;
    case Expr::Op::Add:
    case Expr::Op::Sub: return 4;
    case Expr::Op::Mul:
    case Expr::Op::Div: return 5;
    case Expr::Op::Not:
    case Expr::Op::Neg: return 6;
    default: return 7;
  }
}

inline std::string_view op_text(Expr::Op op) {
  switch (op) {
    case Expr::Op::Or: return "or";
    case Expr::Op::And: return "and";
    case Expr::Op::Eq: return "==";
    case Expr::Op::Ne: return "!=";
    case Expr::Op::Lt: return "<";
    case Expr::Op::Le: return "<=";
    case Expr::Op::Gt: return ">";
    case Expr::Op::Ge: return ">=";
    case Expr::Op::Add: return "+";
    case Expr::Op::Sub: return "-";
    case Expr::Op::Mul: return "*";
    case Expr::Op::Div: return "/";
    default: return "?";
  }
}

inline void print_expr(std::string& out, const Expr& e, int parent_prec) {
  const int prec = precedence(e.op);
  switch (e.op) {
    case Expr::Op::Lit:
      switch (e.lit.kind()) {
        case Value::Kind::Bool: out += e.lit.as_bool() ? "true" : "false"; break;
        case Value::Kind::Int: out += format_int(e.lit.as_int()); break;
        case Value::Kind::Real: out += format_real(e.lit.as_real()); break;
        case Value::Kind::Label: out += e.lit.as_label(); break;
      }
      return;
    case Expr::Op::Ref: out += e.name; return;
    case Expr::Op::Abs:
    case Expr::Op::Min:
    case Expr::Op::Max: {
      out += e.op == Expr::Op::Abs ? "abs" : (e.op == Expr::Op::Min ? "min" : "max");
      out += '(';
      for (std::size_t i = 0; i < e.args.size(); ++i) {
        if (i) out += ", ";
        print_expr(out, e.args[i], 0);
      }
      out += ')';
      return;
    }
    case Expr::Op::Not:
    case Expr::Op::Neg: {
      const bool parens = prec < parent_prec;
      if (parens) out += '(';
      out += e.op == Expr::Op::Not ? "!" : "-";
      print_expr(out, e.args[0], prec);
      if (parens) out += ')';
      return;
    }
    default: {
      const bool parens = prec < parent_prec;
      if (parens) out += '(';
      print_expr(out, e.args[0], prec);
      out += ' ';
      out += op_text(e.op);
      out += ' ';
      // right operand parenthesized on equal precedence: a - (b - c)
      print_expr(out, e.args[1], prec + 1);
      if (parens) out += ')';
      return;
    }
  }
}

inline std::string expr_text(const Expr& e) {
  std::string out;
  print_expr(out, e, 0);
  return out;
}

inline void print_actions(std::string& out, const std::vector<ActionAst>& actions) {
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (i) out += ", ";
    if (actions[i].is_reset) {
      out += "reset " + actions[i].target;
    } else {
      out += actions[i].target + " := " + expr_text(actions[i].value);
    }
  }
}

inline void print_emits(std::string& out, const std::vector<EmitAst>& emits) {
  for (std::size_t i = 0; i < emits.size(); ++i) {
    if (i) out += ", ";
    out += emits[i].output;
    if (emits[i].payload) out += "(" + expr_text(*emits[i].payload) + ")";
  }
}

inline void print_pattern(std::string& out, const std::vector<Expr>& elems) {
  if (elems.size() == 1) {
    out += expr_text(elems[0]);
    return;
  }
  out += '(';
  for (std::size_t i = 0; i < elems.size(); ++i) {
    if (i) out += ", ";
    out += expr_text(elems[i]);
  }
  out += ')';
}

struct Printer {
  std::string out;

  void line(const std::string& s) { out += s + "\n"; }

  void operator()(const ColorsetAst& cs) {
    std::string rhs;
    switch (cs.form) {
      case ColorsetAst::Form::Primitive: rhs = cs.primitive; break;
      case ColorsetAst::Form::Single: rhs = cs.single; break;
      case ColorsetAst::Form::Labels:
        for (std::size_t i = 0; i < cs.labels.size(); ++i) {
          if (i) rhs += " | ";
          rhs += cs.labels[i];
        }
        break;
      case ColorsetAst::Form::Product:
        for (std::size_t i = 0; i < cs.components.size(); ++i) {
          if (i) rhs += " * ";
          rhs += cs.components[i];
        }
        break;
    }
    line("colorset " + cs.name + " = " + rhs + ";");
  }

  void print_params(const std::vector<ParamAst>& params) {
    for (const auto& p : params) line("  param " + p.name + " = " + expr_text(p.value) + ";");
  }
  void print_inputs(const std::vector<InputAst>& inputs) {
    for (const auto& in : inputs) {
      std::string s = "  input " + in.name + ": " + in.type;
      if (in.init) s += " = " + expr_text(*in.init);
      line(s + ";");
    }
  }
  void print_outputs(const std::vector<OutputAst>& outputs) {
    for (const auto& o : outputs) line("  output " + o.name + ": " + o.type + ";");
  }

  void operator()(const FsmAst& fsm) {
    line("fsm " + fsm.name + " {");
    print_params(fsm.params);
    print_inputs(fsm.inputs);
    for (const auto& v : fsm.vars)
      line("  var " + v.name + ": " + v.type + " = " + expr_text(*v.init) + ";");
    for (const auto& t : fsm.timers) line("  timer " + t.name + " = " + expr_text(t.period) + ";");
    for (const auto& s : fsm.states) line("  state " + s.name + (s.init ? " init;" : ";"));
    for (const auto& t : fsm.transitions) {
      std::string s = "  on " + expr_text(t.guard) + " from " + t.from + " to " + t.to;
      if (!t.actions.empty()) {
        s += " do ";
        print_actions(s, t.actions);
      }
      line(s + ";");
    }
    line("}");
  }

  void operator()(const CpnAst& cpn) {
    line("cpn " + cpn.name + " {");
    print_params(cpn.params);
    for (const auto& v : cpn.vars) line("  var " + v.name + ": " + v.colorset + ";");
    print_inputs(cpn.inputs);
    print_outputs(cpn.outputs);
    for (const auto& p : cpn.places) {
      std::string s = "  place " + p.name + ": " + p.colorset;
      if (!p.init.empty()) {
        s += " init ";
        for (std::size_t i = 0; i < p.init.size(); ++i) {
          if (i) s += " + ";
          s += format_int(p.init[i].count);
          if (!p.init[i].elems.empty()) {
            s += "'(";
            for (std::size_t e = 0; e < p.init[i].elems.size(); ++e) {
              if (e) s += ", ";
              s += expr_text(p.init[i].elems[e]);
            }
            s += ")";
          }
        }
      }
      line(s + ";");
    }
    for (const auto& t : cpn.transitions) {
      line("  trans " + t.name + " {");
      for (const auto& arc : t.in_arcs) {
        std::string s = "    in " + arc.place;
        if (!arc.pattern.empty()) {
          s += ": ";
          print_pattern(s, arc.pattern);
        }
        line(s + ";");
      }
      for (const auto& arc : t.event_arcs) {
        std::string s = "    when " + arc.input;
        if (arc.binding) s += ": " + expr_text(*arc.binding);
        line(s + ";");
      }
      if (t.guard) line("    guard " + expr_text(*t.guard) + ";");
      for (const auto& arc : t.out_arcs) {
        std::string s = "    out " + arc.place;
        if (!arc.elems.empty()) {
          s += ": ";
          print_pattern(s, arc.elems);
        }
        line(s + ";");
      }
      for (const auto& em : t.emits) {
        std::string s = "    emit " + em.output;
        if (em.payload) s += "(" + expr_text(*em.payload) + ")";
        line(s + ";");
      }
      line("  }");
    }
    line("}");
  }

  void operator()(const HaAst& ha) {
    line("ha " + ha.name + " {");
    print_params(ha.params);
    print_inputs(ha.inputs);
    print_outputs(ha.outputs);
    for (const auto& v : ha.vars) line("  var " + v.name + " = " + expr_text(*v.init) + ";");
    for (const auto& loc : ha.locations) {
      line("  loc " + loc.name + (loc.init ? " init {" : " {"));
      for (const auto& f : loc.flows) line("    flow " + f.var + "' = " + expr_text(f.rate) + ";");
      if (loc.invariant) line("    inv " + expr_text(*loc.invariant) + ";");
      line("  }");
    }
    for (const auto& e : ha.edges) {
      std::string s = "  edge " + e.from + " -> " + e.to;
      if (e.trigger) s += " on " + *e.trigger;
      if (e.guard) s += " if " + expr_text(*e.guard);
      if (e.urgent) s += " urgent";
      if (!e.resets.empty()) {
        s += " do ";
        print_actions(s, e.resets);
      }
      if (!e.emits.empty()) {
        s += " emit ";
        print_emits(s, e.emits);
      }
      line(s + ";");
    }
    line("}");
  }

  void print_overrides(std::string& s, const std::vector<OverrideAst>& overrides) {
    if (overrides.empty()) return;
    s += " with ";
    for (std::size_t i = 0; i < overrides.size(); ++i) {
      if (i) s += ", ";
      s += overrides[i].name + " = " + expr_text(overrides[i].value);
    }
  }

  void operator()(const DtcAst& dtc) {
    line("dtc " + dtc.name + " {");
    for (const auto& inst : dtc.instances) {
      std::string s = "  instance " + inst.id + ": " + inst.model;
      print_overrides(s, inst.overrides);
      line(s + ";");
    }
    for (const auto& w : dtc.wires)
      line("  wire " + w.from_instance + "." + w.from_name + " -> " + w.to_instance + "." +
           w.to_name + ";");
    for (const auto& p : dtc.ports) {
      std::string s = "  " + std::string(p.is_input ? "in " : "out ") + p.name +
                      (p.is_input ? " -> " : " <- ");
      for (std::size_t i = 0; i < p.endpoints.size(); ++i) {
        if (i) s += ", ";
        s += p.endpoints[i].instance + "." + p.endpoints[i].name;
      }
      line(s + ";");
    }
    line("}");
  }

  void operator()(const SystemAst& sys) {
    line("system " + sys.name + " {");
    if (sys.step) line("  step " + format_duration(*sys.step) + ";");
    if (sys.horizon) line("  horizon " + format_duration(*sys.horizon) + ";");
    if (sys.sample) line("  sample " + format_duration(*sys.sample) + ";");
    if (sys.substep) line("  substep " + format_duration(*sys.substep) + ";");
    for (const auto& c : sys.components) {
      std::string s = "  component " + c.id + ": " + c.dtc;
      print_overrides(s, c.overrides);
      line(s + ";");
    }
    for (const auto& ch : sys.channels)
      line("  channel " + ch.id + ": " + ch.from_component + "." + ch.from_port + " -> " +
           ch.to_component + "." + ch.to_port + " latency " + format_int(ch.latency) + ";");
    for (const auto& st : sys.stimuli) {
      std::string s = "  at " + format_duration(st.at) + " " + st.component + "." + st.port;
      if (st.payload) s += "(" + expr_text(*st.payload) + ")";
      line(s + ";");
    }
    line("}");
  }
};

}  // namespace print_detail

inline std::string canonical_print(const Document& doc) {
  print_detail::Printer p;
  bool first = true;
  for (const auto& block : doc.blocks) {
    if (!first) p.out += "\n";
    first = false;
    std::visit(p, block);
  }
  return p.out;
}

}  // namespace twinkernel::dsl
