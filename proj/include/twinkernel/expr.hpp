#pragma once
// Expression trees for guards, flows, resets and arc inscriptions. One node
// type serves both the parsed AST and the executable form: the compiler
// resolves name references to slots in place.

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "twinkernel/core.hpp"
#include "twinkernel/diag.hpp"

namespace twinkernel {

// Reference target resolved by the compiler.
struct RefSlot {
  enum class Kind : std::uint8_t {
    Unresolved,  // fresh from the parser
    Var,         // fsm output signal / ha continuous variable
    Param,
    Input,       // latched input value
    Pulse,       // event-input presence (bool), meaningful at micro points only
    Binding,     // cpn transition variable
    EnumLabel,   // literal label of some colorset
  };
  Kind kind = Kind::Unresolved;
  int index = -1;
};

struct Expr {
  enum class Op : std::uint8_t {
    Lit, Ref,
    Not, Neg,
    And, Or,
    Eq, Ne, Lt, Le, Gt, Ge,
    Add, Sub, Mul, Div,
    Abs, Min, Max,
  };

  Op op = Op::Lit;
  Value lit;          // Op::Lit
  std::string name;   // Op::Ref: source name, kept for printing
  RefSlot slot;       // Op::Ref: resolved target
  std::vector<Expr> args;
  SourceSpan span;

  static Expr literal(Value v) {
    Expr e;
    e.op = Op::Lit;
    e.lit = std::move(v);
    return e;
  }
  static Expr ref(std::string n) {
    Expr e;
    e.op = Op::Ref;
    e.name = std::move(n);
    return e;
  }
  static Expr unary(Op op, Expr a) {
    Expr e;
    e.op = op;
    e.args.push_back(std::move(a));
    return e;
  }
  static Expr binary(Op op, Expr l, Expr r) {
    Expr e;
    e.op = op;
    e.args.push_back(std::move(l));
    e.args.push_back(std::move(r));
    return e;
  }
};

// Pulse presence flags, indexed like the owning model's pulse slots.
using PulseSet = std::vector<std::uint8_t>;

// Evaluation environment. Executors fill in whichever slices apply to them;
// HA exposes its continuous vector through vars_real.
struct EvalEnv {
  std::span<const Value> vars;
  std::span<const double> vars_real;  // used when vars is empty
  std::span<const Value> params;
  std::span<const Value> inputs;
  std::span<const std::uint8_t> pulses;
  std::span<const Value> bindings;
};

namespace detail {

inline double num(const Value& v) { return v.numeric(); }

inline Value arith(Expr::Op op, const Value& a, const Value& b) {
  if (op == Expr::Op::Div) {
    const double d = num(b);
    if (d == 0.0) throw ContractError("division by zero");
    return Value::real(num(a) / d);
  }
  if (a.is_int() && b.is_int()) {
    const std::int64_t x = a.as_int(), y = b.as_int();
    switch (op) {
      case Expr::Op::Add: return Value::integer(x + y);
      case Expr::Op::Sub: return Value::integer(x - y);
      case Expr::Op::Mul: return Value::integer(x * y);
      default: break;
    }
  }
  const double x = num(a), y = num(b);
  switch (op) {
    case Expr::Op::Add: return Value::real(x + y);
    case Expr::Op::Sub: return Value::real(x - y);
    case Expr::Op::Mul: return Value::real(x * y);
    default: throw ContractError("bad arithmetic op");
  }
}

inline bool compare_eq(const Value& a, const Value& b) {
  if (a.is_numeric() && b.is_numeric()) return num(a) == num(b);
  return a == b;
}

inline bool compare_lt(const Value& a, const Value& b) { return num(a) < num(b); }

}  // namespace detail

inline Value eval(const Expr& e, const EvalEnv& env) {
  using Op = Expr::Op;
  switch (e.op) {
    case Op::Lit: return e.lit;
    case Op::Ref: {
      const auto& s = e.slot;
      switch (s.kind) {
        case RefSlot::Kind::Var:
          if (!env.vars.empty()) return env.vars[static_cast<std::size_t>(s.index)];
          return Value::real(env.vars_real[static_cast<std::size_t>(s.index)]);
        case RefSlot::Kind::Param: return env.params[static_cast<std::size_t>(s.index)];
        case RefSlot::Kind::Input: return env.inputs[static_cast<std::size_t>(s.index)];
        case RefSlot::Kind::Pulse:
          return Value::boolean(!env.pulses.empty() &&
                                env.pulses[static_cast<std::size_t>(s.index)] != 0);
        case RefSlot::Kind::Binding: return env.bindings[static_cast<std::size_t>(s.index)];
        case RefSlot::Kind::EnumLabel: return Value::label(e.name);
        case RefSlot::Kind::Unresolved:
          throw ContractError("unresolved reference '" + e.name + "' evaluated");
      }
      throw ContractError("bad ref");
    }
    case Op::Not: return Value::boolean(!eval(e.args[0], env).as_bool());
    case Op::Neg: {
      const Value v = eval(e.args[0], env);
      if (v.is_int()) return Value::integer(-v.as_int());
      return Value::real(-v.numeric());
    }
    case Op::And: {
      if (!eval(e.args[0], env).as_bool()) return Value::boolean(false);
      return Value::boolean(eval(e.args[1], env).as_bool());
    }
    case Op::Or: {
      if (eval(e.args[0], env).as_bool()) return Value::boolean(true);
      return Value::boolean(eval(e.args[1], env).as_bool());
    }
    case Op::Eq: return Value::boolean(detail::compare_eq(eval(e.args[0], env), eval(e.args[1], env)));
    case Op::Ne: return Value::boolean(!detail::compare_eq(eval(e.args[0], env), eval(e.args[1], env)));
    case Op::Lt: return Value::boolean(detail::compare_lt(eval(e.args[0], env), eval(e.args[1], env)));
    case Op::Le: return Value::boolean(!detail::compare_lt(eval(e.args[1], env), eval(e.args[0], env)));
    case Op::Gt: return Value::boolean(detail::compare_lt(eval(e.args[1], env), eval(e.args[0], env)));
    case Op::Ge: return Value::boolean(!detail::compare_lt(eval(e.args[0], env), eval(e.args[1], env)));
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div: return detail::arith(e.op, eval(e.args[0], env), eval(e.args[1], env));
    case Op::Abs: {
      const Value v = eval(e.args[0], env);
      if (v.is_int()) return Value::integer(std::abs(v.as_int()));
      return Value::real(std::fabs(v.numeric()));
    }
    case Op::Min: {
      const Value a = eval(e.args[0], env), b = eval(e.args[1], env);
      return Value::real(std::min(a.numeric(), b.numeric()));
    }
    case Op::Max: {
      const Value a = eval(e.args[0], env), b = eval(e.args[1], env);
      return Value::real(std::max(a.numeric(), b.numeric()));
    }
  }
  throw ContractError("bad expression node");
}

inline bool eval_bool(const Expr& e, const EvalEnv& env) { return eval(e, env).as_bool(); }
inline double eval_real(const Expr& e, const EvalEnv& env) { return eval(e, env).numeric(); }

namespace detail {

// Checks that every resolved reference in an expression points at a live slot.
// Unresolved references are reported as unknown symbols.
inline void check_expr_slots(const Expr& e, int n_vars, int n_params, int n_inputs, int n_pulses,
                             int n_bindings, const std::string& where,
                             std::vector<Diagnostic>& out) {
  if (e.op == Expr::Op::Ref) {
    const auto& s = e.slot;
    auto bad = [&](const char* what) {
      out.push_back(make_error(std::string("unknown symbol '") + e.name + "' (" + what + ")",
                               e.span, where));
    };
    switch (s.kind) {
      case RefSlot::Kind::Unresolved: bad("unresolved"); break;
      case RefSlot::Kind::Var:
        if (s.index < 0 || s.index >= n_vars) bad("var out of range");
        break;
      case RefSlot::Kind::Param:
        if (s.index < 0 || s.index >= n_params) bad("param out of range");
        break;
      case RefSlot::Kind::Input:
        if (s.index < 0 || s.index >= n_inputs) bad("input out of range");
        break;
      case RefSlot::Kind::Pulse:
        if (s.index < 0 || s.index >= n_pulses) bad("event out of range");
        break;
      case RefSlot::Kind::Binding:
        if (s.index < 0 || s.index >= n_bindings) bad("binding out of range");
        break;
      case RefSlot::Kind::EnumLabel: break;
    }
  }
  for (const auto& a : e.args)
    check_expr_slots(a, n_vars, n_params, n_inputs, n_pulses, n_bindings, where, out);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Types used by the checker and by model declarations.

struct TypeRef {
  enum class Base : std::uint8_t { Bool, Int, Real, Enum, Unit };
  Base base = Base::Real;
  int colorset = -1;  // for Base::Enum, index into the document's colorset table

  static TypeRef boolean() { return {Base::Bool, -1}; }
  static TypeRef integer() { return {Base::Int, -1}; }
  static TypeRef real() { return {Base::Real, -1}; }
  static TypeRef unit() { return {Base::Unit, -1}; }
  static TypeRef enumeration(int cs) { return {Base::Enum, cs}; }

  bool is_numeric() const noexcept { return base == Base::Int || base == Base::Real; }
  friend bool operator==(const TypeRef&, const TypeRef&) = default;
};

inline std::string type_name(const TypeRef& t) {
  switch (t.base) {
    case TypeRef::Base::Bool: return "bool";
    case TypeRef::Base::Int: return "int";
    case TypeRef::Base::Real: return "real";
    case TypeRef::Base::Unit: return "unit";
    case TypeRef::Base::Enum: return "enum#" + std::to_string(t.colorset);
  }
  return "?";
}

// Coerce a value to a declared type where the promotion is lossless
// (int literal in a real slot). Returns false on a kind mismatch.
inline bool coerce_value(Value& v, const TypeRef& t) {
  switch (t.base) {
    case TypeRef::Base::Bool: return v.is_bool();
    case TypeRef::Base::Int: return v.is_int();
    case TypeRef::Base::Real:
      if (v.is_int()) v = Value::real(static_cast<double>(v.as_int()));
      return v.is_real();
    case TypeRef::Base::Enum: return v.is_label();
    case TypeRef::Base::Unit: return false;
  }
  return false;
}

// Shared declaration shapes reused by the executors.

struct ParamSpec {
  std::string name;
  double value = 0.0;  // default; instances may override
};

struct InputSpec {
  std::string name;
  bool is_event = false;  // pure pulse: no latched value
  TypeRef type = TypeRef::real();
  Value init;  // latched inputs only
};

struct OutputSpec {
  std::string name;
  bool has_payload = false;
  TypeRef type = TypeRef::real();
};

inline std::vector<Value> params_to_values(std::span<const ParamSpec> params) {
  std::vector<Value> out;
  out.reserve(params.size());
  for (const auto& p : params) out.push_back(Value::real(p.value));
  return out;
}

}  // namespace twinkernel
