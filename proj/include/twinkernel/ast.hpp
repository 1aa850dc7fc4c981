#pragma once
// Parsed form of .twin model-description documents. The compiler turns these
// blocks into executable models; the canonical printer consumes them as-is.

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "twinkernel/core.hpp"
#include "twinkernel/diag.hpp"
#include "twinkernel/expr.hpp"

namespace twinkernel::dsl {

struct ColorsetAst {
  enum class Form { Primitive, Labels, Product, Single };
  std::string name;
  Form form = Form::Primitive;
  std::string primitive;               // bool | int | real | unit
  std::vector<std::string> labels;     // a | b | c
  std::vector<std::string> components; // A * B
  std::string single;                  // alias or one-label enum; compiler decides
  SourceSpan span;
};

struct ParamAst {
  std::string name;
  Expr value;  // constant expression (number, duration, unary minus)
  SourceSpan span;
};

struct InputAst {
  std::string name;
  std::string type;  // "event" or a type/colorset name
  std::optional<Expr> init;
  SourceSpan span;
};

struct OutputAst {
  std::string name;
  std::string type;  // "event" or a type/colorset name
  SourceSpan span;
};

struct VarAst {
  std::string name;
  std::string type;  // empty in ha blocks (always real)
  std::optional<Expr> init;
  SourceSpan span;
};

struct TimerAst {
  std::string name;
  Expr period;
  SourceSpan span;
};

struct StateAst {
  std::string name;
  bool init = false;
  SourceSpan span;
};

struct ActionAst {
  bool is_reset = false;
  std::string target;
  Expr value;  // assignment right-hand side
  SourceSpan span;
};

struct TransitionAst {
  Expr guard;
  std::string from;
  std::string to;
  std::vector<ActionAst> actions;
  SourceSpan span;
};

struct FsmAst {
  std::string name;
  std::vector<ParamAst> params;
  std::vector<InputAst> inputs;
  std::vector<VarAst> vars;
  std::vector<TimerAst> timers;
  std::vector<StateAst> states;
  std::vector<TransitionAst> transitions;
  SourceSpan span;
};

struct MarkingTermAst {
  std::int64_t count = 1;
  std::vector<Expr> elems;  // empty for unit tokens
  SourceSpan span;
};

struct PlaceAst {
  std::string name;
  std::string colorset;
  std::vector<MarkingTermAst> init;
  SourceSpan span;
};

struct CpnVarAst {
  std::string name;
  std::string colorset;
  SourceSpan span;
};

struct InArcAst {
  std::string place;
  std::vector<Expr> pattern;  // variables or literals; empty for unit places
  SourceSpan span;
};

struct EventArcAst {
  std::string input;
  std::optional<Expr> binding;  // variable or literal match
  SourceSpan span;
};

struct OutArcAst {
  std::string place;
  std::vector<Expr> elems;
  SourceSpan span;
};

struct EmitAst {
  std::string output;
  std::optional<Expr> payload;
  SourceSpan span;
};

struct TransAst {
  std::string name;
  std::vector<InArcAst> in_arcs;
  std::vector<EventArcAst> event_arcs;
  std::optional<Expr> guard;
  std::vector<OutArcAst> out_arcs;
  std::vector<EmitAst> emits;
  SourceSpan span;
};

struct CpnAst {
  std::string name;
  std::vector<ParamAst> params;
  std::vector<CpnVarAst> vars;
  std::vector<InputAst> inputs;
  std::vector<OutputAst> outputs;
  std::vector<PlaceAst> places;
  std::vector<TransAst> transitions;
  SourceSpan span;
};

struct FlowAst {
  std::string var;
  Expr rate;
  SourceSpan span;
};

struct LocAst {
  std::string name;
  bool init = false;
  std::vector<FlowAst> flows;
  std::optional<Expr> invariant;
  SourceSpan span;
};

struct EdgeAst {
  std::string from;
  std::string to;
  std::optional<std::string> trigger;
  std::optional<Expr> guard;
  bool urgent = false;
  std::vector<ActionAst> resets;
  std::vector<EmitAst> emits;
  SourceSpan span;
};

struct HaAst {
  std::string name;
  std::vector<ParamAst> params;
  std::vector<InputAst> inputs;
  std::vector<OutputAst> outputs;
  std::vector<VarAst> vars;
  std::vector<LocAst> locations;
  std::vector<EdgeAst> edges;
  SourceSpan span;
};

struct OverrideAst {
  std::string name;  // "param" or "instance.param"
  Expr value;
  SourceSpan span;
};

struct InstanceAst {
  std::string id;
  std::string model;
  std::vector<OverrideAst> overrides;
  SourceSpan span;
};

struct WireAst {
  std::string from_instance;
  std::string from_name;
  std::string to_instance;
  std::string to_name;
  SourceSpan span;
};

struct EndpointAst {
  std::string instance;
  std::string name;
  SourceSpan span;
};

struct PortAst {
  bool is_input = true;
  std::string name;
  std::vector<EndpointAst> endpoints;  // outputs have exactly one
  SourceSpan span;
};

struct DtcAst {
  std::string name;
  std::vector<InstanceAst> instances;
  std::vector<WireAst> wires;
  std::vector<PortAst> ports;
  SourceSpan span;
};

struct ComponentAst {
  std::string id;
  std::string dtc;
  std::vector<OverrideAst> overrides;  // dotted instance.param names
  SourceSpan span;
};

struct ChannelAst {
  std::string id;
  std::string from_component;
  std::string from_port;
  std::string to_component;
  std::string to_port;
  std::int64_t latency = 1;
  SourceSpan span;
};

struct StimulusAst {
  SimTime at;
  std::string component;
  std::string port;
  std::optional<Expr> payload;
  SourceSpan span;
};

struct SystemAst {
  std::string name;
  std::optional<SimTime> step;
  std::optional<SimTime> horizon;
  std::optional<SimTime> sample;
  std::optional<SimTime> substep;
  std::vector<ComponentAst> components;
  std::vector<ChannelAst> channels;
  std::vector<StimulusAst> stimuli;
  SourceSpan span;
};

using Block = std::variant<ColorsetAst, FsmAst, CpnAst, HaAst, DtcAst, SystemAst>;

struct Document {
  std::vector<Block> blocks;
};

struct ParseResult {
  std::optional<Document> document;
  std::vector<Diagnostic> diagnostics;

  bool ok() const noexcept { return document.has_value(); }
};

}  // namespace twinkernel::dsl
