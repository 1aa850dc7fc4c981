#pragma once
// Lexer and recursive-descent parser for .twin documents. Total over arbitrary
// byte input: the first syntax error is reported with its span and parsing
// stops; nothing is silently accepted.

#include <charconv>
#include <string>
#include <string_view>
#include <vector>

#include "twinkernel/ast.hpp"

namespace twinkernel::dsl {

namespace lex {

struct Token {
  enum class Kind : std::uint8_t { End, Ident, Int, Real, Duration, Sym };
  Kind kind = Kind::End;
  std::string text;
  std::int64_t ival = 0;
  double rval = 0.0;
  SimTime dur;
  SourceSpan span;
};

struct LexError {
  Diagnostic diag;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      skip_trivia();
      if (pos_ >= src_.size()) {
        Token end;
        end.kind = Token::Kind::End;
        end.span = span_here(0);
        out.push_back(end);
        return out;
      }
      out.push_back(next());
    }
  }

 private:
  static bool ident_start(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
  }
  static bool ident_char(char c) { return ident_start(c) || (c >= '0' && c <= '9'); }
  static bool digit(char c) { return c >= '0' && c <= '9'; }

  void skip_trivia() {
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        advance();
      } else {
        break;
      }
    }
  }

  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  SourceSpan span_here(std::size_t len) const {
    SourceSpan s;
    s.begin = pos_;
    s.end = pos_ + len;
    s.start = {line_, col_};
    s.stop = {line_, col_ + static_cast<int>(len)};
    return s;
  }

  [[noreturn]] void fail(const std::string& msg, SourceSpan span) {
    throw LexError{make_error(msg, span)};
  }

  Token next() {
    const char c = src_[pos_];
    if (ident_start(c)) return lex_ident();
    if (digit(c)) return lex_number();
    return lex_symbol();
  }

  Token lex_ident() {
    Token t;
    t.kind = Token::Kind::Ident;
    t.span = span_here(0);
    while (pos_ < src_.size() && ident_char(src_[pos_])) {
      t.text += src_[pos_];
      advance();
    }
    t.span.end = pos_;
    t.span.stop = {line_, col_};
    return t;
  }

  Token lex_number() {
    Token t;
    t.span = span_here(0);
    std::string intpart, fracpart, exppart;
    while (pos_ < src_.size() && digit(src_[pos_])) {
      intpart += src_[pos_];
      advance();
    }
    bool has_frac = false, has_exp = false;
    if (pos_ < src_.size() && src_[pos_] == '.') {
      has_frac = true;
      advance();
      if (pos_ >= src_.size() || !digit(src_[pos_]))
        fail("expected digits after decimal point", span_here(1));
      while (pos_ < src_.size() && digit(src_[pos_])) {
        fracpart += src_[pos_];
        advance();
      }
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      // exponent only when followed by digits or a sign (so `1e` stays an error
      // and `30s` never reaches here)
      has_exp = true;
      exppart += src_[pos_];
      advance();
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) {
        exppart += src_[pos_];
        advance();
      }
      if (pos_ >= src_.size() || !digit(src_[pos_])) fail("malformed exponent", span_here(1));
      while (pos_ < src_.size() && digit(src_[pos_])) {
        exppart += src_[pos_];
        advance();
      }
    }

    // duration suffix: s or ms, not followed by another identifier character
    if (!has_exp && pos_ < src_.size() && (src_[pos_] == 's' || src_[pos_] == 'm')) {
      std::int64_t scale = 0;  // ns per unit
      std::size_t suffix_len = 0;
      if (src_[pos_] == 's' && (pos_ + 1 >= src_.size() || !ident_char(src_[pos_ + 1]))) {
        scale = 1'000'000'000;
        suffix_len = 1;
      } else if (src_[pos_] == 'm' && pos_ + 1 < src_.size() && src_[pos_ + 1] == 's' &&
                 (pos_ + 2 >= src_.size() || !ident_char(src_[pos_ + 2]))) {
        scale = 1'000'000;
        suffix_len = 2;
      }
      if (scale != 0) {
        const int max_frac = scale == 1'000'000'000 ? 9 : 6;
        if (static_cast<int>(fracpart.size()) > max_frac)
          fail("duration finer than one nanosecond", span_here(1));
        std::int64_t nanos = 0;
        for (const char d : intpart) nanos = nanos * 10 + (d - '0');
        nanos *= scale;
        std::int64_t frac = 0;
        std::int64_t unit = scale;
        for (const char d : fracpart) {
          unit /= 10;
          frac += (d - '0') * unit;
        }
        t.kind = Token::Kind::Duration;
        t.dur = SimTime::from_nanos(nanos + frac);
        for (std::size_t i = 0; i < suffix_len; ++i) advance();
        t.span.end = pos_;
        t.span.stop = {line_, col_};
        return t;
      }
    }

    t.span.end = pos_;
    t.span.stop = {line_, col_};
    const std::string text = intpart + (has_frac ? "." + fracpart : "") + exppart;
    if (!has_frac && !has_exp) {
      std::int64_t v = 0;
      const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
      if (res.ec == std::errc()) {
        t.kind = Token::Kind::Int;
        t.ival = v;
        return t;
      }
    }
    double d = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), d);
    if (res.ec != std::errc()) fail("malformed number", t.span);
    t.kind = Token::Kind::Real;
    t.rval = d;
    return t;
  }

  Token lex_symbol() {
    Token t;
    t.kind = Token::Kind::Sym;
    t.span = span_here(1);
    static constexpr std::string_view two[] = {":=", "->", "<-", "==", "!=", "<=", ">=", "&&", "||"};
    const std::string_view rest = src_.substr(pos_);
    for (const auto s : two) {
      if (rest.substr(0, 2) == s) {
        t.text = std::string(s);
        advance();
        advance();
        t.span.end = pos_;
        t.span.stop = {line_, col_};
        return t;
      }
    }
    static constexpr std::string_view singles = "{}();,:.'*+-/|=<>!";
    const char c = src_[pos_];
    if (singles.find(c) == std::string_view::npos) {
      char buf[64];
      if (static_cast<unsigned char>(c) >= 0x20 && static_cast<unsigned char>(c) < 0x7f)
        std::snprintf(buf, sizeof(buf), "unexpected character '%c'", c);
      else
        std::snprintf(buf, sizeof(buf), "unexpected byte 0x%02x", static_cast<unsigned char>(c));
      fail(buf, t.span);
    }
    t.text = std::string(1, c);
    advance();
    t.span.end = pos_;
    t.span.stop = {line_, col_};
    return t;
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

}  // namespace lex

namespace detail {

struct ParseAbort {};

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src) {}

  ParseResult run() {
    ParseResult result;
    try {
      lex::Lexer lexer(src_);
      toks_ = lexer.run();
    } catch (const lex::LexError& e) {
      result.diagnostics.push_back(e.diag);
      return result;
    }
    try {
      Document doc;
      while (!at_end()) doc.blocks.push_back(parse_block());
      result.document = std::move(doc);
    } catch (const ParseAbort&) {
    }
    result.diagnostics.insert(result.diagnostics.end(), diags_.begin(), diags_.end());
    return result;
  }

 private:
  using Token = lex::Token;

  const Token& peek(int ahead = 0) const {
    const std::size_t i = std::min(pos_ + static_cast<std::size_t>(ahead), toks_.size() - 1);
    return toks_[i];
  }
  const Token& take() { return toks_[std::min(pos_++, toks_.size() - 1)]; }
  bool at_end() const { return peek().kind == Token::Kind::End; }

  bool is_sym(std::string_view s, int ahead = 0) const {
    return peek(ahead).kind == Token::Kind::Sym && peek(ahead).text == s;
  }
  bool is_ident(std::string_view s, int ahead = 0) const {
    return peek(ahead).kind == Token::Kind::Ident && peek(ahead).text == s;
  }

  [[noreturn]] void fail(const std::string& msg, SourceSpan span) {
    diags_.push_back(make_error(msg, span));
    throw ParseAbort{};
  }
  [[noreturn]] void fail_here(const std::string& msg) { fail(msg, peek().span); }

  void expect_sym(std::string_view s) {
    if (!is_sym(s)) fail_here("expected '" + std::string(s) + "'");
    take();
  }
  std::string expect_ident(const char* what) {
    if (peek().kind != Token::Kind::Ident) fail_here(std::string("expected ") + what);
    return take().text;
  }
  void expect_kw(std::string_view kw) {
    if (!is_ident(kw)) fail_here("expected '" + std::string(kw) + "'");
    take();
  }
  SimTime expect_duration(const char* what) {
    if (peek().kind != Token::Kind::Duration)
      fail_here(std::string("expected ") + what + " with an s/ms suffix");
    return take().dur;
  }

  // `opener` is the block keyword span, reported when the block never closes.
  bool more_items(const SourceSpan& opener, const std::string& block) {
    if (is_sym("}")) {
      take();
      return false;
    }
    if (at_end()) fail("unclosed block '" + block + "'", opener);
    return true;
  }

  // ---- expressions ----

  // Hard nesting cap so pathological byte input cannot exhaust the stack.
  static constexpr int kMaxExprDepth = 256;

  struct DepthGuard {
    Parser* p;
    explicit DepthGuard(Parser* parser) : p(parser) {
      if (++p->expr_depth_ > kMaxExprDepth) p->fail_here("expression nesting too deep");
    }
    ~DepthGuard() { --p->expr_depth_; }
  };

  static SourceSpan merge(SourceSpan a, SourceSpan b) {
    if (!a.known()) return b;
    if (!b.known()) return a;
    SourceSpan s = a;
    s.end = b.end;
    s.stop = b.stop;
    return s;
  }

  Expr parse_expr() { return parse_or(); }

  Expr parse_or() {
    Expr e = parse_and();
    while (is_ident("or") || is_sym("||")) {
      take();
      Expr r = parse_and();
      SourceSpan sp = merge(e.span, r.span);
      e = Expr::binary(Expr::Op::Or, std::move(e), std::move(r));
      e.span = sp;
    }
    return e;
  }

  Expr parse_and() {
    Expr e = parse_cmp();
    while (is_ident("and") || is_sym("&&")) {
      take();
      Expr r = parse_cmp();
      SourceSpan sp = merge(e.span, r.span);
      e = Expr::binary(Expr::Op::And, std::move(e), std::move(r));
      e.span = sp;
    }
    return e;
  }

  Expr parse_cmp() {
    Expr e = parse_add();
    struct CmpOp {
      std::string_view sym;
      Expr::Op op;
    };
    static constexpr CmpOp ops[] = {{"==", Expr::Op::Eq}, {"!=", Expr::Op::Ne},
                                    {"<=", Expr::Op::Le}, {">=", Expr::Op::Ge},
                                    {"<", Expr::Op::Lt},  {">", Expr::Op::Gt}};
    for (const auto& [sym, op] : ops) {
      if (is_sym(sym)) {
        take();
        Expr r = parse_add();
        SourceSpan sp = merge(e.span, r.span);
        e = Expr::binary(op, std::move(e), std::move(r));
        e.span = sp;
        return e;  // comparisons do not chain
      }
    }
    return e;
  }

  Expr parse_add() {
    Expr e = parse_mul();
    while (is_sym("+") || is_sym("-")) {
      const Expr::Op op = peek().text == "+" ? Expr::Op::Add : Expr::Op::Sub;
      take();
      Expr r = parse_mul();
      SourceSpan sp = merge(e.span, r.span);
      e = Expr::binary(op, std::move(e), std::move(r));
      e.span = sp;
    }
    return e;
  }

  Expr parse_mul() {
    Expr e = parse_unary();
    while (is_sym("*") || is_sym("/")) {
      const Expr::Op op = peek().text == "*" ? Expr::Op::Mul : Expr::Op::Div;
      take();
      Expr r = parse_unary();
      SourceSpan sp = merge(e.span, r.span);
      e = Expr::binary(op, std::move(e), std::move(r));
      e.span = sp;
    }
    return e;
  }

  Expr parse_unary() {
    DepthGuard guard(this);
    if (is_sym("-")) {
      const SourceSpan sp = take().span;
      Expr a = parse_unary();
      Expr e = Expr::unary(Expr::Op::Neg, std::move(a));
      e.span = merge(sp, e.args[0].span);
      return e;
    }
    if (is_sym("!") || is_ident("not")) {
      const SourceSpan sp = take().span;
      Expr a = parse_unary();
      Expr e = Expr::unary(Expr::Op::Not, std::move(a));
      e.span = merge(sp, e.args[0].span);
      return e;
    }
    return parse_primary();
  }

  Expr parse_primary() {
    const Token& t = peek();
    if (t.kind == Token::Kind::Sym && t.text == "(") {
      take();
      Expr e = parse_expr();
      expect_sym(")");
      return e;
    }
    switch (t.kind) {
      case Token::Kind::Int: {
        Expr e = Expr::literal(Value::integer(t.ival));
        e.span = t.span;
        take();
        return e;
      }
      case Token::Kind::Real: {
        Expr e = Expr::literal(Value::real(t.rval));
        e.span = t.span;
        take();
        return e;
      }
      case Token::Kind::Duration: {
        Expr e = Expr::literal(Value::real(t.dur.to_seconds()));
        e.span = t.span;
        take();
        return e;
      }
      case Token::Kind::Ident: {
        if (t.text == "true" || t.text == "false") {
          Expr e = Expr::literal(Value::boolean(t.text == "true"));
          e.span = t.span;
          take();
          return e;
        }
        if ((t.text == "abs" || t.text == "min" || t.text == "max") && is_sym("(", 1)) {
          const std::string fn = take().text;
          const SourceSpan sp = peek().span;
          expect_sym("(");
          std::vector<Expr> args;
          args.push_back(parse_expr());
          while (is_sym(",")) {
            take();
            args.push_back(parse_expr());
          }
          expect_sym(")");
          const std::size_t want = fn == "abs" ? 1 : 2;
          if (args.size() != want) fail(fn + " takes " + std::to_string(want) + " argument(s)", sp);
          Expr e;
          e.op = fn == "abs" ? Expr::Op::Abs : (fn == "min" ? Expr::Op::Min : Expr::Op::Max);
          e.args = std::move(args);
          e.span = sp;
          return e;
        }
        Expr e = Expr::ref(t.text);
        e.span = t.span;
        take();
        if (is_sym("(")) fail_here("unknown function '" + t.text + "'");
        return e;
      }
      default: fail_here("expected an expression");
    }
  }

  // ---- blocks ----

  Block parse_block() {
    if (peek().kind != Token::Kind::Ident)
      fail_here("expected a block (colorset, fsm, cpn, ha, dtc or system)");
    const std::string kw = peek().text;
    if (kw == "colorset") return parse_colorset();
    if (kw == "fsm") return parse_fsm();
    if (kw == "cpn") return parse_cpn();
    if (kw == "ha") return parse_ha();
    if (kw == "dtc") return parse_dtc();
    if (kw == "system") return parse_system();
    fail_here("expected a block (colorset, fsm, cpn, ha, dtc or system)");
  }

  ColorsetAst parse_colorset() {
    ColorsetAst cs;
    cs.span = take().span;  // 'colorset'
    cs.name = expect_ident("colorset name");
    expect_sym("=");
    const std::string first = expect_ident("type");
    if (is_sym("|")) {
      cs.form = ColorsetAst::Form::Labels;
      cs.labels.push_back(first);
      while (is_sym("|")) {
        take();
        cs.labels.push_back(expect_ident("label"));
      }
    } else if (is_sym("*")) {
      cs.form = ColorsetAst::Form::Product;
      cs.components.push_back(first);
      while (is_sym("*")) {
        take();
        cs.components.push_back(expect_ident("component colorset"));
      }
    } else if (first == "bool" || first == "int" || first == "real" || first == "unit") {
      cs.form = ColorsetAst::Form::Primitive;
      cs.primitive = first;
    } else {
      cs.form = ColorsetAst::Form::Single;
      cs.single = first;
    }
    expect_sym(";");
    return cs;
  }

  ParamAst parse_param() {
    ParamAst p;
    p.span = take().span;  // 'param'
    p.name = expect_ident("parameter name");
    expect_sym("=");
    p.value = parse_expr();
    expect_sym(";");
    return p;
  }

  InputAst parse_input() {
    InputAst in;
    in.span = take().span;  // 'input'
    in.name = expect_ident("input name");
    expect_sym(":");
    in.type = expect_ident("input type");
    if (is_sym("=")) {
      take();
      in.init = parse_expr();
    }
    expect_sym(";");
    return in;
  }

  OutputAst parse_output() {
    OutputAst out;
    out.span = take().span;  // 'output'
    out.name = expect_ident("output name");
    expect_sym(":");
    out.type = expect_ident("output type");
    expect_sym(";");
    return out;
  }

  std::vector<ActionAst> parse_actions() {
    std::vector<ActionAst> actions;
    while (true) {
      ActionAst a;
      if (is_ident("reset")) {
        a.span = take().span;
        a.is_reset = true;
        a.target = expect_ident("timer name");
      } else {
        a.span = peek().span;
        a.target = expect_ident("signal name");
        expect_sym(":=");
        a.value = parse_expr();
      }
      actions.push_back(std::move(a));
      if (!is_sym(",")) break;
      take();
    }
    return actions;
  }

  FsmAst parse_fsm() {
    FsmAst fsm;
    const SourceSpan opener = take().span;  // 'fsm'
    fsm.span = opener;
    fsm.name = expect_ident("fsm name");
    const std::string block = "fsm " + fsm.name;
    expect_sym("{");
    while (more_items(opener, block)) {
      if (is_ident("param")) {
        fsm.params.push_back(parse_param());
      } else if (is_ident("input")) {
        fsm.inputs.push_back(parse_input());
      } else if (is_ident("var")) {
        VarAst v;
        v.span = take().span;
        v.name = expect_ident("signal name");
        expect_sym(":");
        v.type = expect_ident("signal type");
        expect_sym("=");
        v.init = parse_expr();
        expect_sym(";");
        fsm.vars.push_back(std::move(v));
      } else if (is_ident("timer")) {
        TimerAst t;
        t.span = take().span;
        t.name = expect_ident("timer name");
        expect_sym("=");
        t.period = parse_expr();
        expect_sym(";");
        fsm.timers.push_back(std::move(t));
      } else if (is_ident("state")) {
        StateAst s;
        s.span = take().span;
        s.name = expect_ident("state name");
        if (is_ident("init")) {
          take();
          s.init = true;
        }
        expect_sym(";");
        fsm.states.push_back(std::move(s));
      } else if (is_ident("on")) {
        TransitionAst t;
        t.span = take().span;
        t.guard = parse_expr();
        expect_kw("from");
        t.from = expect_ident("state name");
        expect_kw("to");
        t.to = expect_ident("state name");
        if (is_ident("do")) {
          take();
          t.actions = parse_actions();
        }
        expect_sym(";");
        fsm.transitions.push_back(std::move(t));
      } else {
        fail_here("expected an fsm item (param, input, var, timer, state or on)");
      }
    }
    return fsm;
  }

  std::vector<Expr> parse_pattern() {
    std::vector<Expr> elems;
    if (is_sym("(")) {
      take();
      if (!is_sym(")")) {
        elems.push_back(parse_expr());
        while (is_sym(",")) {
          take();
          elems.push_back(parse_expr());
        }
      }
      expect_sym(")");
    } else {
      elems.push_back(parse_expr());
    }
    return elems;
  }

  CpnAst parse_cpn() {
    CpnAst cpn;
    const SourceSpan opener = take().span;  // 'cpn'
    cpn.span = opener;
    cpn.name = expect_ident("cpn name");
    const std::string block = "cpn " + cpn.name;
    expect_sym("{");
    while (more_items(opener, block)) {
      if (is_ident("param")) {
        cpn.params.push_back(parse_param());
      } else if (is_ident("var")) {
        CpnVarAst v;
        v.span = take().span;
        v.name = expect_ident("variable name");
        expect_sym(":");
        v.colorset = expect_ident("colorset name");
        expect_sym(";");
        cpn.vars.push_back(std::move(v));
      } else if (is_ident("input")) {
        cpn.inputs.push_back(parse_input());
      } else if (is_ident("output")) {
        cpn.outputs.push_back(parse_output());
      } else if (is_ident("place")) {
        PlaceAst p;
        p.span = take().span;
        p.name = expect_ident("place name");
        expect_sym(":");
        p.colorset = expect_ident("colorset name");
        if (is_ident("init")) {
          take();
          while (true) {
            MarkingTermAst term;
            term.span = peek().span;
            if (peek().kind != Token::Kind::Int) fail_here("expected a token multiplicity");
            term.count = take().ival;
            if (is_sym("'")) {
              take();
              expect_sym("(");
              if (!is_sym(")")) {
                term.elems.push_back(parse_expr());
                while (is_sym(",")) {
                  take();
                  term.elems.push_back(parse_expr());
                }
              }
              expect_sym(")");
            }
            p.init.push_back(std::move(term));
            if (!is_sym("+")) break;
            take();
          }
        }
        expect_sym(";");
        cpn.places.push_back(std::move(p));
      } else if (is_ident("trans")) {
        TransAst t;
        const SourceSpan topener = take().span;
        t.span = topener;
        t.name = expect_ident("transition name");
        const std::string tblock = "trans " + t.name;
        expect_sym("{");
        while (more_items(topener, tblock)) {
          if (is_ident("in")) {
            InArcAst arc;
            arc.span = take().span;
            arc.place = expect_ident("place name");
            if (is_sym(":")) {
              take();
              arc.pattern = parse_pattern();
            }
            expect_sym(";");
            t.in_arcs.push_back(std::move(arc));
          } else if (is_ident("when")) {
            EventArcAst arc;
            arc.span = take().span;
            arc.input = expect_ident("input name");
            if (is_sym(":")) {
              take();
              arc.binding = parse_expr();
            }
            expect_sym(";");
            t.event_arcs.push_back(std::move(arc));
          } else if (is_ident("guard")) {
            const SourceSpan sp = take().span;
            if (t.guard) fail("transition already has a guard", sp);
            t.guard = parse_expr();
            expect_sym(";");
          } else if (is_ident("out")) {
            OutArcAst arc;
            arc.span = take().span;
            arc.place = expect_ident("place name");
            if (is_sym(":")) {
              take();
              arc.elems = parse_pattern();
            }
            expect_sym(";");
            t.out_arcs.push_back(std::move(arc));
          } else if (is_ident("emit")) {
            EmitAst em;
            em.span = take().span;
            em.output = expect_ident("output name");
            if (is_sym("(")) {
              take();
              em.payload = parse_expr();
              expect_sym(")");
            }
            expect_sym(";");
            t.emits.push_back(std::move(em));
          } else {
            fail_here("expected a transition item (in, when, guard, out or emit)");
          }
        }
        cpn.transitions.push_back(std::move(t));
      } else {
        fail_here("expected a cpn item (param, var, input, output, place or trans)");
      }
    }
    return cpn;
  }

  HaAst parse_ha() {
    HaAst ha;
    const SourceSpan opener = take().span;  // 'ha'
    ha.span = opener;
    ha.name = expect_ident("ha name");
    const std::string block = "ha " + ha.name;
    expect_sym("{");
    while (more_items(opener, block)) {
      if (is_ident("param")) {
        ha.params.push_back(parse_param());
      } else if (is_ident("input")) {
        ha.inputs.push_back(parse_input());
      } else if (is_ident("output")) {
        ha.outputs.push_back(parse_output());
      } else if (is_ident("var")) {
        VarAst v;
        v.span = take().span;
        v.name = expect_ident("variable name");
        if (is_sym(":")) {
          take();
          const std::string ty = expect_ident("type");
          if (ty != "real") fail_here("continuous variables are always real");
        }
        expect_sym("=");
        v.init = parse_expr();
        expect_sym(";");
        ha.vars.push_back(std::move(v));
      } else if (is_ident("loc")) {
        LocAst loc;
        const SourceSpan lopener = take().span;
        loc.span = lopener;
        loc.name = expect_ident("location name");
        if (is_ident("init")) {
          take();
          loc.init = true;
        }
        const std::string lblock = "loc " + loc.name;
        expect_sym("{");
        while (more_items(lopener, lblock)) {
          if (is_ident("flow")) {
            FlowAst f;
            f.span = take().span;
            f.var = expect_ident("variable name");
            expect_sym("'");
            expect_sym("=");
            f.rate = parse_expr();
            expect_sym(";");
            loc.flows.push_back(std::move(f));
          } else if (is_ident("inv")) {
            const SourceSpan sp = take().span;
            if (loc.invariant) fail("location already has an invariant", sp);
            loc.invariant = parse_expr();
            expect_sym(";");
          } else {
            fail_here("expected a location item (flow or inv)");
          }
        }
        ha.locations.push_back(std::move(loc));
      } else if (is_ident("edge")) {
        EdgeAst e;
        e.span = take().span;
        e.from = expect_ident("location name");
        expect_sym("->");
        e.to = expect_ident("location name");
        if (is_ident("on")) {
          take();
          e.trigger = expect_ident("input name");
        }
        if (is_ident("if")) {
          take();
          e.guard = parse_expr();
        }
        if (is_ident("urgent")) {
          take();
          e.urgent = true;
        }
        if (is_ident("do")) {
          take();
          e.resets = parse_actions();
          for (const auto& a : e.resets)
            if (a.is_reset) fail("ha resets use ':=' assignments", a.span);
        }
        if (is_ident("emit")) {
          take();
          while (true) {
            EmitAst em;
            em.span = peek().span;
            em.output = expect_ident("output name");
            if (is_sym("(")) {
              take();
              em.payload = parse_expr();
              expect_sym(")");
            }
            e.emits.push_back(std::move(em));
            if (!is_sym(",")) break;
            take();
          }
        }
        expect_sym(";");
        ha.edges.push_back(std::move(e));
      } else {
        fail_here("expected a ha item (param, input, output, var, loc or edge)");
      }
    }
    return ha;
  }

  std::vector<OverrideAst> parse_overrides(bool dotted) {
    std::vector<OverrideAst> out;
    while (true) {
      OverrideAst o;
      o.span = peek().span;
      o.name = expect_ident("parameter name");
      if (dotted && is_sym(".")) {
        take();
        o.name += "." + expect_ident("parameter name");
      }
      expect_sym("=");
      o.value = parse_expr();
      out.push_back(std::move(o));
      if (!is_sym(",")) break;
      take();
    }
    return out;
  }

  DtcAst parse_dtc() {
    DtcAst dtc;
    const SourceSpan opener = take().span;  // 'dtc'
    dtc.span = opener;
    dtc.name = expect_ident("dtc name");
    const std::string block = "dtc " + dtc.name;
    expect_sym("{");
    while (more_items(opener, block)) {
      if (is_ident("instance")) {
        InstanceAst inst;
        inst.span = take().span;
        inst.id = expect_ident("instance id");
        expect_sym(":");
        inst.model = expect_ident("model name");
        if (is_ident("with")) {
          take();
          inst.overrides = parse_overrides(false);
        }
        expect_sym(";");
        dtc.instances.push_back(std::move(inst));
      } else if (is_ident("wire")) {
        WireAst w;
        w.span = take().span;
        w.from_instance = expect_ident("instance id");
        expect_sym(".");
        w.from_name = expect_ident("signal or event name");
        expect_sym("->");
        w.to_instance = expect_ident("instance id");
        expect_sym(".");
        w.to_name = expect_ident("input name");
        expect_sym(";");
        dtc.wires.push_back(std::move(w));
      } else if (is_ident("in") || is_ident("out")) {
        PortAst p;
        p.is_input = peek().text == "in";
        p.span = take().span;
        p.name = expect_ident("port name");
        expect_sym(p.is_input ? "->" : "<-");
        while (true) {
          EndpointAst ep;
          ep.span = peek().span;
          ep.instance = expect_ident("instance id");
          expect_sym(".");
          ep.name = expect_ident("name");
          p.endpoints.push_back(std::move(ep));
          if (!p.is_input || !is_sym(",")) break;
          take();
        }
        expect_sym(";");
        dtc.ports.push_back(std::move(p));
      } else {
        fail_here("expected a dtc item (instance, wire, in or out)");
      }
    }
    return dtc;
  }

  SystemAst parse_system() {
    SystemAst sys;
    const SourceSpan opener = take().span;  // 'system'
    sys.span = opener;
    sys.name = expect_ident("system name");
    const std::string block = "system " + sys.name;
    expect_sym("{");
    while (more_items(opener, block)) {
      if (is_ident("step") || is_ident("horizon") || is_ident("sample") || is_ident("substep")) {
        const std::string field = take().text;
        const SimTime d = expect_duration(field.c_str());
        expect_sym(";");
        if (field == "step") sys.step = d;
        else if (field == "horizon") sys.horizon = d;
        else if (field == "sample") sys.sample = d;
        else sys.substep = d;
      } else if (is_ident("component")) {
        ComponentAst c;
        c.span = take().span;
        c.id = expect_ident("component id");
        expect_sym(":");
        c.dtc = expect_ident("dtc name");
        if (is_ident("with")) {
          take();
          c.overrides = parse_overrides(true);
        }
        expect_sym(";");
        sys.components.push_back(std::move(c));
      } else if (is_ident("channel")) {
        ChannelAst ch;
        ch.span = take().span;
        ch.id = expect_ident("channel id");
        expect_sym(":");
        ch.from_component = expect_ident("component id");
        expect_sym(".");
        ch.from_port = expect_ident("port name");
        expect_sym("->");
        ch.to_component = expect_ident("component id");
        expect_sym(".");
        ch.to_port = expect_ident("port name");
        expect_kw("latency");
        if (peek().kind != Token::Kind::Int) fail_here("expected an integer latency");
        ch.latency = take().ival;
        expect_sym(";");
        sys.channels.push_back(std::move(ch));
      } else if (is_ident("at")) {
        StimulusAst st;
        st.span = take().span;
        st.at = expect_duration("stimulus time");
        st.component = expect_ident("component id");
        expect_sym(".");
        st.port = expect_ident("port name");
        if (is_sym("(")) {
          take();
          st.payload = parse_expr();
          expect_sym(")");
        }
        expect_sym(";");
        sys.stimuli.push_back(std::move(st));
      } else {
        fail_here("expected a system item (step, horizon, sample, substep, component, channel or at)");
      }
    }
    return sys;
  }

  std::string_view src_;
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  int expr_depth_ = 0;
  std::vector<Diagnostic> diags_;
};

}  // namespace detail

// Parses a .twin document; on failure the first error is reported with a span.
inline ParseResult parse_model(std::string_view text) {
  detail::Parser p(text);
  return p.run();
}

}  // namespace twinkernel::dsl
