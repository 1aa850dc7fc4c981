#pragma once
// Random .twin document generator for round-trip and fuzz properties.
// Documents are syntactically valid by construction; spacing and redundant
// parentheses are randomized so the canonical printer has real work to do.

#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace gen {

using Rng = std::mt19937_64;

inline int uniform(Rng& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline std::string ws(Rng& rng) {
  static const char* options[] = {" ", "  ", "\n", " \n  ", "\t", " # noise\n "};
  return options[uniform(rng, 0, 5)];
}

struct Symbols {
  std::vector<std::string> reals;   // numeric vars/params/inputs
  std::vector<std::string> bools;   // bool inputs/vars
  std::vector<std::string> pulses;  // event inputs + timers (fsm guards only)
};

inline std::string number(Rng& rng) {
  switch (uniform(rng, 0, 3)) {
    case 0: return std::to_string(uniform(rng, 0, 99));
    case 1: return std::to_string(uniform(rng, 1, 99)) + "." + std::to_string(uniform(rng, 0, 9));
    case 2: return "0.0" + std::to_string(uniform(rng, 1, 9));
    default: return std::to_string(uniform(rng, 1, 20)) + ".5";
  }
}

inline std::string real_expr(Rng& rng, const Symbols& sym, int depth) {
  if (depth <= 0 || uniform(rng, 0, 2) == 0) {
    if (!sym.reals.empty() && uniform(rng, 0, 1) == 0)
      return sym.reals[static_cast<std::size_t>(uniform(rng, 0, static_cast<int>(sym.reals.size()) - 1))];
    return number(rng);
  }
  switch (uniform(rng, 0, 5)) {
    case 0: return real_expr(rng, sym, depth - 1) + " + " + real_expr(rng, sym, depth - 1);
    case 1: return real_expr(rng, sym, depth - 1) + " - " + real_expr(rng, sym, depth - 1);
    case 2: return real_expr(rng, sym, depth - 1) + " * " + real_expr(rng, sym, depth - 1);
    case 3: return "abs(" + real_expr(rng, sym, depth - 1) + ")";
    case 4: return "-" + real_expr(rng, sym, depth - 1);
    default: return "(" + real_expr(rng, sym, depth - 1) + ")";
  }
}

inline std::string bool_expr(Rng& rng, const Symbols& sym, int depth, bool allow_pulse) {
  if (depth <= 0 || uniform(rng, 0, 2) == 0) {
    const int pick = uniform(rng, 0, 3);
    if (pick == 0 && !sym.bools.empty())
      return sym.bools[static_cast<std::size_t>(uniform(rng, 0, static_cast<int>(sym.bools.size()) - 1))];
    if (pick == 1 && allow_pulse && !sym.pulses.empty())
      return sym.pulses[static_cast<std::size_t>(uniform(rng, 0, static_cast<int>(sym.pulses.size()) - 1))];
    if (pick == 2) return uniform(rng, 0, 1) ? "true" : "false";
    static const char* cmp[] = {"<", "<=", ">", ">=", "==", "!="};
    return real_expr(rng, sym, depth - 1) + " " + cmp[uniform(rng, 0, 5)] + " " +
           real_expr(rng, sym, depth - 1);
  }
  switch (uniform(rng, 0, 3)) {
    case 0:
      return bool_expr(rng, sym, depth - 1, allow_pulse) + " and " +
             bool_expr(rng, sym, depth - 1, allow_pulse);
    case 1:
      return bool_expr(rng, sym, depth - 1, allow_pulse) + " or " +
             bool_expr(rng, sym, depth - 1, allow_pulse);
    case 2: return "!" + bool_expr(rng, sym, 0, allow_pulse);
    default: return "(" + bool_expr(rng, sym, depth - 1, allow_pulse) + ")";
  }
}

inline std::string random_fsm(Rng& rng, int index) {
  std::ostringstream out;
  const std::string name = "m" + std::to_string(index);
  Symbols sym;
  out << "fsm" << ws(rng) << name << ws(rng) << "{";
  const int n_params = uniform(rng, 0, 2);
  for (int i = 0; i < n_params; ++i) {
    const std::string p = "p" + std::to_string(i);
    sym.reals.push_back(p);
    out << ws(rng) << "param " << p << " = " << number(rng) << ";";
  }
  const int n_inputs = uniform(rng, 0, 2);
  for (int i = 0; i < n_inputs; ++i) {
    const std::string in = "in" + std::to_string(i);
    if (uniform(rng, 0, 1)) {
      sym.pulses.push_back(in);
      out << ws(rng) << "input " << in << ": event;";
    } else {
      sym.bools.push_back(in);
      out << ws(rng) << "input " << in << ": bool = " << (uniform(rng, 0, 1) ? "true" : "false")
          << ";";
    }
  }
  const int n_vars = uniform(rng, 1, 3);
  std::vector<std::string> vars;
  for (int i = 0; i < n_vars; ++i) {
    const std::string v = "v" + std::to_string(i);
    vars.push_back(v);
    sym.reals.push_back(v);
    out << ws(rng) << "var " << v << ": real = " << number(rng) << ";";
  }
  const int n_timers = uniform(rng, 0, 1);
  std::vector<std::string> timers;
  for (int i = 0; i < n_timers; ++i) {
    const std::string t = "tm" + std::to_string(i);
    timers.push_back(t);
    sym.pulses.push_back(t);
    out << ws(rng) << "timer " << t << " = " << number(rng) << ";";
  }
  const int n_states = uniform(rng, 1, 3);
  std::vector<std::string> states;
  for (int i = 0; i < n_states; ++i) {
    states.push_back("S" + std::to_string(i));
    out << ws(rng) << "state S" << i << (i == 0 ? " init;" : ";");
  }
  const int n_trans = uniform(rng, 0, 4);
  for (int i = 0; i < n_trans; ++i) {
    out << ws(rng) << "on " << bool_expr(rng, sym, 2, true) << " from "
        << states[static_cast<std::size_t>(uniform(rng, 0, n_states - 1))] << " to "
        << states[static_cast<std::size_t>(uniform(rng, 0, n_states - 1))];
    if (uniform(rng, 0, 1)) {
      out << " do " << vars[static_cast<std::size_t>(uniform(rng, 0, n_vars - 1))]
          << " := " << real_expr(rng, sym, 2);
      if (!timers.empty() && uniform(rng, 0, 1)) out << ", reset " << timers.front();
    }
    out << ";";
  }
  out << ws(rng) << "}";
  return out.str();
}

inline std::string random_ha(Rng& rng, int index) {
  std::ostringstream out;
  const std::string name = "h" + std::to_string(index);
  Symbols sym;
  out << "ha" << ws(rng) << name << ws(rng) << "{";
  const int n_params = uniform(rng, 0, 2);
  for (int i = 0; i < n_params; ++i) {
    const std::string p = "k" + std::to_string(i);
    sym.reals.push_back(p);
    out << ws(rng) << "param " << p << " = " << number(rng) << ";";
  }
  const int n_vars = uniform(rng, 1, 3);
  std::vector<std::string> vars;
  for (int i = 0; i < n_vars; ++i) {
    const std::string v = "y" + std::to_string(i);
    vars.push_back(v);
    sym.reals.push_back(v);
    out << ws(rng) << "var " << v << " = " << number(rng) << ";";
  }
  if (uniform(rng, 0, 1)) out << ws(rng) << "output done: real;";
  const int n_locs = uniform(rng, 1, 3);
  for (int i = 0; i < n_locs; ++i) {
    out << ws(rng) << "loc L" << i << (i == 0 ? " init" : "") << " {";
    for (int v = 0; v < n_vars; ++v)
      if (uniform(rng, 0, 1)) out << ws(rng) << "flow " << vars[static_cast<std::size_t>(v)]
                                  << "' = " << real_expr(rng, sym, 2) << ";";
    if (uniform(rng, 0, 1)) out << ws(rng) << "inv " << bool_expr(rng, sym, 1, false) << ";";
    out << ws(rng) << "}";
  }
  const int n_edges = uniform(rng, 0, 3);
  for (int i = 0; i < n_edges; ++i) {
    out << ws(rng) << "edge L" << uniform(rng, 0, n_locs - 1) << " -> L"
        << uniform(rng, 0, n_locs - 1);
    out << " if " << bool_expr(rng, sym, 1, false);
    if (uniform(rng, 0, 1)) out << " urgent";
    if (uniform(rng, 0, 1))
      out << " do " << vars[static_cast<std::size_t>(uniform(rng, 0, n_vars - 1))]
          << " := " << real_expr(rng, sym, 1);
    out << ";";
  }
  out << ws(rng) << "}";
  return out.str();
}

inline std::string random_cpn(Rng& rng, int index) {
  std::ostringstream out;
  const std::string cs = "col" + std::to_string(index);
  out << "colorset " << cs << " = a" << index << " | b" << index << ";" << ws(rng);
  out << "colorset prod" << index << " = " << cs << " * real;" << ws(rng);
  out << "cpn n" << index << ws(rng) << "{";
  out << ws(rng) << "var d: " << cs << ";";
  out << ws(rng) << "var r: real;";
  out << ws(rng) << "input go" << index << ": real;";
  const int n_places = uniform(rng, 1, 3);
  for (int i = 0; i < n_places; ++i) {
    out << ws(rng) << "place pl" << i << ": prod" << index;
    if (uniform(rng, 0, 1)) out << " init 1'(a" << index << ", " << number(rng) << ")";
    out << ";";
  }
  const int n_trans = uniform(rng, 0, 2);
  for (int i = 0; i < n_trans; ++i) {
    out << ws(rng) << "trans t" << i << " {";
    out << ws(rng) << "in pl" << uniform(rng, 0, n_places - 1) << ": (d, r);";
    if (uniform(rng, 0, 1)) out << ws(rng) << "when go" << index << ": r2;";
    if (uniform(rng, 0, 1)) out << ws(rng) << "guard r >= " << number(rng) << ";";
    out << ws(rng) << "out pl" << uniform(rng, 0, n_places - 1) << ": (d, r);";
    out << ws(rng) << "}";
  }
  out << ws(rng) << "var r2: real;";
  out << ws(rng) << "}";
  return out.str();
}

inline std::string random_document(Rng& rng) {
  std::ostringstream out;
  const int n_fsm = uniform(rng, 0, 2);
  const int n_ha = uniform(rng, 0, 2);
  const bool with_cpn = uniform(rng, 0, 1) == 1;
  for (int i = 0; i < n_fsm; ++i) out << random_fsm(rng, i) << ws(rng);
  for (int i = 0; i < n_ha; ++i) out << random_ha(rng, i) << ws(rng);
  if (with_cpn) out << random_cpn(rng, 0) << ws(rng);
  if (n_fsm + n_ha == 0 && !with_cpn) out << random_fsm(rng, 9);
  return out.str();
}

inline std::string random_bytes(Rng& rng, std::size_t max_len) {
  const std::size_t len = static_cast<std::size_t>(uniform(rng, 0, static_cast<int>(max_len)));
  std::string s;
  s.reserve(len);
  for (std::size_t i = 0; i < len; ++i) {
    // mix of printable structure-ish characters and raw bytes
    if (uniform(rng, 0, 3) == 0) {
      static const char* frag[] = {"fsm", "{", "}", ";", "on", "state", "0.5", "->", "'", "(", ")",
                                   "colorset", "|", "init", "==", "1e", "\"", "\\"};
      s += frag[uniform(rng, 0, 17)];
    } else {
      s += static_cast<char>(uniform(rng, 0, 255));
    }
  }
  return s;
}

}  // namespace gen
