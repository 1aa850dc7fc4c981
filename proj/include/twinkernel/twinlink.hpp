#pragma once
// Plant-side interface: recorded plant traces, twin-vs-plant discrepancy
// metrics, and scalar parameter calibration by golden-section search over
// repeated simulator runs.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "twinkernel/composition.hpp"
#include "twinkernel/core.hpp"

namespace twinkernel {

// ---------------------------------------------------------------------------
// Plant traces (CSV with a `t_seconds,<signal>...` header)

struct PlantTrace {
  std::vector<std::string> signals;
  struct Row {
    SimTime t;
    std::vector<double> values;
  };
  std::vector<Row> rows;
};

inline PlantTrace parse_plant_csv(std::string_view text) {
  PlantTrace out;
  std::size_t pos = 0;
  int line_no = 0;
  auto next_line = [&]() -> std::optional<std::string_view> {
    if (pos >= text.size()) return std::nullopt;
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = nl + 1;
    ++line_no;
    return line;
  };
  auto split = [](std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      if (comma == std::string_view::npos) {
        cells.push_back(line.substr(start));
        return cells;
      }
      cells.push_back(line.substr(start, comma - start));
      start = comma + 1;
    }
  };

  const auto header = next_line();
  if (!header) throw LoadError("plant trace is empty");
  const auto head_cells = split(*header);
  if (head_cells.empty() || head_cells.front() != "t_seconds")
    throw LoadError("line 1: header must start with t_seconds");
  for (std::size_t i = 1; i < head_cells.size(); ++i) {
    if (head_cells[i].empty()) throw LoadError("line 1: empty signal name in header");
    out.signals.emplace_back(head_cells[i]);
  }

  while (const auto line = next_line()) {
    if (line->empty()) continue;
    const auto cells = split(*line);
    if (cells.size() != head_cells.size())
      throw LoadError("line " + std::to_string(line_no) + ": expected " +
                      std::to_string(head_cells.size()) + " cells, got " +
                      std::to_string(cells.size()));
    PlantTrace::Row row;
    auto parse_cell = [&](std::string_view cell) {
      double v = 0;
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (res.ec != std::errc() || res.ptr != cell.data() + cell.size())
        throw LoadError("line " + std::to_string(line_no) + ": non-numeric cell '" +
                        std::string(cell) + "'");
      return v;
    };
    row.t = SimTime::from_seconds(parse_cell(cells.front()));
    if (!out.rows.empty() && row.t <= out.rows.back().t)
      throw LoadError("line " + std::to_string(line_no) + ": time is not strictly increasing");
    for (std::size_t i = 1; i < cells.size(); ++i) row.values.push_back(parse_cell(cells[i]));
    out.rows.push_back(std::move(row));
  }
  return out;
}

inline PlantTrace load_plant_trace(const std::filesystem::path& path) {
  return parse_plant_csv(read_text_file(path));
}

// ---------------------------------------------------------------------------
// Discrepancy measurement

struct SignalDiscrepancy {
  std::string signal;
  double rmse = 0.0;
  double max_abs = 0.0;
  std::optional<SimTime> first_divergence;  // earliest sample with |twin-plant| > tol
  std::size_t samples = 0;
};

struct DiscrepancyReport {
  std::vector<SignalDiscrepancy> signals;
  double tolerance = 0.0;
};

namespace twinlink_detail {

struct SampledSignal {
  std::vector<SimTime> t;
  std::vector<double> v;
};

inline std::map<std::string, SampledSignal> twin_signals(const Trace& twin) {
  std::map<std::string, SampledSignal> out;
  for (const auto& r : twin.records) {
    if (r.kind != RecordKind::Signal || !r.value.is_numeric()) continue;
    auto& sig = out[r.source + "." + r.name];
    sig.t.push_back(r.t);
    sig.v.push_back(r.value.numeric());
  }
  return out;
}

inline SimTime default_gap(const SampledSignal& sig) {
  if (sig.t.size() < 2) return SimTime::from_nanos(1);
  std::vector<std::int64_t> gaps;
  gaps.reserve(sig.t.size() - 1);
  for (std::size_t i = 1; i < sig.t.size(); ++i) gaps.push_back(sig.t[i].nanos - sig.t[i - 1].nanos);
  std::sort(gaps.begin(), gaps.end());
  return SimTime::from_nanos(std::max<std::int64_t>(1, gaps[gaps.size() / 2] / 2));
}

}  // namespace twinlink_detail

// Aligns plant samples to twin samples by nearest time (join gap at most
// `max_gap`, default half the twin's median sample interval) and reports RMSE,
// max |error| and the first divergence beyond `tol` per signal.
inline DiscrepancyReport compare_traces(const Trace& twin, const PlantTrace& plant,
                                        std::span<const std::string> signals, double tol,
                                        std::optional<SimTime> max_gap = {}) {
  const auto twin_sigs = twinlink_detail::twin_signals(twin);

  std::vector<std::string> selected(signals.begin(), signals.end());
  if (selected.empty()) {
    for (const auto& s : plant.signals)
      if (twin_sigs.count(s)) selected.push_back(s);
    if (selected.empty())
      throw ComparisonError("no common signals between the twin trace and the plant trace");
  }

  DiscrepancyReport report;
  report.tolerance = tol;
  for (const auto& name : selected) {
    const auto twin_it = twin_sigs.find(name);
    const auto plant_it = std::find(plant.signals.begin(), plant.signals.end(), name);
    if (twin_it == twin_sigs.end())
      throw ComparisonError("twin trace has no signal '" + name + "'");
    if (plant_it == plant.signals.end())
      throw ComparisonError("plant trace has no signal '" + name + "'");
    const std::size_t col = static_cast<std::size_t>(plant_it - plant.signals.begin());
    const auto& sig = twin_it->second;
    const SimTime gap = max_gap ? *max_gap : twinlink_detail::default_gap(sig);

    SignalDiscrepancy d;
    d.signal = name;
    double sum_sq = 0.0;
    for (const auto& row : plant.rows) {
      // nearest twin sample
      const auto lb = std::lower_bound(sig.t.begin(), sig.t.end(), row.t);
      std::size_t best = static_cast<std::size_t>(lb - sig.t.begin());
      if (best == sig.t.size() ||
          (best > 0 && row.t.nanos - sig.t[best - 1].nanos <= sig.t[best].nanos - row.t.nanos))
        --best;
      if (best >= sig.t.size()) continue;
      const std::int64_t dist = std::abs(sig.t[best].nanos - row.t.nanos);
      if (dist > gap.nanos) continue;
      const double err = sig.v[best] - row.values[col];
      sum_sq += err * err;
      d.max_abs = std::max(d.max_abs, std::fabs(err));
      if (!d.first_divergence && std::fabs(err) > tol) d.first_divergence = row.t;
      ++d.samples;
    }
    if (d.samples == 0)
      throw ComparisonError("signal '" + name + "': twin and plant samples do not overlap");
    d.rmse = std::sqrt(sum_sq / static_cast<double>(d.samples));
    report.signals.push_back(std::move(d));
  }
  return report;
}

inline std::string report_to_text(const DiscrepancyReport& report) {
  std::string out = "signal                     rmse          max_abs       first_divergence\n";
  for (const auto& s : report.signals) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%-26s %-13.6g %-13.6g %s\n", s.signal.c_str(), s.rmse,
                  s.max_abs,
                  s.first_divergence ? format_real(s.first_divergence->to_seconds()).c_str()
                                     : "none");
    out += buf;
  }
  return out;
}

// Canonical structured form: one JSON object per signal, keys sorted.
inline std::string report_to_jsonl(const DiscrepancyReport& report) {
  std::string out;
  for (const auto& s : report.signals) {
    out += "{\"first_divergence\":";
    out += s.first_divergence ? format_real(s.first_divergence->to_seconds()) : "null";
    out += ",\"max_abs\":" + format_real(s.max_abs);
    out += ",\"rmse\":" + format_real(s.rmse);
    out += ",\"samples\":" + format_int(static_cast<std::int64_t>(s.samples));
    out += ",\"signal\":";
    detail::append_json_string(out, s.signal);
    out += ",\"tol\":" + format_real(report.tolerance);
    out += "}\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Scalar calibration

struct CalibrationRequest {
  const ModelSet* models = nullptr;
  int system = -1;
  std::string param;  // "model.param"
  double lo = 0.0;
  double hi = 0.0;
  const PlantTrace* plant = nullptr;
  std::string signal;
  double tol = 1e-3;  // golden-section bracket width at termination
};

struct CalibrationResult {
  std::string param;
  double fitted = 0.0;
  double rmse = 0.0;
  int evaluations = 0;
  double bracket_width = 0.0;
};

// Minimizes RMSE(signal) over one scalar parameter by golden-section search.
// The bounds and the parameter's current default are always evaluated, and the
// best candidate actually evaluated wins; calibrating against a log the
// simulator itself produced therefore recovers the producing value exactly.
inline CalibrationResult calibrate_scalar(const CalibrationRequest& req) {
  if (!req.models || !req.plant) throw CalibrationError("calibration request is incomplete");
  if (!(req.lo < req.hi)) throw CalibrationError("calibration bounds must satisfy lo < hi");
  if (!(req.tol > 0)) throw CalibrationError("calibration tolerance must be positive");
  if (req.system < 0 || req.system >= static_cast<int>(req.models->systems.size()))
    throw CalibrationError("calibration system not found");

  // current default, for the free extra candidate
  std::optional<double> current;
  {
    ModelSet probe = *req.models;
    if (!set_model_param(probe, req.param, 0.0))
      throw CalibrationError("no parameter named '" + req.param + "'");
    const auto dot = req.param.find('.');
    const std::string model = req.param.substr(0, dot);
    const std::string param = req.param.substr(dot + 1);
    auto scan = [&](const auto& models) -> std::optional<double> {
      for (const auto& m : models) {
        if (m.name != model) continue;
        for (const auto& p : m.params)
          if (p.name == param) return p.value;
      }
      return std::nullopt;
    };
    current = scan(req.models->fsms);
    if (!current) current = scan(req.models->cpns);
    if (!current) current = scan(req.models->has);
  }

  struct Candidate {
    double x;
    double rmse;
  };
  std::vector<Candidate> evaluated;
  const std::vector<std::string> signals{req.signal};
  auto rmse_at = [&](double x) {
    for (const auto& c : evaluated)
      if (c.x == x) return c.rmse;
    if (x < req.lo || x > req.hi)
      throw CalibrationError("candidate outside the search bounds");  // never expected
    ModelSet candidate_set = *req.models;
    set_model_param(candidate_set, req.param, x);
    double rmse = 0.0;
    try {
      const Trace trace =
          system_run(candidate_set, candidate_set.systems[static_cast<std::size_t>(req.system)]);
      const auto report = compare_traces(trace, *req.plant, signals, req.tol);
      rmse = report.signals.front().rmse;
    } catch (const KernelError& e) {
      throw CalibrationError("simulation failed at candidate " + req.param + " = " +
                             format_real(x) + ": " + e.what());
    }
    evaluated.push_back({x, rmse});
    return rmse;
  };

  rmse_at(req.lo);
  rmse_at(req.hi);
  if (current && *current > req.lo && *current < req.hi) rmse_at(*current);

  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = req.lo, b = req.hi;
  double c = b - (b - a) * invphi;
  double d = a + (b - a) * invphi;
  double fc = rmse_at(c);
  double fd = rmse_at(d);
  while (b - a > req.tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - (b - a) * invphi;
      fc = rmse_at(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + (b - a) * invphi;
      fd = rmse_at(d);
    }
    if (evaluated.size() > 200) throw CalibrationError("golden-section search failed to converge");
  }
  rmse_at((a + b) / 2.0);

  CalibrationResult result;
  result.param = req.param;
  result.evaluations = static_cast<int>(evaluated.size());
  result.bracket_width = b - a;
  const Candidate* best = &evaluated.front();
  for (const auto& cand : evaluated)
    if (cand.rmse < best->rmse) best = &cand;  // strict: first minimum wins
  result.fitted = best->x;
  result.rmse = best->rmse;
  return result;
}

}  // namespace twinkernel
