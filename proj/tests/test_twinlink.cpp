#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "doctest.h"
#include "twinkernel/impact.hpp"
#include "twinkernel/modelspec.hpp"
#include "twinkernel/twinlink.hpp"

using namespace twinkernel;

namespace {

struct Belt {
  CompileResult cr = impact::compile_or_throw(impact::belt_source(), "belt");

  Trace run_at(double v_speed, double horizon_s = 10.0) const {
    ModelSet set = cr.set;
    REQUIRE(set_model_param(set, "belt.v_speed", v_speed));
    SystemSpec sys = set.systems.front();
    sys.config.horizon = SimTime::from_seconds(horizon_s);
    return system_run(set, sys);
  }

  // plant log as the simulator would have written it
  PlantTrace plant_at(double v_speed, double horizon_s = 10.0) const {
    return parse_plant_csv(trace_to_signal_csv(run_at(v_speed, horizon_s)));
  }
};

// closed-form plant log x = v * t sampled on a grid
std::string synthetic_csv(double v, double horizon_s, double dt) {
  std::string out = "t_seconds,cv.belt.x\n";
  for (std::int64_t k = 0;; ++k) {
    const double t = static_cast<double>(k) * dt;
    if (t > horizon_s + 1e-12) break;
    out += format_real(t) + "," + format_real(v * t) + "\n";
  }
  return out;
}

}  // namespace

TEST_CASE("plant CSV loading and its error paths") {
  const auto small = parse_plant_csv("t_seconds,v\n0,0\n1,0.03\n");
  CHECK(small.signals == std::vector<std::string>{"v"});
  REQUIRE(small.rows.size() == 2);
  CHECK(small.rows[1].t == SimTime::from_secs(1));
  CHECK(small.rows[1].values[0] == 0.03);

  CHECK_THROWS_AS(parse_plant_csv(""), LoadError);
  CHECK_THROWS_AS(parse_plant_csv("time,v\n0,0\n"), LoadError);
  try {
    parse_plant_csv("t_seconds,v\n0,0\n2,0.1\n1,0.2\n");
    FAIL("expected a load error");
  } catch (const LoadError& e) {
    CHECK(std::string(e.what()).find("line 4") != std::string::npos);
  }
  try {
    parse_plant_csv("t_seconds,v\n0,zero\n");
    FAIL("expected a load error");
  } catch (const LoadError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    CHECK(std::string(e.what()).find("non-numeric") != std::string::npos);
  }
}

TEST_CASE("a 30 s log sampled at 0.1 s has 301 rows") {
  Belt belt;
  const auto plant = belt.plant_at(0.03, 30.0);
  CHECK(plant.rows.size() == 301);
}

TEST_CASE("comparing a trace against itself reports zero everywhere") {
  Belt belt;
  const Trace twin = belt.run_at(0.03);
  const PlantTrace plant = belt.plant_at(0.03);
  const auto report = compare_traces(twin, plant, {}, 1e-3);
  REQUIRE(report.signals.size() == 1);
  CHECK(report.signals.front().signal == "cv.belt.x");
  CHECK(report.signals.front().rmse == 0.0);
  CHECK(report.signals.front().max_abs == 0.0);
  CHECK(!report.signals.front().first_divergence.has_value());
  CHECK(report.signals.front().samples == 101);
}

TEST_CASE("a miscalibrated speed shows the closed-form drift") {
  Belt belt;
  const Trace twin = belt.run_at(0.03);  // x = 0.03 t
  const auto plant = parse_plant_csv(synthetic_csv(0.035, 10.0, 0.1));
  const std::vector<std::string> signals{"cv.belt.x"};
  const auto report = compare_traces(twin, plant, signals, 0.001);
  REQUIRE(report.signals.size() == 1);
  const auto& d = report.signals.front();
  // max |dx| = (0.035 - 0.03) * 10 = 0.05 at t = 10 s
  CHECK(std::fabs(d.max_abs - 0.05) <= 1e-12);
  REQUIRE(d.first_divergence.has_value());
  const double t_div = d.first_divergence->to_seconds();
  CHECK(t_div >= 0.2 - 1e-9);
  CHECK(t_div <= 0.3 + 1e-9);
  // rmse of 0.005 t over the sampled grid stays below the max
  CHECK(d.rmse > 0.0);
  CHECK(d.rmse <= d.max_abs);
}

TEST_CASE("magnitude metrics are symmetric under role swap") {
  Belt belt;
  const Trace t1 = belt.run_at(0.03);
  const Trace t2 = belt.run_at(0.035);
  const PlantTrace p1 = belt.plant_at(0.03);
  const PlantTrace p2 = belt.plant_at(0.035);
  const std::vector<std::string> signals{"cv.belt.x"};
  const auto fwd = compare_traces(t1, p2, signals, 1e-3);
  const auto rev = compare_traces(t2, p1, signals, 1e-3);
  CHECK(fwd.signals.front().rmse == doctest::Approx(rev.signals.front().rmse).epsilon(1e-12));
  CHECK(fwd.signals.front().max_abs ==
        doctest::Approx(rev.signals.front().max_abs).epsilon(1e-12));
}

TEST_CASE("disjoint time ranges cannot be compared") {
  Belt belt;
  const Trace twin = belt.run_at(0.03, 2.0);
  std::string far = "t_seconds,cv.belt.x\n100,3\n101,3.03\n";
  CHECK_THROWS_AS(compare_traces(twin, parse_plant_csv(far),
                                 std::vector<std::string>{"cv.belt.x"}, 1e-3),
                  ComparisonError);

  std::string unrelated = "t_seconds,other.signal\n0,0\n1,1\n";
  CHECK_THROWS_AS(compare_traces(twin, parse_plant_csv(unrelated), {}, 1e-3), ComparisonError);
}

TEST_CASE("calibration recovers a shifted belt speed") {
  Belt belt;
  const PlantTrace plant = belt.plant_at(0.035);
  CalibrationRequest req;
  req.models = &belt.cr.set;
  req.system = 0;
  req.param = "belt.v_speed";
  req.lo = 0.01;
  req.hi = 0.1;
  req.plant = &plant;
  req.signal = "cv.belt.x";
  req.tol = 1e-3;
  const auto result = calibrate_scalar(req);
  CHECK(std::fabs(result.fitted - 0.035) <= 1e-3);
  CHECK(result.bracket_width <= 1e-3);
  CHECK(result.evaluations <= 40);
  CHECK(result.fitted >= req.lo);
  CHECK(result.fitted <= req.hi);
}

TEST_CASE("calibrating against the current default is exact") {
  Belt belt;
  const PlantTrace plant = belt.plant_at(0.03);
  CalibrationRequest req;
  req.models = &belt.cr.set;
  req.system = 0;
  req.param = "belt.v_speed";
  req.lo = 0.01;
  req.hi = 0.1;
  req.plant = &plant;
  req.signal = "cv.belt.x";
  req.tol = 1e-3;
  const auto result = calibrate_scalar(req);
  CHECK(result.fitted == 0.03);  // the default is evaluated and wins outright
  CHECK(result.rmse <= 1e-9);
}

TEST_CASE("bounds that exclude the truth pin the fit to the boundary") {
  Belt belt;
  const PlantTrace plant = belt.plant_at(0.035);
  CalibrationRequest req;
  req.models = &belt.cr.set;
  req.system = 0;
  req.param = "belt.v_speed";
  req.lo = 0.05;
  req.hi = 0.1;
  req.plant = &plant;
  req.signal = "cv.belt.x";
  req.tol = 1e-3;
  const auto result = calibrate_scalar(req);
  CHECK(result.fitted == 0.05);
  CHECK(result.rmse > 0.0);
}

TEST_CASE("self-consistency: parameters inside the bracket are recovered") {
  Belt belt;
  std::mt19937_64 rng(8);
  for (int i = 0; i < 3; ++i) {
    const double truth = 0.02 + 0.07 * std::uniform_real_distribution<double>(0, 1)(rng);
    const PlantTrace plant = belt.plant_at(truth);
    CalibrationRequest req;
    req.models = &belt.cr.set;
    req.system = 0;
    req.param = "belt.v_speed";
    req.lo = 0.01;
    req.hi = 0.1;
    req.plant = &plant;
    req.signal = "cv.belt.x";
    req.tol = 1e-3;
    const auto result = calibrate_scalar(req);
    CHECK(std::fabs(result.fitted - truth) <= 1e-3);
  }
}

TEST_CASE("bad calibration requests are rejected") {
  Belt belt;
  const PlantTrace plant = belt.plant_at(0.03);
  CalibrationRequest req;
  req.models = &belt.cr.set;
  req.system = 0;
  req.param = "belt.no_such";
  req.lo = 0.01;
  req.hi = 0.1;
  req.plant = &plant;
  req.signal = "cv.belt.x";
  CHECK_THROWS_AS(calibrate_scalar(req), CalibrationError);
  req.param = "belt.v_speed";
  req.lo = 0.2;
  req.hi = 0.1;
  CHECK_THROWS_AS(calibrate_scalar(req), CalibrationError);
}

TEST_CASE("reports print in both human and structured form") {
  Belt belt;
  const Trace twin = belt.run_at(0.03);
  const auto report = compare_traces(twin, belt.plant_at(0.035), {}, 1e-3);
  const std::string text = report_to_text(report);
  CHECK(text.find("cv.belt.x") != std::string::npos);
  const std::string jsonl = report_to_jsonl(report);
  CHECK(jsonl.find("\"rmse\":") != std::string::npos);
  CHECK(jsonl.find("\"signal\":\"cv.belt.x\"") != std::string::npos);
}
