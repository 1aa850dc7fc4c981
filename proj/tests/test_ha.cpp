#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "twinkernel/ha.hpp"
#include "twinkernel/impact.hpp"
#include "twinkernel/modelspec.hpp"

using namespace twinkernel;

namespace {

struct Models {
  HaModel conveyor = impact::build_conveyor_ha();
  CompileResult hbr = impact::compile_or_throw(impact::hbr_source(), "hbr");
  const HaModel& arm = hbr.set.has[static_cast<std::size_t>(hbr.set.find_ha("arm"))];

  static int loc(const HaModel& m, const char* name) {
    for (std::size_t i = 0; i < m.locations.size(); ++i)
      if (m.locations[i].name == name) return static_cast<int>(i);
    return -1;
  }
  static int var(const HaModel& m, const char* name) {
    for (std::size_t i = 0; i < m.vars.size(); ++i)
      if (m.vars[i].name == name) return static_cast<int>(i);
    return -1;
  }
  static int input(const HaModel& m, const char* name) {
    for (std::size_t i = 0; i < m.inputs.size(); ++i)
      if (m.inputs[i].name == name) return static_cast<int>(i);
    return -1;
  }
};

Event ev(const char* name, Value v) { return Event{name, std::move(v), SimTime::zero()}; }

}  // namespace

TEST_CASE("models validate cleanly") {
  Models m;
  CHECK(ha_validate(m.conveyor).empty());
  CHECK(ha_validate(m.arm).empty());
  CHECK(m.conveyor.locations.size() == 4);
  CHECK(m.arm.locations.size() == 3);
}

TEST_CASE("one RK4 step reproduces the accelerating belt exactly") {
  Models m;
  const auto ctx = make_ha_context(m.conveyor);
  HaState s = ha_initial_state(ctx);
  s.location = Models::loc(m.conveyor, "Acc");
  const auto out = integrate_step(ctx, s, 1.0);
  CHECK(out.x[static_cast<std::size_t>(Models::var(m.conveyor, "x"))] ==
        doctest::Approx(0.25).epsilon(1e-14));
  CHECK(out.x[static_cast<std::size_t>(Models::var(m.conveyor, "v"))] ==
        doctest::Approx(0.5).epsilon(1e-14));
  CHECK(out.location == s.location);
}

TEST_CASE("zero flow leaves the state untouched") {
  Models m;
  const auto ctx = make_ha_context(m.conveyor);
  HaState s = ha_initial_state(ctx);
  s.x[static_cast<std::size_t>(Models::var(m.conveyor, "x"))] = 3.25;
  const auto out = integrate_step(ctx, s, 7.5);
  CHECK(out.x == s.x);
}

TEST_CASE("the arm advances linearly at its configured speed") {
  Models m;
  const auto ctx = make_ha_context(m.arm);
  HaState s = ha_initial_state(ctx);
  s.location = Models::loc(m.arm, "q7");
  const auto out = integrate_step(ctx, s, 1.0);
  CHECK(out.x[static_cast<std::size_t>(Models::var(m.arm, "arm_x"))] ==
        doctest::Approx(0.03).epsilon(1e-14));
}

TEST_CASE("integration rejects non-positive steps and diverged states") {
  Models m;
  const auto ctx = make_ha_context(m.conveyor);
  const HaState s = ha_initial_state(ctx);
  CHECK_THROWS_AS(integrate_step(ctx, s, 0.0), ContractError);

  const char* blow_up = R"(
ha unstable {
  var y = 1.0;
  loc L init {
    flow y' = y * y * 1000000.0;
  }
}
)";
  auto cr = parse_and_compile(blow_up);
  REQUIRE(cr.ok);
  const auto uctx = make_ha_context(cr.set.has.front());
  HaState us = ha_initial_state(uctx);
  CHECK_THROWS_AS(
      [&] {
        for (int i = 0; i < 100000; ++i) us = integrate_step(uctx, us, 0.05);
      }(),
      NumericDivergenceError);
}

TEST_CASE("locate_crossing finds the speed limit to one nanosecond") {
  Models m;
  const auto ctx = make_ha_context(m.conveyor);
  HaState s = ha_initial_state(ctx);
  s.location = Models::loc(m.conveyor, "Acc");
  const int v = Models::var(m.conveyor, "v");
  s.x[static_cast<std::size_t>(v)] = 0.9;

  const HaPredicate reached = [&](const HaState& st) {
    return st.x[static_cast<std::size_t>(v)] >= 1.0;
  };
  const auto t_star = locate_crossing(ctx, s, reached, SimTime::from_millis(500));
  REQUIRE(t_star.has_value());
  CHECK(std::fabs(t_star->to_seconds() - 0.2) <= 1e-9);

  // bracket property: false one nanosecond earlier, true at t*
  CHECK(reached(ha_state_at(ctx, s, *t_star)));
  CHECK(!reached(ha_state_at(ctx, s, *t_star - SimTime::from_nanos(1))));
}

TEST_CASE("locate_crossing resolves the arm deadband arrival near t = 9 s") {
  Models m;
  const auto ctx = make_ha_context(m.arm);
  HaState s = ha_initial_state(ctx);
  s.location = Models::loc(m.arm, "q7");
  s.inputs[static_cast<std::size_t>(Models::input(m.arm, "x_d"))] = Value::real(0.3);
  const int x = Models::var(m.arm, "arm_x");

  const HaPredicate arrived = [&](const HaState& st) {
    return std::fabs(0.3 - st.x[static_cast<std::size_t>(x)]) <= 0.03;
  };
  const auto t_star = locate_crossing(ctx, s, arrived, SimTime::from_secs(10));
  REQUIRE(t_star.has_value());
  CHECK(std::fabs(t_star->to_seconds() - 9.0) <= 1e-6);
}

TEST_CASE("locate_crossing reports none and refuses an already-true predicate") {
  Models m;
  const auto ctx = make_ha_context(m.conveyor);
  HaState s = ha_initial_state(ctx);  // Idle: flows are zero
  const int v = Models::var(m.conveyor, "v");
  const HaPredicate never = [&](const HaState& st) {
    return st.x[static_cast<std::size_t>(v)] >= 1.0;
  };
  CHECK(!locate_crossing(ctx, s, never, SimTime::from_secs(5)).has_value());

  const HaPredicate always = [](const HaState&) { return true; };
  CHECK_THROWS_AS(locate_crossing(ctx, s, always, SimTime::from_secs(1)), AmbiguityError);
}

TEST_CASE("the arm serves a request and reports completion at 9 s") {
  Models m;
  const auto ctx = make_ha_context(m.arm);
  HaState s = ha_initial_state(ctx);

  // request arrives: trigger + latch in one macro step
  std::vector<Event> inputs = {ev("x_d", Value::real(0.3))};
  std::vector<Event> emitted;
  const SimTime delta = SimTime::from_millis(10);
  for (std::int64_t k = 0; k < 1200 && emitted.empty(); ++k) {
    auto r = ha_advance(ctx, s, inputs, SimTime::from_nanos(k * delta.nanos), delta);
    inputs.clear();
    s = r.state;
    for (auto& e : r.emitted) emitted.push_back(std::move(e));
  }
  REQUIRE(emitted.size() == 1);
  CHECK(emitted.front().name == "e");
  CHECK(std::fabs(emitted.front().stamp.to_seconds() - 9.0) <= 1e-6);
  REQUIRE(emitted.front().payload.has_value());
  CHECK(std::fabs(emitted.front().payload->numeric() - 0.27) <= 1e-6);
  CHECK(s.location == Models::loc(m.arm, "q6"));
}

TEST_CASE("a request already inside the deadband does nothing") {
  Models m;
  const auto ctx = make_ha_context(m.arm);
  HaState s = ha_initial_state(ctx);
  const std::vector<Event> inputs = {ev("x_d", Value::real(0.02))};
  const auto r = ha_advance(ctx, s, inputs, SimTime::zero(), SimTime::from_secs(1));
  CHECK(r.emitted.empty());
  CHECK(r.location_changes.empty());
  CHECK(r.state.location == Models::loc(m.arm, "q6"));
  CHECK(r.state.x[static_cast<std::size_t>(Models::var(m.arm, "arm_x"))] == 0.0);
}

TEST_CASE("the belt ramps to full speed in two seconds and then cruises") {
  Models m;
  const auto ctx = make_ha_context(m.conveyor);
  HaState s = ha_initial_state(ctx);
  std::vector<Event> inputs = {ev("TurnOn", Value::boolean(true))};
  std::vector<std::pair<SimTime, int>> changes;
  const SimTime delta = SimTime::from_millis(10);
  for (std::int64_t k = 0; k < 300; ++k) {
    auto r = ha_advance(ctx, s, inputs, SimTime::from_nanos(k * delta.nanos), delta);
    inputs.clear();
    s = r.state;
    for (auto& c : r.location_changes) changes.push_back(c);
  }
  REQUIRE(changes.size() == 2);
  CHECK(changes[0].second == Models::loc(m.conveyor, "Acc"));
  CHECK(changes[0].first == SimTime::zero());
  CHECK(changes[1].second == Models::loc(m.conveyor, "Const"));
  CHECK(std::fabs(changes[1].first.to_seconds() - 2.0) <= 1e-6);
  CHECK(std::fabs(s.x[static_cast<std::size_t>(Models::var(m.conveyor, "v"))] - 1.0) <= 1e-6);
}

TEST_CASE("switching off decelerates to standstill in two seconds") {
  Models m;
  const auto ctx = make_ha_context(m.conveyor);
  HaState s = ha_initial_state(ctx);
  s.location = Models::loc(m.conveyor, "Const");
  s.x[static_cast<std::size_t>(Models::var(m.conveyor, "v"))] = 1.0;
  s.inputs[static_cast<std::size_t>(Models::input(m.conveyor, "TurnOn"))] = Value::boolean(true);

  std::vector<Event> inputs = {ev("TurnOn", Value::boolean(false))};
  std::vector<std::pair<SimTime, int>> changes;
  const SimTime delta = SimTime::from_millis(10);
  for (std::int64_t k = 0; k < 300; ++k) {
    auto r = ha_advance(ctx, s, inputs, SimTime::from_nanos(k * delta.nanos), delta);
    inputs.clear();
    s = r.state;
    for (auto& c : r.location_changes) changes.push_back(c);
  }
  REQUIRE(changes.size() == 2);
  CHECK(changes[0].second == Models::loc(m.conveyor, "Dec"));
  CHECK(changes[1].second == Models::loc(m.conveyor, "Idle"));
  CHECK(std::fabs(changes[1].first.to_seconds() - 2.0) <= 1e-6);
  CHECK(std::fabs(s.x[static_cast<std::size_t>(Models::var(m.conveyor, "v"))]) <= 1e-6);
}

TEST_CASE("event stamps are non-decreasing and stay inside the macro step") {
  Models m;
  const auto ctx = make_ha_context(m.arm);
  HaState s = ha_initial_state(ctx);
  const SimTime t0 = SimTime::from_secs(4);
  const SimTime delta = SimTime::from_secs(20);
  const std::vector<Event> inputs = {ev("x_d", Value::real(0.3))};
  const auto r = ha_advance(ctx, s, inputs, t0, delta);
  SimTime last = t0;
  for (const auto& e : r.emitted) {
    CHECK(e.stamp >= last);
    CHECK(e.stamp >= t0);
    CHECK(e.stamp <= t0 + delta);
    last = e.stamp;
  }
  REQUIRE(!r.emitted.empty());
  CHECK(std::fabs(r.emitted.front().stamp.to_seconds() - 13.0) <= 1e-6);
}

TEST_CASE("a Zeno loop aborts at the jump cap instead of hanging") {
  const char* zeno = R"(
ha zeno {
  var y = 0.0;
  loc A init {
    flow y' = 0.0;
  }
  loc B {
    flow y' = 0.0;
  }
  edge A -> B if y >= 0.0 urgent;
  edge B -> A if y >= 0.0 urgent;
}
)";
  auto cr = parse_and_compile(zeno);
  REQUIRE(cr.ok);
  const auto ctx = make_ha_context(cr.set.has.front());
  const HaState s = ha_initial_state(ctx);
  CHECK_THROWS_AS(ha_advance(ctx, s, {}, SimTime::zero(), SimTime::from_millis(10)), ZenoError);
}

TEST_CASE("committed states respect location invariants within 1e-9") {
  Models m;
  const auto ctx = make_ha_context(m.conveyor);
  HaState s = ha_initial_state(ctx);
  const int v = Models::var(m.conveyor, "v");
  std::vector<Event> inputs = {ev("TurnOn", Value::boolean(true))};
  const SimTime delta = SimTime::from_millis(10);
  double worst = 0.0;
  for (std::int64_t k = 0; k < 500; ++k) {
    auto r = ha_advance(ctx, s, inputs, SimTime::from_nanos(k * delta.nanos), delta);
    inputs.clear();
    s = r.state;
    if (s.location == Models::loc(m.conveyor, "Acc"))
      worst = std::max(worst, s.x[static_cast<std::size_t>(v)] - 1.0);  // inv: v < v_max
  }
  CHECK(worst <= 1e-9);
}
