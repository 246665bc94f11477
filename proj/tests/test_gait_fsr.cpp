#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "carry/errors.hpp"
#include "carry/gait_fsr.hpp"
#include "carry/gait_types.hpp"
#include "carry/simgait.hpp"
#include "support/gen.hpp"
#include "support/oracles.hpp"

using namespace carry;
using carry::test::Gen;

namespace {

InsoleFrame frame(double t, std::array<double, 8> forces, Foot foot = Foot::Left) { return {t, foot, forces}; }

InsoleFrame back_only(double t, double force) { return frame(t, {0, 0, 0, 0, force, 0, 0, 0}); }

std::vector<GaitEvent> run_detector(std::span<const InsoleFrame> frames, const FsrDetectorConfig& cfg) {
  std::vector<GaitEvent> events;
  if (frames.empty()) return events;
  LegPhaseState s = fsr_initial_state(cfg, frames[0]);
  for (const auto& f : frames) {
    auto step = fsr_step(s, cfg, f);
    s = step.state;
    if (step.event) events.push_back(*step.event);
  }
  return events;
}

// Piecewise stream of loading bumps and rests with random ramps and sensor
// splits, sampled at 100 Hz.
std::vector<InsoleFrame> random_stream(Gen& g, std::size_t n, double noise) {
  std::vector<InsoleFrame> out;
  double level = 0.0;
  double target = 0.0;
  std::size_t hold = 0;
  std::array<double, 8> split{};
  for (std::size_t k = 0; k < n; ++k) {
    if (hold == 0) {
      target = g.coin(0.5) ? g.uniform(0.0, 600.0) : g.uniform(0.0, 15.0);
      hold = 1 + g.index(60);
      double sum = 0.0;
      for (auto& w : split) sum += (w = g.uniform(0.0, 1.0));
      for (auto& w : split) w /= sum;
    }
    --hold;
    level += (target - level) * g.uniform(0.1, 1.0);
    InsoleFrame f{static_cast<double>(k) / 100.0, Foot::Left, {}};
    for (std::size_t i = 0; i < 8; ++i) f.forces[i] = std::max(0.0, level * split[i] + noise * g.normal());
    out.push_back(f);
  }
  return out;
}

}  // namespace

TEST_CASE("enum spellings round-trip and unknown text is rejected") {
  for (auto f : {Foot::Left, Foot::Right}) CHECK(parse_foot(to_string(f)) == f);
  for (auto p : {Phase::Stance, Phase::Swing}) CHECK(parse_phase(to_string(p)) == p);
  for (auto k : {GaitEventKind::HeelStrike, GaitEventKind::ToeOff}) CHECK(parse_event_kind(to_string(k)) == k);
  for (auto s : {GaitState::DoubleStance, GaitState::LeftStanceRightSwing, GaitState::RightStanceLeftSwing,
                 GaitState::DoubleSwing}) {
    CHECK(parse_gait_state(to_string(s)) == s);
  }
  CHECK(to_string(GaitState::LeftStanceRightSwing) == "left_stance_right_swing");
  CHECK_THROWS_AS(parse_foot("Left"), DataError);
  CHECK_THROWS_AS(parse_phase(""), DataError);
  CHECK_THROWS_AS(parse_gait_state("stance"), DataError);
}

TEST_CASE("four-state classification") {
  CHECK(classify(Phase::Stance, Phase::Stance) == GaitState::DoubleStance);
  CHECK(classify(Phase::Stance, Phase::Swing) == GaitState::LeftStanceRightSwing);
  CHECK(classify(Phase::Swing, Phase::Stance) == GaitState::RightStanceLeftSwing);
  CHECK(classify(Phase::Swing, Phase::Swing) == GaitState::DoubleSwing);

  LegPhaseState l, r;
  CHECK(both_feet_phases(l, r) == GaitState::DoubleStance);
  r.phase = Phase::Swing;
  CHECK(both_feet_phases(l, r) == GaitState::LeftStanceRightSwing);
  l.phase = Phase::Swing;
  CHECK(both_feet_phases(l, r) == GaitState::DoubleSwing);
}

TEST_CASE("phase labels agree with a search over the event list") {
  Gen g(21);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<GaitEvent> events;
    for (Foot foot : {Foot::Left, Foot::Right}) {
      double t = g.uniform(-0.5, 0.5);
      auto kind = g.coin() ? GaitEventKind::HeelStrike : GaitEventKind::ToeOff;
      for (int i = 0; i < 10; ++i) {
        t += g.coin(0.2) ? 0.01 * g.integer(1, 3) : g.uniform(0.01, 1.0);
        events.push_back({t, foot, kind});
        kind = kind == GaitEventKind::HeelStrike ? GaitEventKind::ToeOff : GaitEventKind::HeelStrike;
      }
    }
    const LegPhases initial{g.phase(), g.phase()};
    const auto got = phase_labels(events, initial, 800, 100.0);
    CAPTURE(trial);
    CHECK(got == test::labels_by_search(events, initial, 800, 100.0));
  }
}

TEST_CASE("event alternation check") {
  using K = GaitEventKind;
  std::vector<GaitEvent> ok{{0.1, Foot::Left, K::HeelStrike}, {0.2, Foot::Right, K::HeelStrike},
                            {0.3, Foot::Left, K::ToeOff}, {0.4, Foot::Left, K::HeelStrike}};
  CHECK(events_alternate(ok));
  auto dup = ok;
  dup.push_back({0.5, Foot::Left, K::HeelStrike});
  CHECK_FALSE(events_alternate(dup));
  auto back = ok;
  back.push_back({0.35, Foot::Left, K::ToeOff});
  CHECK_FALSE(events_alternate(back));
  CHECK(select_events(ok, Foot::Left).size() == 3);
  CHECK(select_events(ok, Foot::Left, K::HeelStrike).size() == 2);
}

TEST_CASE("cluster sums") {
  auto c = cluster_sums(frame(0, {0, 0, 0, 0, 0, 0, 0, 0}));
  CHECK(c.front_n == 0.0);
  CHECK(c.back_n == 0.0);
  c = cluster_sums(frame(0, {1, 1, 1, 1, 2, 2, 2, 2}));
  CHECK(c.front_n == 4.0);
  CHECK(c.back_n == 8.0);
  c = cluster_sums(back_only(0, 30.0));
  CHECK(c.front_n == 0.0);
  CHECK(c.back_n == 30.0);
  CHECK(c.total() == 30.0);
}

TEST_CASE("detector config validation") {
  CHECK_NOTHROW(FsrDetectorConfig{}.validate());
  CHECK_THROWS_AS((FsrDetectorConfig{10.0, 10.0, 0.15}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((FsrDetectorConfig{20.0, 0.0, 0.15}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((FsrDetectorConfig{20.0, 10.0, 0.015}.validate()), std::invalid_argument);
  CHECK_NOTHROW((FsrDetectorConfig{20.0, 10.0, 0.02}.validate()));
  CHECK_THROWS_AS((FsrDetectorConfig{20.0, 10.0, 0.02}.validate(50.0)), std::invalid_argument);
}

TEST_CASE("heel strike on a rising back-cluster ramp") {
  const FsrDetectorConfig cfg;
  std::vector<InsoleFrame> frames;
  for (int k = 0; k <= 10; ++k) frames.push_back(back_only(0.01 * k, 5.0 * k));  // 0 -> 50 N
  LegPhaseState s = fsr_initial_state(cfg, frames[0]);
  REQUIRE(s.phase == Phase::Swing);
  std::vector<GaitEvent> events;
  for (const auto& f : frames) {
    auto step = fsr_step(s, cfg, f);
    s = step.state;
    if (step.event) events.push_back(*step.event);
  }
  REQUIRE(events.size() == 1);
  CHECK(events[0].kind == GaitEventKind::HeelStrike);
  CHECK(events[0].t == doctest::Approx(0.05));  // first frame strictly above 20 N
  CHECK(s.phase == Phase::Stance);
  CHECK(events == test::fsr_events_offline(frames, cfg));
}

TEST_CASE("toe-off once both clusters unload past the debounce") {
  const FsrDetectorConfig cfg;
  std::vector<InsoleFrame> frames;
  for (int k = 0; k < 40; ++k) frames.push_back(frame(0.01 * k, {0, 0, 0, 0, 0, 0, 0, 0}));
  LegPhaseState s;
  s.phase = Phase::Stance;
  s.last_event = GaitEvent{0.0, Foot::Left, GaitEventKind::HeelStrike};
  std::vector<GaitEvent> events;
  for (const auto& f : frames) {
    auto step = fsr_step(s, cfg, f);
    s = step.state;
    if (step.event) events.push_back(*step.event);
  }
  REQUIRE(events.size() == 1);
  CHECK(events[0].kind == GaitEventKind::ToeOff);
  CHECK(events[0].t == doctest::Approx(0.15));
  CHECK(s.phase == Phase::Swing);
}

TEST_CASE("front cluster alone keeps the foot in stance") {
  const FsrDetectorConfig cfg;
  LegPhaseState s;
  auto step = fsr_step(s, cfg, frame(0.0, {3, 3, 3, 3, 0, 0, 0, 0}));
  CHECK_FALSE(step.event);
  CHECK(step.state.phase == Phase::Stance);
}

TEST_CASE("constant zero frames in swing change nothing") {
  const FsrDetectorConfig cfg;
  LegPhaseState s;
  s.phase = Phase::Swing;
  s.since = -1.0;
  for (int k = 0; k < 100; ++k) {
    auto step = fsr_step(s, cfg, frame(0.01 * k, {}));
    CHECK_FALSE(step.event);
    s = step.state;
  }
  CHECK(s.phase == Phase::Swing);
  CHECK(s.since == -1.0);
  CHECK_FALSE(s.last_event);
}

TEST_CASE("malformed frames are data errors") {
  const FsrDetectorConfig cfg;
  LegPhaseState s = fsr_step({}, cfg, frame(1.0, {})).state;
  CHECK_THROWS_AS(fsr_step(s, cfg, frame(0.5, {})), DataError);
  CHECK_THROWS_AS(fsr_step(s, cfg, frame(1.5, {0, 0, -1, 0, 0, 0, 0, 0})), DataError);
  CHECK_THROWS_AS(fsr_step(s, cfg, frame(1.5, {0, 0, NAN, 0, 0, 0, 0, 0})), DataError);
  CHECK_NOTHROW(fsr_step(s, cfg, frame(1.0, {})));  // equal timestamps are allowed
}

TEST_CASE("random streams: oracle agreement, alternation and debounce") {
  Gen g(22);
  for (int trial = 0; trial < 200; ++trial) {
    FsrDetectorConfig cfg;
    cfg.release_threshold_n = g.uniform(2.0, 30.0);
    cfg.contact_threshold_n = cfg.release_threshold_n + g.uniform(1.0, 40.0);
    cfg.min_phase_s = 0.01 * g.integer(2, 30);
    const auto frames = random_stream(g, 1500, g.coin() ? 0.0 : g.uniform(0.0, 20.0));
    const auto events = run_detector(frames, cfg);
    CAPTURE(trial);
    CHECK(events == test::fsr_events_offline(frames, cfg));
    CHECK(events_alternate(events));
    for (std::size_t i = 1; i < events.size(); ++i) CHECK(events[i].t - events[i - 1].t >= cfg.min_phase_s - 1e-9);
  }
}

TEST_CASE("raising the contact threshold never brings a heel strike earlier") {
  Gen g(23);
  for (int trial = 0; trial < 200; ++trial) {
    auto frames = random_stream(g, 1500, g.uniform(0.0, 10.0));
    frames[0].forces = {};  // both detectors start airborne
    FsrDetectorConfig low;
    low.contact_threshold_n = g.uniform(15.0, 60.0);
    FsrDetectorConfig high = low;
    high.contact_threshold_n += g.uniform(0.0, 100.0);

    auto strikes = [](const std::vector<GaitEvent>& ev) {
      std::vector<double> t;
      for (const auto& e : ev) {
        if (e.kind == GaitEventKind::HeelStrike) t.push_back(e.t);
      }
      return t;
    };
    const auto a = strikes(run_detector(frames, low));
    const auto b = strikes(run_detector(frames, high));
    // Every strike under the higher threshold has a strike under the lower one
    // at or before it, no later than the previous higher-threshold strike.
    CAPTURE(trial);
    std::size_t j = 0;
    for (double tb : b) {
      while (j + 1 < a.size() && a[j + 1] <= tb) ++j;
      REQUIRE(!a.empty());
      CHECK(a[j] <= tb);
    }
    if (!a.empty() && !b.empty()) CHECK(a.front() <= b.front());
  }
}

TEST_CASE("noise-free synthetic trials: labels match truth away from events") {
  Gen g(24);
  for (int trial = 0; trial < 12; ++trial) {
    GaitParams p;
    p.cadence_hz = g.uniform(0.6, 1.0);
    p.stance_fraction = g.uniform(0.55, 0.7);
    p.seed = static_cast<std::uint64_t>(trial + 1);
    const TrialLog log = generate(p, 60.0);
    const FsrDetectorConfig cfg;

    std::vector<InsoleFrame> left, right;
    replay(log, [&](const ReplayFrame& f) {
      left.push_back(f.left);
      right.push_back(f.right);
    });
    std::vector<GaitEvent> events = run_detector(left, cfg);
    const auto r = run_detector(right, cfg);
    events.insert(events.end(), r.begin(), r.end());
    std::sort(events.begin(), events.end(), [](const GaitEvent& a, const GaitEvent& b) { return a.t < b.t; });

    const LegPhases initial{fsr_initial_state(cfg, left[0]).phase, fsr_initial_state(cfg, right[0]).phase};
    const auto labels = phase_labels(events, initial, log.control_samples(), log.rates.control_hz);

    std::vector<bool> near_event(labels.size(), false);
    for (const auto& e : log.truth_events) {
      const auto k = static_cast<long>(std::llround(e.t * log.rates.control_hz));
      for (long d = -1; d <= 1; ++d) {
        if (k + d >= 0 && k + d < static_cast<long>(labels.size())) near_event[static_cast<std::size_t>(k + d)] = true;
      }
    }
    std::size_t counted = 0, agree = 0;
    for (std::size_t k = 0; k < labels.size(); ++k) {
      if (near_event[k]) continue;
      ++counted;
      agree += labels[k] == log.truth_phases[k];
    }
    CAPTURE(trial);
    CAPTURE(p.cadence_hz);
    CAPTURE(p.stance_fraction);
    CHECK(static_cast<double>(agree) / static_cast<double>(counted) >= 0.99);
    CHECK(events_alternate(events));
  }
}
