#include <doctest.h>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "carry/errors.hpp"
#include "carry/gait_vel.hpp"
#include "carry/metrics.hpp"
#include "carry/simgait.hpp"
#include "support/gen.hpp"

using namespace carry;
using carry::test::Gen;

namespace {

struct Emitted {
  GaitEvent event;
  double at_tick;  // time of the sample that produced it
};

struct Trace {
  std::vector<Emitted> emitted;
  std::vector<GaitState> states;
  VelDetectorState final;

  std::vector<GaitEvent> events() const {
    std::vector<GaitEvent> out;
    for (const auto& e : emitted) out.push_back(e.event);
    return out;
  }
};

Trace drive(const std::vector<double>& left, const std::vector<double>& right, const VelDetectorConfig& cfg,
            VelDetectorState s = {}, double rate = 100.0) {
  Trace tr;
  for (std::size_t k = 0; k < left.size(); ++k) {
    const double t = static_cast<double>(k) / rate;
    auto step = vel_step(s, cfg, t, left[k], right[k]);
    s = step.state;
    for (const auto& e : step.events) tr.emitted.push_back({e, t});
    tr.states.push_back(vel_phases(s));
  }
  tr.final = s;
  return tr;
}

VelDetectorState with_phases(Phase left, Phase right) {
  VelDetectorState s;
  s.leg(Foot::Left).phase = left;
  s.leg(Foot::Right).phase = right;
  return s;
}

}  // namespace

TEST_CASE("config validation") {
  CHECK_NOTHROW(VelDetectorConfig{}.validate());
  CHECK_THROWS_AS((VelDetectorConfig{0.0, 0.5, 3, 0.3}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((VelDetectorConfig{0.05, 0.5, 1, 0.3}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((VelDetectorConfig{0.05, -1.0, 3, 0.3}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((VelDetectorConfig{0.05, 0.5, 3, 0.0}.validate()), std::invalid_argument);
}

TEST_CASE("initial state and classification") {
  CHECK(vel_phases(VelDetectorState{}) == GaitState::DoubleStance);
  CHECK(vel_phases(with_phases(Phase::Stance, Phase::Stance)) == GaitState::DoubleStance);
  CHECK(vel_phases(with_phases(Phase::Swing, Phase::Stance)) == GaitState::RightStanceLeftSwing);
}

TEST_CASE("contralateral descending crossing starts stance at the first negative sample") {
  const VelDetectorConfig cfg;
  // Right hip ramps +0.5 -> -0.5 in 0.1 rad/s steps; the left leg is in swing.
  std::vector<double> right;
  for (int i = 0; i <= 10; ++i) right.push_back(0.5 - 0.1 * i);
  const std::vector<double> left(right.size(), 0.0);
  const auto tr = drive(left, right, cfg, with_phases(Phase::Swing, Phase::Stance));
  REQUIRE(tr.emitted.size() == 1);
  const auto& e = tr.emitted[0].event;
  CHECK(e.foot == Foot::Left);
  CHECK(e.kind == GaitEventKind::HeelStrike);
  CHECK(e.t == doctest::Approx(0.06));        // -0.1 rad/s, first sample past zero
  CHECK(tr.emitted[0].at_tick == doctest::Approx(0.06));  // already beyond -0.05
  CHECK(tr.final.leg(Foot::Left).phase == Phase::Stance);
}

TEST_CASE("crossing is dated at the first sample past zero even inside the band") {
  const VelDetectorConfig cfg;
  const std::vector<double> right{0.4, 0.2, -0.02, -0.04, -0.3, -0.5};
  const std::vector<double> left(right.size(), 0.0);
  const auto tr = drive(left, right, cfg, with_phases(Phase::Swing, Phase::Stance));
  REQUIRE(tr.emitted.size() == 1);
  CHECK(tr.emitted[0].event.t == doctest::Approx(0.02));
  CHECK(tr.emitted[0].at_tick == doctest::Approx(0.04));
}

TEST_CASE("ascending crossings trigger too; dithering inside the band does not") {
  const VelDetectorConfig cfg;
  SUBCASE("ascending") {
    const std::vector<double> left{-0.5, -0.2, 0.1, 0.5};
    const std::vector<double> right(left.size(), 0.0);
    const auto tr = drive(left, right, cfg, with_phases(Phase::Stance, Phase::Swing));
    REQUIRE(tr.emitted.size() == 1);
    CHECK(tr.emitted[0].event.foot == Foot::Right);
    CHECK(tr.emitted[0].event.t == doctest::Approx(0.02));
  }
  SUBCASE("dither") {
    std::vector<double> right{0.5};
    for (int i = 0; i < 100; ++i) right.push_back(i % 2 ? 0.04 : -0.04);
    const std::vector<double> left(right.size(), 0.0);
    const auto tr = drive(left, right, cfg, with_phases(Phase::Swing, Phase::Stance));
    CHECK(tr.emitted.empty());
  }
}

TEST_CASE("a crossing while the leg is already in stance is ignored") {
  const VelDetectorConfig cfg;
  const std::vector<double> right{0.5, 0.2, -0.2, -0.5};
  const std::vector<double> left(right.size(), 0.0);
  const auto tr = drive(left, right, cfg);
  CHECK(tr.emitted.empty());
}

TEST_CASE("peak confirmation backdates toe-off to the maximum") {
  const VelDetectorConfig cfg;  // confirm 3 samples
  const std::vector<double> left{0.0, 0.8, 1.5, 2.0, 1.9, 1.7, 1.4, 1.0};
  const std::vector<double> right(left.size(), 0.0);
  const auto tr = drive(left, right, cfg);
  REQUIRE(tr.emitted.size() == 1);
  const auto& e = tr.emitted[0];
  CHECK(e.event.foot == Foot::Left);
  CHECK(e.event.kind == GaitEventKind::ToeOff);
  CHECK(e.event.t == doctest::Approx(0.03));
  CHECK(e.at_tick - e.event.t == doctest::Approx(3 * 0.01));
  CHECK(tr.states[5] == GaitState::DoubleStance);
  CHECK(tr.states[6] == GaitState::RightStanceLeftSwing);
}

TEST_CASE("peaks below the minimum are not toe-offs") {
  const VelDetectorConfig cfg;
  const std::vector<double> left{0.0, 0.3, 0.45, 0.4, 0.3, 0.2, 0.1, 0.0};
  const std::vector<double> right(left.size(), 0.0);
  CHECK(drive(left, right, cfg).emitted.empty());
}

TEST_CASE("standing still produces nothing") {
  const std::vector<double> zeros(500, 0.0);
  const auto tr = drive(zeros, zeros, VelDetectorConfig{});
  CHECK(tr.emitted.empty());
  CHECK(vel_phases(tr.final) == GaitState::DoubleStance);
}

TEST_CASE("events too close to the previous same-leg event are suppressed") {
  VelDetectorConfig cfg;
  cfg.min_event_gap_s = 0.3;
  // Left toe-off at 0.03, then a right crossing at 0.10 that would strike the left heel.
  const std::vector<double> left{0.0, 0.8, 1.5, 2.0, 1.9, 1.7, 1.4, 1.0, 1.0, 1.0, 1.0, 1.0};
  const std::vector<double> right{0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, -0.5, -0.5};
  const auto tr = drive(left, right, cfg);
  REQUIRE(tr.emitted.size() == 1);
  CHECK(tr.emitted[0].event.kind == GaitEventKind::ToeOff);
  cfg.min_event_gap_s = 0.05;
  const auto tr2 = drive(left, right, cfg);
  REQUIRE(tr2.emitted.size() == 2);
  CHECK(tr2.emitted[1].event.kind == GaitEventKind::HeelStrike);
  CHECK(tr2.emitted[1].event.t == doctest::Approx(0.10));
}

TEST_CASE("bad samples are data errors") {
  const VelDetectorConfig cfg;
  const auto s = vel_step({}, cfg, 1.0, 0.0, 0.0).state;
  CHECK_THROWS_AS(vel_step(s, cfg, 1.1, NAN, 0.0), DataError);
  CHECK_THROWS_AS(vel_step(s, cfg, 1.1, 0.0, INFINITY), DataError);
  CHECK_THROWS_AS(vel_step(s, cfg, 0.9, 0.0, 0.0), DataError);
}

TEST_CASE("random streams: alternation, gaps, fixed confirmation lag, determinism") {
  Gen g(31);
  for (int trial = 0; trial < 150; ++trial) {
    VelDetectorConfig cfg;
    cfg.zero_hysteresis_rad_s = g.uniform(0.01, 0.3);
    cfg.peak_min_rad_s = g.uniform(0.1, 1.5);
    cfg.peak_confirm_samples = g.integer(2, 6);
    cfg.min_event_gap_s = g.uniform(0.05, 0.5);
    // Two noisy quasi-periodic signals with drifting frequency.
    const std::size_t n = 3000;
    std::vector<double> left(n), right(n);
    double ph = g.uniform(0.0, 1.0);
    const double noise = g.uniform(0.0, 0.5);
    const double lag = g.uniform(0.3, 0.7);
    for (std::size_t k = 0; k < n; ++k) {
      ph += g.uniform(0.3, 1.5) / 100.0;
      left[k] = 2.0 * std::sin(2 * std::numbers::pi * ph) + noise * g.normal();
      right[k] = 2.0 * std::sin(2 * std::numbers::pi * (ph + lag)) + noise * g.normal();
    }
    const auto tr = drive(left, right, cfg);
    const auto again = drive(left, right, cfg);
    const auto events = tr.events();
    CAPTURE(trial);
    CHECK(events == again.events());
    CHECK(events_alternate(events));
    for (Foot foot : {Foot::Left, Foot::Right}) {
      const auto mine = select_events(events, foot);
      for (std::size_t i = 1; i < mine.size(); ++i) CHECK(mine[i].t - mine[i - 1].t >= cfg.min_event_gap_s - 1e-9);
    }
    for (const auto& e : tr.emitted) {
      if (e.event.kind == GaitEventKind::ToeOff) {
        CHECK(e.at_tick - e.event.t == doctest::Approx(cfg.peak_confirm_samples / 100.0));
      } else {
        CHECK(e.at_tick >= e.event.t);
      }
    }
  }
}

TEST_CASE("noise-free synthetic gait: events within 30 ms of truth") {
  Gen g(32);
  for (int trial = 0; trial < 10; ++trial) {
    GaitParams p;
    p.cadence_hz = g.uniform(0.6, 1.0);
    p.stance_fraction = g.uniform(0.55, 0.7);
    p.omega_amp_rad_s = g.uniform(1.0, 3.0);
    const TrialLog log = generate(p, 60.0);
    const auto& wl = log.channel(channel::kOmegaLeft).samples;
    const auto& wr = log.channel(channel::kOmegaRight).samples;
    const auto tr = drive(wl, wr, VelDetectorConfig{});
    const auto events = tr.events();
    const auto labels = phase_labels(events, {Phase::Stance, Phase::Stance}, log.control_samples(), 100.0);
    const auto score = score_detection(events, labels, log.truth_events, log.truth_phases, 0.030);
    CAPTURE(trial);
    CHECK(score.heel_strike.missed == 0);
    CHECK(score.toe_off.missed == 0);
    CHECK(score.heel_strike.spurious == 0);
    CHECK(score.toe_off.spurious == 0);
  }
}

TEST_CASE("5% noise: per-sample accuracy stays above 95%") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    GaitParams p;
    p.noise_sigma = 0.05;
    p.seed = seed;
    const TrialLog log = generate(p, 60.0);
    const auto tr = drive(log.channel(channel::kOmegaLeft).samples, log.channel(channel::kOmegaRight).samples,
                          VelDetectorConfig{});
    const auto labels = phase_labels(tr.events(), {Phase::Stance, Phase::Stance}, log.control_samples(), 100.0);
    const auto score = score_detection(tr.events(), labels, log.truth_events, log.truth_phases);
    CAPTURE(seed);
    CHECK(score.phase_accuracy >= 0.95);
    CHECK(events_alternate(tr.events()));
  }
}
