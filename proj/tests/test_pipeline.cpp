#include <doctest.h>

#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <thread>
#include <vector>

#include "carry/bounded_queue.hpp"
#include "carry/errors.hpp"
#include "carry/metrics.hpp"
#include "carry/pipeline.hpp"
#include "carry/signals.hpp"

using namespace carry;

namespace {

RunConfig config(DetectorMode mode) {
  RunConfig cfg;
  cfg.mode = mode;
  return cfg;
}

void check_same(const RunResult& a, const RunResult& b) {
  REQUIRE(a.commands.size() == b.commands.size());
  for (std::size_t k = 0; k < a.commands.size(); ++k) {
    CHECK(a.commands[k].t == b.commands[k].t);
    CHECK(a.commands[k].tau_left == b.commands[k].tau_left);
    CHECK(a.commands[k].tau_right == b.commands[k].tau_right);
  }
  CHECK(a.events == b.events);
  CHECK(a.online_states == b.online_states);
  CHECK(a.emg_norm == b.emg_norm);
  CHECK(a.labels == b.labels);
  CHECK(a.stale_ticks == b.stale_ticks);
}

}  // namespace

TEST_CASE("mode names") {
  CHECK(parse_detector_mode("foot-sensors") == DetectorMode::FootSensors);
  CHECK(parse_detector_mode("actuators-velocity") == DetectorMode::ActuatorsVelocity);
  CHECK(to_string(DetectorMode::ActuatorsVelocity) == "actuators-velocity");
  CHECK_THROWS_AS(parse_detector_mode("fsr"), std::invalid_argument);
}

TEST_CASE("closed loop over a clean trial") {
  const TrialLog log = generate({}, 30.0);
  for (auto mode : {DetectorMode::FootSensors, DetectorMode::ActuatorsVelocity}) {
    CAPTURE(to_string(mode));
    const auto r = run_closed_loop(log, config(mode));
    REQUIRE(r.commands.size() == 3000);
    CHECK(r.online_states.size() == 3000);
    CHECK(r.emg_norm.size() == 3000);
    CHECK(r.labels.size() == 3000);
    CHECK(r.stale_ticks == 0);
    CHECK(r.commands[1].t == doctest::Approx(0.01));
    CHECK(events_alternate(r.events));
    const auto score = score_detection(r.events, r.labels, log.truth_events, log.truth_phases);
    CHECK(score.phase_accuracy >= 0.99);
    CHECK(score.recall() == 1.0);

    // Every command obeys the distribution rule for the state it was given.
    const ControllerConfig c;
    for (std::size_t k = 0; k < r.commands.size(); ++k) {
      const double tau = c.k_myo * r.emg_norm[k];
      const auto want = distribute(r.online_states[k], tau, c);
      CHECK(r.commands[k].tau_left == want.left);
      CHECK(r.commands[k].tau_right == want.right);
      CHECK(r.emg_norm[k] >= 0.0);
      CHECK(r.emg_norm[k] <= 1.0);
    }
  }
}

TEST_CASE("online envelope matches the causal chain decimated to the control rate") {
  const TrialLog log = generate({}, 10.0);
  const auto r = run_closed_loop(log, config(DetectorMode::FootSensors));
  const TimeSeries& raw = log.channel(channel::kEmgForearm);
  EnvelopeTracker tracker(raw.rate_hz, log.emg_mvc);
  std::vector<double> each;
  for (std::size_t i = 0; i < raw.size(); ++i) each.push_back(tracker.push(raw[i]));
  const std::size_t per_tick = static_cast<std::size_t>(raw.rate_hz / log.rates.control_hz);
  for (std::size_t k = 0; k < r.emg_norm.size(); ++k) {
    CHECK(r.emg_norm[k] == each[k * per_tick]);  // samples up to and including t_k
  }
}

TEST_CASE("async replay and realtime pacing change no values") {
  GaitParams p;
  p.noise_sigma = 0.05;
  p.seed = 11;
  const TrialLog log = generate(p, 10.0);
  for (auto mode : {DetectorMode::FootSensors, DetectorMode::ActuatorsVelocity}) {
    const auto sync = run_closed_loop(log, config(mode));
    RunOptions opt;
    opt.async_replay = true;
    opt.queue_capacity = 3;
    check_same(sync, run_closed_loop(log, config(mode), opt));
    opt.queue_capacity = 1;
    check_same(sync, run_closed_loop(log, config(mode), opt));
  }
  // Pacing a short trial against the wall clock.
  const TrialLog shortlog = generate({}, 7.5);
  RunOptions rt;
  rt.realtime = true;
  const auto t0 = std::chrono::steady_clock::now();
  const auto paced = run_closed_loop(shortlog, config(DetectorMode::FootSensors), rt);
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(elapsed >= 7.4);  // last tick is due at 7.49 s
  check_same(run_closed_loop(shortlog, config(DetectorMode::FootSensors)), paced);
}

TEST_CASE("run errors") {
  const TrialLog log = generate({}, 10.0);
  RunConfig cfg;
  cfg.controller.rate_hz = 200.0;
  CHECK_THROWS_AS(run_closed_loop(log, cfg), DataError);
  cfg = {};
  cfg.controller.k_stance = 2.0;
  CHECK_THROWS_AS(run_closed_loop(log, cfg), std::invalid_argument);
  TrialLog broken = log;
  broken.channels.erase(std::string(channel::kEmgForearm));
  CHECK_THROWS_AS(run_closed_loop(broken, RunConfig{}), DataError);
}

TEST_CASE("controller driven by truth states splits torque exactly") {
  const TrialLog log = generate({}, 20.0);
  const auto states = log.truth_states();
  std::vector<double> emg(states.size());
  for (std::size_t k = 0; k < emg.size(); ++k) emg[k] = 0.5 + 0.5 * std::sin(0.05 * static_cast<double>(k));
  const ControllerConfig c;
  const auto cmds = drive_controller(states, emg, c, 2.0);
  REQUIRE(cmds.size() == states.size());
  CHECK(cmds[0].t == 2.0);
  std::size_t double_stance = 0;
  for (std::size_t k = 0; k < cmds.size(); ++k) {
    if (states[k] != GaitState::DoubleStance) continue;
    ++double_stance;
    const double tau = c.k_myo * emg[k];
    CHECK(cmds[k].tau_left == 0.5 * tau);
    CHECK(cmds[k].tau_right == 0.5 * tau);
  }
  CHECK(double_stance > 0);
  CHECK_THROWS_AS(drive_controller(states, std::span(emg).first(10), c), DataError);
}

TEST_CASE("bounded queue hands items over in order and drains after close") {
  BoundedQueue<int> q(2);
  std::vector<int> got;
  std::jthread consumer([&] {
    while (auto v = q.pop()) got.push_back(*v);
  });
  for (int i = 0; i < 1000; ++i) REQUIRE(q.push(i));
  q.close();
  consumer.join();
  std::vector<int> want(1000);
  std::iota(want.begin(), want.end(), 0);
  CHECK(got == want);
  CHECK_FALSE(q.push(5));

  BoundedQueue<int> zero(0);  // treated as capacity one
  CHECK(zero.push(1));
  zero.close();
  CHECK(zero.pop() == 1);
  CHECK_FALSE(zero.pop());
}
