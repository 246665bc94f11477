#include "carry/pipeline.hpp"

#include <chrono>
#include <stdexcept>
#include <string>
#include <thread>
#include <variant>

#include "carry/errors.hpp"
#include "carry/signals.hpp"

namespace carry {

namespace {

class FsrFramework {
 public:
  explicit FsrFramework(const FsrDetectorConfig& cfg) : cfg_(cfg) {}

  void step(const ReplayFrame& f, std::vector<GaitEvent>& events) {
    if (!left_) {
      left_ = fsr_initial_state(cfg_, f.left);
      right_ = fsr_initial_state(cfg_, f.right);
      initial_ = {left_->phase, right_->phase};
    }
    step_leg(*left_, f.left, events);
    step_leg(*right_, f.right, events);
  }

  GaitState state() const { return both_feet_phases(*left_, *right_); }
  LegPhases initial() const { return initial_; }

 private:
  void step_leg(LegPhaseState& leg, const InsoleFrame& frame, std::vector<GaitEvent>& events) const {
    auto next = fsr_step(leg, cfg_, frame);
    leg = next.state;
    if (next.event) events.push_back(*next.event);
  }

  FsrDetectorConfig cfg_;
  std::optional<LegPhaseState> left_;
  std::optional<LegPhaseState> right_;
  LegPhases initial_;
};

class VelFramework {
 public:
  explicit VelFramework(const VelDetectorConfig& cfg) : cfg_(cfg) {}

  void step(const ReplayFrame& f, std::vector<GaitEvent>& events) {
    auto next = vel_step(state_, cfg_, f.t, f.omega_left, f.omega_right);
    state_ = std::move(next.state);
    events.insert(events.end(), next.events.begin(), next.events.end());
  }

  GaitState state() const { return vel_phases(state_); }
  LegPhases initial() const { return {Phase::Stance, Phase::Stance}; }

 private:
  VelDetectorConfig cfg_;
  VelDetectorState state_;
};

using Framework = std::variant<FsrFramework, VelFramework>;

Framework make_framework(const RunConfig& cfg) {
  if (cfg.mode == DetectorMode::FootSensors) return FsrFramework(cfg.fsr);
  return VelFramework(cfg.vel);
}

}  // namespace

std::string_view to_string(DetectorMode m) noexcept {
  return m == DetectorMode::FootSensors ? "foot-sensors" : "actuators-velocity";
}

DetectorMode parse_detector_mode(std::string_view s) {
  if (s == "foot-sensors") return DetectorMode::FootSensors;
  if (s == "actuators-velocity") return DetectorMode::ActuatorsVelocity;
  throw std::invalid_argument("unknown mode '" + std::string(s) + "' (foot-sensors | actuators-velocity)");
}

void RunConfig::validate() const {
  controller.validate();
  fsr.validate(controller.rate_hz);
  vel.validate();
}

RunResult run_closed_loop(const TrialLog& log, const RunConfig& cfg, const RunOptions& options) {
  cfg.validate();
  if (std::abs(log.rates.control_hz - cfg.controller.rate_hz) > 1e-9) {
    throw DataError("trial control rate " + std::to_string(log.rates.control_hz) +
                    " Hz differs from controller rate " + std::to_string(cfg.controller.rate_hz) + " Hz");
  }

  RunResult out;
  Framework framework = make_framework(cfg);
  EnvelopeTracker envelope(log.channel(channel::kEmgForearm).rate_hz, log.emg_mvc);
  AssistState assist;
  std::optional<double> emg_value;

  const auto period = std::chrono::duration<double>(1.0 / cfg.controller.rate_hz);
  const auto start = std::chrono::steady_clock::now();

  auto tick = [&](const ReplayFrame& f) {
    if (options.realtime) {
      std::this_thread::sleep_until(start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                                period * static_cast<double>(f.tick)));
    }
    for (double raw : f.emg) emg_value = envelope.push(raw);
    if (f.emg.empty()) ++out.stale_ticks;
    const double emg = emg_value.value_or(0.0);

    std::visit([&](auto& fw) { fw.step(f, out.events); }, framework);
    const GaitState gait = std::visit([](const auto& fw) { return fw.state(); }, framework);

    const auto next = controller_tick({f.t, gait, emg}, assist, cfg.controller);
    assist = next.state;
    out.commands.push_back(next.command);
    out.online_states.push_back(gait);
    out.emg_norm.push_back(emg);
  };

  if (options.async_replay) {
    replay_async(log, options.queue_capacity, tick);
  } else {
    replay(log, tick);
  }

  out.initial = std::visit([](const auto& fw) { return fw.initial(); }, framework);
  out.labels = phase_labels(out.events, out.initial, out.commands.size(), cfg.controller.rate_hz);
  return out;
}

std::vector<TorqueCommand> drive_controller(std::span<const GaitState> states, std::span<const double> emg_norm,
                                            const ControllerConfig& cfg, double t0) {
  cfg.validate();
  if (states.size() != emg_norm.size()) throw DataError("gait-state and EMG streams differ in length");
  std::vector<TorqueCommand> out;
  out.reserve(states.size());
  AssistState assist;
  for (std::size_t k = 0; k < states.size(); ++k) {
    const double t = t0 + static_cast<double>(k) / cfg.rate_hz;
    const auto next = controller_tick({t, states[k], emg_norm[k]}, assist, cfg);
    assist = next.state;
    out.push_back(next.command);
  }
  return out;
}

}  // namespace carry
