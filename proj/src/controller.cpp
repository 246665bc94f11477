#include "carry/controller.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace carry {

void ControllerConfig::validate() const {
  if (!(k_myo >= 0.0) || !std::isfinite(k_myo)) throw std::invalid_argument("k_myo must be >= 0");
  if (!(k_stance >= 0.0 && k_stance <= 1.0)) throw std::invalid_argument("k_stance must be in [0, 1]");
  if (!(k_swing >= 0.0 && k_swing <= 1.0)) throw std::invalid_argument("k_swing must be in [0, 1]");
  if (k_swing > k_stance) throw std::invalid_argument("k_swing must not exceed k_stance");
  if (ramp_rate_nm_s && !(*ramp_rate_nm_s > 0.0)) {
    throw std::invalid_argument("ramp_rate_nm_s must be positive (or unlimited)");
  }
  if (!(rate_hz > 0.0) || !std::isfinite(rate_hz)) throw std::invalid_argument("controller rate must be > 0");
}

double total_torque(double emg_norm, const ControllerConfig& cfg) {
  if (!(emg_norm >= 0.0 && emg_norm <= 1.0)) {
    throw std::domain_error("normalized EMG " + std::to_string(emg_norm) + " outside [0, 1]");
  }
  return cfg.k_myo * emg_norm;
}

LegTorques distribute(GaitState gait, double tau_exo, const ControllerConfig& cfg) {
  if (!(tau_exo >= 0.0)) throw std::domain_error("total torque must be non-negative");
  switch (gait) {
    case GaitState::DoubleStance: return {cfg.k_stance * tau_exo, cfg.k_stance * tau_exo};
    case GaitState::LeftStanceRightSwing: return {cfg.k_stance * tau_exo, cfg.k_swing * tau_exo};
    case GaitState::RightStanceLeftSwing: return {cfg.k_swing * tau_exo, cfg.k_stance * tau_exo};
    case GaitState::DoubleSwing: return {0.0, 0.0};
  }
  return {0.0, 0.0};
}

TorqueCommand slew_limit(const AssistState& state, const TorqueCommand& target,
                         const ControllerConfig& cfg) {
  if (!cfg.ramp_rate_nm_s) return target;
  const double max_step = *cfg.ramp_rate_nm_s / cfg.rate_hz;
  auto toward = [max_step](double from, double to) {
    if (std::abs(to - from) <= max_step) return to;
    return from + std::clamp(to - from, -max_step, max_step);
  };
  TorqueCommand out = target;
  out.tau_left = toward(state.previous.tau_left, target.tau_left);
  out.tau_right = toward(state.previous.tau_right, target.tau_right);
  return out;
}

ControllerTick controller_tick(const ControllerInputs& in, const AssistState& state,
                               const ControllerConfig& cfg) {
  const double tau_exo = total_torque(in.emg_norm, cfg);
  const LegTorques legs = distribute(in.gait, tau_exo, cfg);
  const TorqueCommand cmd = slew_limit(state, {in.t, legs.left, legs.right}, cfg);
  return {AssistState{cmd, tau_exo}, cmd};
}

}  // namespace carry
