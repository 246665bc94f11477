#pragma once

#include <optional>

#include "carry/gait_types.hpp"

namespace carry {

/// Gains of the carrying-assistance law. `ramp_rate_nm_s` empty means
/// unlimited slew: torque steps at phase transitions, as on the tested device.
struct ControllerConfig {
  double k_myo = 10.0;    // N·m at full-scale envelope
  double k_stance = 0.5;
  double k_swing = 0.0;
  std::optional<double> ramp_rate_nm_s;
  double rate_hz = 100.0;

  void validate() const;
};

struct TorqueCommand {
  double t = 0.0;
  double tau_left = 0.0;   // N·m
  double tau_right = 0.0;  // N·m
};

struct LegTorques {
  double left = 0.0;
  double right = 0.0;
};

struct AssistState {
  TorqueCommand previous;
  double tau_exo = 0.0;
};

struct ControllerInputs {
  double t = 0.0;
  GaitState gait = GaitState::DoubleStance;
  double emg_norm = 0.0;
};

struct ControllerTick {
  AssistState state;
  TorqueCommand command;
};

/// k_myo * emg_norm. Throws std::domain_error unless emg_norm is in [0, 1].
double total_torque(double emg_norm, const ControllerConfig& cfg);

/// Splits the total torque by gait state: stance legs get k_stance, swing legs
/// k_swing, and both airborne gets nothing. Throws std::domain_error on a
/// negative total.
LegTorques distribute(GaitState gait, double tau_exo, const ControllerConfig& cfg);

/// Moves each leg from the previous command toward `target` by at most
/// ramp_rate / rate_hz. Unlimited ramp returns the target unchanged.
TorqueCommand slew_limit(const AssistState& state, const TorqueCommand& target,
                         const ControllerConfig& cfg);

/// One control period: total_torque -> distribute -> slew_limit.
ControllerTick controller_tick(const ControllerInputs& in, const AssistState& state,
                               const ControllerConfig& cfg);

}  // namespace carry
