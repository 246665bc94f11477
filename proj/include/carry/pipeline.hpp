#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "carry/controller.hpp"
#include "carry/gait_fsr.hpp"
#include "carry/gait_vel.hpp"
#include "carry/simgait.hpp"

namespace carry {

/// Which gait-phase framework feeds the controller.
enum class DetectorMode { FootSensors, ActuatorsVelocity };

std::string_view to_string(DetectorMode m) noexcept;
/// Accepts "foot-sensors" and "actuators-velocity"; throws std::invalid_argument.
DetectorMode parse_detector_mode(std::string_view s);

struct RunConfig {
  DetectorMode mode = DetectorMode::FootSensors;
  ControllerConfig controller;
  FsrDetectorConfig fsr;
  VelDetectorConfig vel;

  void validate() const;
};

struct RunOptions {
  bool realtime = false;      // pace ticks against the wall clock; values unchanged
  bool async_replay = false;  // sensor frames arrive through a bounded queue
  std::size_t queue_capacity = 64;
};

struct RunResult {
  std::vector<TorqueCommand> commands;  // one per control tick
  std::vector<GaitEvent> events;
  std::vector<GaitState> online_states;  // what the controller saw each tick
  std::vector<double> emg_norm;          // decimated causal envelope
  LegPhases initial;
  std::vector<LegPhases> labels;  // reconstructed from the (backdated) events
  std::size_t stale_ticks = 0;    // ticks that reused a previous EMG value
};

/// Offline closed loop at the trial's control rate: causal EMG envelope,
/// selected detector, controller. No wall-clock dependence unless
/// options.realtime is set.
RunResult run_closed_loop(const TrialLog& log, const RunConfig& cfg, const RunOptions& options = {});

/// Controller driven by a supplied gait-state stream (e.g. ground truth).
std::vector<TorqueCommand> drive_controller(std::span<const GaitState> states, std::span<const double> emg_norm,
                                            const ControllerConfig& cfg, double t0 = 0.0);

}  // namespace carry
