#pragma once

#include <array>
#include <optional>

#include "carry/gait_types.hpp"

namespace carry {

/// One insole reading. Indices 0-3 sit under the metatarsals (front cluster),
/// 4-7 under the heel (back cluster). Forces in newtons, already calibrated.
struct InsoleFrame {
  double t = 0.0;
  Foot foot = Foot::Left;
  std::array<double, 8> forces{};
};

struct ClusterForces {
  double front_n = 0.0;
  double back_n = 0.0;

  double total() const noexcept { return front_n + back_n; }
};

struct FsrDetectorConfig {
  double contact_threshold_n = 20.0;
  double release_threshold_n = 10.0;
  double min_phase_s = 0.15;

  /// Requires 0 < release < contact and min_phase_s of at least two periods
  /// of `control_rate_hz`. Throws std::invalid_argument.
  void validate(double control_rate_hz = 100.0) const;
};

struct LegPhaseState {
  Phase phase = Phase::Stance;
  double since = 0.0;  // time the current phase began
  std::optional<GaitEvent> last_event;
  std::optional<double> last_frame_t;
};

struct FsrStep {
  LegPhaseState state;
  std::optional<GaitEvent> event;
};

ClusterForces cluster_sums(const InsoleFrame& frame);

/// Starting state taken from the first frame of a stream: Stance when the
/// total force already exceeds the contact threshold, Swing otherwise. No
/// event is emitted.
LegPhaseState fsr_initial_state(const FsrDetectorConfig& cfg, const InsoleFrame& first);

/// Advances one foot's detector by a frame.
///
/// Swing -> Stance (heel strike) when total force rises above the contact
/// threshold; Stance -> Swing (toe-off) when both clusters are below the
/// release threshold. Either transition is held off until min_phase_s after
/// the previous event. Throws DataError for frames that go back in time or
/// carry negative / non-finite forces.
FsrStep fsr_step(const LegPhaseState& state, const FsrDetectorConfig& cfg, const InsoleFrame& frame);

GaitState both_feet_phases(const LegPhaseState& left, const LegPhaseState& right) noexcept;

}  // namespace carry
