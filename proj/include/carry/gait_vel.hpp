#pragma once

#include <array>
#include <optional>
#include <vector>

#include "carry/gait_types.hpp"

namespace carry {

struct VelDetectorConfig {
  double zero_hysteresis_rad_s = 0.05;
  double peak_min_rad_s = 0.5;
  int peak_confirm_samples = 3;
  double min_event_gap_s = 0.3;

  void validate() const;
};

/// Sign tracker for one hip's angular velocity with a +/- hysteresis band.
/// `sign` is 0 until the signal first leaves the band.
struct ZeroCrossTracker {
  int sign = 0;
  std::optional<double> first_past_zero_t;
};

/// Per-leg state of the hip-velocity framework.
struct VelLegState {
  Phase phase = Phase::Stance;
  double since = 0.0;
  std::optional<double> running_max;  // own omega since the last event
  double running_max_t = 0.0;
  int decline_count = 0;
  std::optional<double> last_event_t;
  ZeroCrossTracker crossing;
};

/// Both legs start in Stance (standing before walking).
struct VelDetectorState {
  std::array<VelLegState, 2> legs{};
  std::optional<double> last_t;

  VelLegState& leg(Foot f) noexcept { return legs[f == Foot::Left ? 0 : 1]; }
  const VelLegState& leg(Foot f) const noexcept { return legs[f == Foot::Left ? 0 : 1]; }
};

struct VelStep {
  VelDetectorState state;
  std::vector<GaitEvent> events;  // time-ordered
};

/// Advances the detector by one control sample.
///
/// Leg L enters Stance (HeelStrike) when the contralateral omega crosses zero
/// in either direction, dated at the first sample past zero. Leg L enters Swing
/// (ToeOff) once its own omega has exceeded peak_min and then stayed below the
/// running maximum for peak_confirm_samples samples; the event is dated at the
/// maximum. Events closer than min_event_gap_s to the previous event of the
/// same leg are dropped. Throws DataError on non-finite input or time running
/// backwards.
VelStep vel_step(const VelDetectorState& state, const VelDetectorConfig& cfg, double t,
                 double omega_left, double omega_right);

GaitState vel_phases(const VelDetectorState& state) noexcept;

}  // namespace carry
