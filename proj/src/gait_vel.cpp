#include "carry/gait_vel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "carry/errors.hpp"

namespace carry {

namespace {

constexpr double kGapSlack = 1e-9;

// Returns the crossing time when the tracked signal has just passed through
// the whole hysteresis band.
std::optional<double> track_crossing(ZeroCrossTracker& z, double h, double t, double omega) {
  if (z.sign == 0) {
    if (omega > h) z.sign = 1;
    if (omega < -h) z.sign = -1;
    return std::nullopt;
  }
  const double signed_omega = omega * z.sign;  // > 0 while on the armed side
  if (signed_omega > 0.0) {
    z.first_past_zero_t.reset();
    return std::nullopt;
  }
  if (!z.first_past_zero_t && signed_omega < 0.0) z.first_past_zero_t = t;
  if (signed_omega < -h) {
    const double at = z.first_past_zero_t.value_or(t);
    z.sign = -z.sign;
    z.first_past_zero_t.reset();
    return at;
  }
  return std::nullopt;
}

bool gap_ok(const VelLegState& leg, double t, const VelDetectorConfig& cfg) {
  return !leg.last_event_t || t - *leg.last_event_t >= cfg.min_event_gap_s - kGapSlack;
}

void clear_peak(VelLegState& leg) {
  leg.running_max.reset();
  leg.decline_count = 0;
}

void enter(VelLegState& leg, GaitEventKind kind, double at) {
  leg.phase = phase_after(kind);
  leg.since = at;
  leg.last_event_t = at;
  clear_peak(leg);
}

}  // namespace

void VelDetectorConfig::validate() const {
  if (!(zero_hysteresis_rad_s > 0.0)) throw std::invalid_argument("zero_hysteresis_rad_s must be > 0");
  if (!(peak_min_rad_s > 0.0)) throw std::invalid_argument("peak_min_rad_s must be > 0");
  if (peak_confirm_samples < 2) throw std::invalid_argument("peak_confirm_samples must be >= 2");
  if (!(min_event_gap_s > 0.0)) throw std::invalid_argument("min_event_gap_s must be > 0");
}

VelStep vel_step(const VelDetectorState& state, const VelDetectorConfig& cfg, double t,
                 double omega_left, double omega_right) {
  if (!std::isfinite(t) || !std::isfinite(omega_left) || !std::isfinite(omega_right)) {
    throw DataError("hip angular velocity sample at t=" + std::to_string(t) + " is not finite");
  }
  if (state.last_t && t < *state.last_t) {
    throw DataError("hip angular velocity sample at t=" + std::to_string(t) + " arrives after t=" +
                    std::to_string(*state.last_t));
  }

  VelStep out{state, {}};
  out.state.last_t = t;
  const double h = cfg.zero_hysteresis_rad_s;

  const std::array<double, 2> omega{omega_left, omega_right};
  std::array<std::optional<double>, 2> crossed;
  for (std::size_t i = 0; i < 2; ++i) {
    crossed[i] = track_crossing(out.state.legs[i].crossing, h, t, omega[i]);
  }

  for (Foot foot : {Foot::Left, Foot::Right}) {
    const std::size_t me = foot == Foot::Left ? 0 : 1;
    const std::size_t contra = 1 - me;
    VelLegState& leg = out.state.legs[me];

    if (leg.phase == Phase::Swing) {
      if (crossed[contra] && gap_ok(leg, *crossed[contra], cfg)) {
        enter(leg, GaitEventKind::HeelStrike, *crossed[contra]);
        out.events.push_back({*crossed[contra], foot, GaitEventKind::HeelStrike});
      }
      continue;
    }

    // Stance: watch our own velocity for a confirmed peak.
    if (!leg.running_max || omega[me] > *leg.running_max) {
      leg.running_max = omega[me];
      leg.running_max_t = t;
      leg.decline_count = 0;
      continue;
    }
    ++leg.decline_count;
    if (*leg.running_max > cfg.peak_min_rad_s && leg.decline_count >= cfg.peak_confirm_samples) {
      const double at = leg.running_max_t;
      if (gap_ok(leg, at, cfg)) {
        enter(leg, GaitEventKind::ToeOff, at);
        out.events.push_back({at, foot, GaitEventKind::ToeOff});
      } else {
        clear_peak(leg);
      }
    }
  }

  std::sort(out.events.begin(), out.events.end(),
            [](const GaitEvent& a, const GaitEvent& b) { return a.t < b.t; });
  return out;
}

GaitState vel_phases(const VelDetectorState& state) noexcept {
  return classify(state.leg(Foot::Left).phase, state.leg(Foot::Right).phase);
}

}  // namespace carry
