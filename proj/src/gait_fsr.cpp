#include "carry/gait_fsr.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "carry/errors.hpp"

namespace carry {

namespace {

constexpr double kGapSlack = 1e-9;

void require_valid(const InsoleFrame& frame) {
  if (!std::isfinite(frame.t)) throw DataError("insole frame: non-finite timestamp");
  for (double f : frame.forces) {
    if (!std::isfinite(f) || f < 0.0) {
      throw DataError("insole frame at t=" + std::to_string(frame.t) + ": forces must be finite and >= 0");
    }
  }
}

}  // namespace

void FsrDetectorConfig::validate(double control_rate_hz) const {
  if (!(release_threshold_n > 0.0) || !(contact_threshold_n > release_threshold_n)) {
    throw std::invalid_argument("FSR thresholds need 0 < release < contact");
  }
  if (!(control_rate_hz > 0.0) || !(min_phase_s >= 2.0 / control_rate_hz - kGapSlack)) {
    throw std::invalid_argument("FSR min_phase_s must span at least two control periods");
  }
}

ClusterForces cluster_sums(const InsoleFrame& frame) {
  ClusterForces c;
  for (std::size_t i = 0; i < 4; ++i) c.front_n += frame.forces[i];
  for (std::size_t i = 4; i < 8; ++i) c.back_n += frame.forces[i];
  return c;
}

LegPhaseState fsr_initial_state(const FsrDetectorConfig& cfg, const InsoleFrame& first) {
  require_valid(first);
  LegPhaseState s;
  s.phase = cluster_sums(first).total() > cfg.contact_threshold_n ? Phase::Stance : Phase::Swing;
  s.since = first.t;
  return s;
}

FsrStep fsr_step(const LegPhaseState& state, const FsrDetectorConfig& cfg, const InsoleFrame& frame) {
  require_valid(frame);
  if (state.last_frame_t && frame.t < *state.last_frame_t) {
    throw DataError("insole frame at t=" + std::to_string(frame.t) + " arrives after t=" +
                    std::to_string(*state.last_frame_t));
  }

  FsrStep out{state, std::nullopt};
  out.state.last_frame_t = frame.t;

  const bool settled =
      !state.last_event || frame.t - state.last_event->t >= cfg.min_phase_s - kGapSlack;
  if (!settled) return out;

  const auto c = cluster_sums(frame);
  std::optional<GaitEventKind> kind;
  if (state.phase == Phase::Swing && c.total() > cfg.contact_threshold_n) {
    kind = GaitEventKind::HeelStrike;
  } else if (state.phase == Phase::Stance && c.front_n < cfg.release_threshold_n &&
             c.back_n < cfg.release_threshold_n) {
    kind = GaitEventKind::ToeOff;
  }
  if (kind) {
    const GaitEvent e{frame.t, frame.foot, *kind};
    out.state.phase = phase_after(*kind);
    out.state.since = frame.t;
    out.state.last_event = e;
    out.event = e;
  }
  return out;
}

GaitState both_feet_phases(const LegPhaseState& left, const LegPhaseState& right) noexcept {
  return classify(left.phase, right.phase);
}

}  // namespace carry
