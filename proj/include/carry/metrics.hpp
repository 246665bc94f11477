#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "carry/gait_types.hpp"
#include "carry/signals.hpp"
#include "carry/simgait.hpp"

namespace carry {

/// Root mean square over the whole series, or over its trailing `window_s`
/// seconds. Throws DataError on an empty window.
double rms(const TimeSeries& x, std::optional<double> window_s = std::nullopt);

/// Inclusive linear-interpolation quantile: rank p/100 * (n - 1) into the
/// sorted samples. p in [0, 100]. Throws DataError on an empty window and
/// std::invalid_argument on p out of range.
double percentile(const TimeSeries& x, double p, std::optional<double> window_s = std::nullopt);

struct FootTrack {
  TimeSeries x;  // m
  TimeSeries y;  // m
};

/// Mean planar distance between consecutive heel-strike positions of the same
/// foot, averaged over both feet. Needs two heel strikes per foot.
double stride_length(const FootTrack& left, const FootTrack& right, std::span<const GaitEvent> events);

/// Mean over strides (consecutive heel strikes of `foot`) of max - min angle.
double rom(const TimeSeries& angle_deg, std::span<const GaitEvent> events, Foot foot);

struct EventScore {
  std::size_t matched = 0;
  std::size_t missed = 0;
  std::size_t spurious = 0;
  double mae_s = 0.0;  // over matched events; 0 when none matched
};

struct DetectionScore {
  EventScore heel_strike;
  EventScore toe_off;
  double phase_accuracy = 1.0;  // per-leg, per-sample agreement
  double state_accuracy = 1.0;  // four-state GaitState agreement

  std::size_t truth_events() const noexcept {
    return heel_strike.matched + heel_strike.missed + toe_off.matched + toe_off.missed;
  }
  double recall() const noexcept;
};

inline constexpr double kEventMatchWindowS = 0.1;

/// Greedy matching of each truth event, in time order, to the nearest unused
/// predicted event of the same foot and kind within +/- window_s. Label
/// sequences must share a time base (equal length, else DataError).
DetectionScore score_detection(std::span<const GaitEvent> predicted, std::span<const LegPhases> predicted_labels,
                               std::span<const GaitEvent> truth, std::span<const LegPhases> truth_labels,
                               double window_s = kEventMatchWindowS);

struct TrialMetrics {
  double stride_length_m = 0.0;
  double hip_rom_deg = 0.0;
  double knee_rom_deg = 0.0;
  double speed_m_s = 0.0;
  double emg_rms = 0.0;  // normalized MVC units
  double emg_p90 = 0.0;
};

struct AnalysisOptions {
  std::string emg_channel = "emg_forearm";
  std::optional<double> window_s = 60.0;  // trailing window; nullopt for the whole recording
  std::optional<std::vector<GaitEvent>> events;  // stride segmentation; the log's reference events when unset
};

/// Kinematics from the log's reference gait events (or options.events), EMG
/// amplitude from the
/// zero-phase envelope normalized by the log's MVC. Throws DataError naming
/// any missing channel.
TrialMetrics trial_metrics(const TrialLog& log, const AnalysisOptions& options = {});

}  // namespace carry
