#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "carry/gait_fsr.hpp"
#include "carry/gait_types.hpp"
#include "carry/signals.hpp"

namespace carry {

/// Parameters of the synthetic walker. noise_sigma is a fraction of each
/// channel's own amplitude.
struct GaitParams {
  double cadence_hz = 0.7;        // strides per second
  double stance_fraction = 0.6;   // in (0.5, 0.8)
  double speed_m_s = 0.74;
  double omega_amp_rad_s = 2.0;
  double load_peak_n = 400.0;     // per-cluster peak force
  double emg_level = 0.5;         // forearm activity, fraction of MVC, in (0, 1]
  double noise_sigma = 0.0;
  std::uint64_t seed = 1;
  double knee_rom_deg = 60.0;
  double emg_mvc_rms_mv = 0.5;    // raw RMS of a full MVC contraction

  void validate() const;
  double stride_period_s() const noexcept { return 1.0 / cadence_hz; }
  double stride_length_m() const noexcept { return speed_m_s / cadence_hz; }
};

struct SampleRates {
  double control_hz = 100.0;
  double emg_hz = 1000.0;
};

namespace channel {
inline constexpr std::string_view kOmegaLeft = "omega_left";
inline constexpr std::string_view kOmegaRight = "omega_right";
inline constexpr std::string_view kEmgForearm = "emg_forearm";
inline constexpr std::string_view kLeftX = "left_x";
inline constexpr std::string_view kLeftY = "left_y";
inline constexpr std::string_view kRightX = "right_x";
inline constexpr std::string_view kRightY = "right_y";
inline constexpr std::string_view kBodyX = "body_x";
inline constexpr std::string_view kHipLeft = "hip_left_deg";
inline constexpr std::string_view kHipRight = "hip_right_deg";
inline constexpr std::string_view kKneeLeft = "knee_left_deg";
inline constexpr std::string_view kKneeRight = "knee_right_deg";

/// "insole_left_f0" .. "insole_right_f7"
std::string insole(Foot foot, std::size_t sensor);
std::string_view omega(Foot foot);
std::string_view hip(Foot foot);
std::string_view knee(Foot foot);
std::string_view foot_x(Foot foot);
std::string_view foot_y(Foot foot);
}  // namespace channel

/// A recorded or synthesized trial. Channels share t0 = 0; control-rate
/// channels and truth labels have one sample per control tick.
struct TrialLog {
  GaitParams params;
  SampleRates rates;
  double duration_s = 0.0;
  double emg_mvc = 1.0;  // envelope plateau of a full MVC contraction
  std::map<std::string, TimeSeries, std::less<>> channels;
  std::vector<LegPhases> truth_phases;
  std::vector<GaitEvent> truth_events;

  bool has_truth() const noexcept { return !truth_phases.empty(); }
  bool has_channel(std::string_view name) const { return channels.find(name) != channels.end(); }
  /// Throws DataError naming the channel when it is absent.
  const TimeSeries& channel(std::string_view name) const;
  std::size_t control_samples() const;
  std::vector<GaitState> truth_states() const;
};

/// Landmarks of one leg's synthetic hip velocity over its own stride phase
/// (0 at heel strike): peak at the stance fraction, upward zero crossing at
/// 0.5 (the contralateral heel strike).
double hip_omega_waveform(const GaitParams& params, double stride_phase);

/// Stride phase of `foot` at time t, in [0, 1).
double stride_phase(const GaitParams& params, Foot foot, double t);

/// Generates a trial. Throws std::invalid_argument on degenerate parameters
/// or when the duration covers fewer than five strides.
TrialLog generate(const GaitParams& params, double duration_s, SampleRates rates = {});

/// One control tick's worth of sensor data.
struct ReplayFrame {
  std::size_t tick = 0;
  double t = 0.0;
  double omega_left = 0.0;
  double omega_right = 0.0;
  InsoleFrame left;
  InsoleFrame right;
  std::vector<double> emg;  // raw EMG samples acquired since the previous tick
};

using ReplaySink = std::function<void(const ReplayFrame&)>;

/// Delivers every control tick in order. Throws DataError if a required
/// channel is missing or the EMG rate is not an integer multiple of the
/// control rate.
void replay(const TrialLog& log, const ReplaySink& sink);

/// Same frames as replay(), produced on a worker thread and handed over
/// through a bounded queue.
void replay_async(const TrialLog& log, std::size_t queue_capacity, const ReplaySink& sink);

}  // namespace carry
