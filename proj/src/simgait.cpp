#include "carry/simgait.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <exception>
#include <numbers>
#include <random>
#include <stdexcept>
#include <thread>

#include "carry/bounded_queue.hpp"
#include "carry/errors.hpp"

namespace carry {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kRadToDeg = 180.0 / std::numbers::pi;

// Per-sensor share of a cluster's load.
constexpr std::array<double, 4> kFrontWeights{0.30, 0.30, 0.20, 0.20};
constexpr std::array<double, 4> kBackWeights{0.35, 0.25, 0.25, 0.15};

// Normalized stance windows of the two loading bumps.
constexpr double kHeelEnd = 0.45;
constexpr double kForefootStart = 0.35;

constexpr double kStepWidthM = 0.2;
constexpr double kEmgModulation = 0.1;
constexpr double kMvcCalibrationS = 6.0;
constexpr double kCarrierLowHz = 20.0;
constexpr double kCarrierHighHz = 250.0;

enum class Stream : std::uint64_t { Omega = 1, InsoleLeft, InsoleRight, EmgCarrier, EmgNoise, Calibration };

std::mt19937_64 engine_for(std::uint64_t seed, Stream stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

double frac(double x) { return x - std::floor(x); }

double smoothstep(double x) { return 0.5 - 0.5 * std::cos(kPi * std::clamp(x, 0.0, 1.0)); }

// Monotone periodic phase warp u(phase) with u(0.5) = 0, u(s) = 1/4,
// u(s + 1/4) = 1/2, u(s/2 + 7/8) = 3/4, u(phase + 1) = u(phase) + 1. Shape-
// preserving cubic Hermite through the knots, so sin(2 pi u) keeps its
// extremum and zero crossings exactly at the knots.
class PhaseWarp {
 public:
  explicit PhaseWarp(double stance) {
    x_ = {0.5, stance, stance + 0.25, stance / 2.0 + 0.875, 1.5};
    y_ = {0.0, 0.25, 0.5, 0.75, 1.0};
    std::array<double, 4> h{};
    std::array<double, 4> d{};
    for (std::size_t i = 0; i < 4; ++i) {
      h[i] = x_[i + 1] - x_[i];
      d[i] = (y_[i + 1] - y_[i]) / h[i];
    }
    auto slope = [&](std::size_t prev, std::size_t next) {
      return 3.0 * (h[prev] + h[next]) /
             ((2.0 * h[next] + h[prev]) / d[prev] + (h[next] + 2.0 * h[prev]) / d[next]);
    };
    m_[0] = slope(3, 0);
    for (std::size_t i = 1; i < 4; ++i) m_[i] = slope(i - 1, i);
    m_[4] = m_[0];
    h_ = h;
  }

  double operator()(double phase) const {
    const double p = x_[0] + frac(phase - x_[0]);
    std::size_t i = 0;
    while (i < 3 && p >= x_[i + 1]) ++i;
    const double s = (p - x_[i]) / h_[i];
    const double s2 = s * s;
    const double s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * y_[i] + (s3 - 2 * s2 + s) * h_[i] * m_[i] +
           (-2 * s3 + 3 * s2) * y_[i + 1] + (s3 - s2) * h_[i] * m_[i + 1];
  }

 private:
  std::array<double, 5> x_{};
  std::array<double, 5> y_{};
  std::array<double, 5> m_{};
  std::array<double, 4> h_{};
};

// Phase of the left leg at t = 0: middle of the first double-stance window.
double left_phase_offset(const GaitParams& p) { return (p.stance_fraction - 0.5) / 2.0; }

double phase_offset(const GaitParams& p, Foot foot) {
  return left_phase_offset(p) - (foot == Foot::Left ? 0.0 : 0.5);
}

struct ClusterLoad {
  double front = 0.0;
  double back = 0.0;
};

ClusterLoad stance_load(double peak, double stance_pos) {
  ClusterLoad c;
  if (stance_pos < kHeelEnd) c.back = peak * std::sin(kPi * stance_pos / kHeelEnd);
  if (stance_pos >= kForefootStart) {
    c.front = peak * std::sin(kPi * (stance_pos - kForefootStart) / (1.0 - kForefootStart));
  }
  return c;
}

double knee_angle(const GaitParams& p, double phase) {
  const double s = p.stance_fraction;
  // Small loading-response flexion in stance, the main flexion in swing.
  if (phase < s) return 0.2 * p.knee_rom_deg * (0.5 - 0.5 * std::cos(kTwoPi * phase / s));
  return p.knee_rom_deg * (0.5 - 0.5 * std::cos(kTwoPi * (phase - s) / (1.0 - s)));
}

// Hip angle in degrees over one stride, integrated from the velocity waveform
// with its stride mean removed so the angle is periodic.
class HipAngleTable {
 public:
  explicit HipAngleTable(const GaitParams& p) : values_(kPoints + 1) {
    std::vector<double> w(kPoints + 1);
    for (std::size_t i = 0; i <= kPoints; ++i) w[i] = hip_omega_waveform(p, static_cast<double>(i) / kPoints);
    double mean = 0.0;
    for (std::size_t i = 0; i < kPoints; ++i) mean += w[i];
    mean /= kPoints;
    const double dphi = 1.0 / kPoints;
    const double period = p.stride_period_s();
    values_[0] = 0.0;
    for (std::size_t i = 1; i <= kPoints; ++i) {
      values_[i] = values_[i - 1] + 0.5 * (w[i - 1] + w[i] - 2.0 * mean) * dphi * period * kRadToDeg;
    }
    double centre = 0.0;
    for (std::size_t i = 0; i < kPoints; ++i) centre += values_[i];
    centre /= kPoints;
    for (double& v : values_) v -= centre;
  }

  double operator()(double phase) const {
    const double x = frac(phase) * kPoints;
    const auto i = std::min<std::size_t>(static_cast<std::size_t>(x), kPoints - 1);
    const double f = x - static_cast<double>(i);
    return values_[i] * (1.0 - f) + values_[i + 1] * f;
  }

 private:
  static constexpr std::size_t kPoints = 4096;
  std::vector<double> values_;
};

std::vector<double> unit_rms_carrier(std::mt19937_64& rng, std::size_t n, double rate_hz) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double high = std::min(kCarrierHighHz, 0.45 * rate_hz);
  CascadeFilter shaper(design_filter(FilterSpec::band_pass(2, kCarrierLowHz, high, rate_hz)));
  const std::size_t warmup = static_cast<std::size_t>(rate_hz);
  for (std::size_t i = 0; i < warmup; ++i) shaper.step(gauss(rng));
  std::vector<double> out(n);
  double sumsq = 0.0;
  for (auto& v : out) {
    v = shaper.step(gauss(rng));
    sumsq += v * v;
  }
  const double rms = std::sqrt(sumsq / static_cast<double>(std::max<std::size_t>(n, 1)));
  if (rms > 0.0) {
    for (auto& v : out) v /= rms;
  }
  return out;
}

double calibrate_mvc(const GaitParams& p, double emg_hz) {
  auto rng = engine_for(p.seed, Stream::Calibration);
  const auto n = static_cast<std::size_t>(std::llround(kMvcCalibrationS * emg_hz));
  auto carrier = unit_rms_carrier(rng, n, emg_hz);
  for (auto& v : carrier) v *= p.emg_mvc_rms_mv;
  const auto env = emg_envelope_unnormalized(TimeSeries(std::move(carrier), emg_hz), FilterMode::ZeroPhase);
  const auto lo = static_cast<std::size_t>(emg_hz);
  const auto hi = n - static_cast<std::size_t>(emg_hz);
  double sum = 0.0;
  for (std::size_t k = lo; k < hi; ++k) sum += env[k];
  return sum / static_cast<double>(hi - lo);
}

}  // namespace

void GaitParams::validate() const {
  if (!(cadence_hz > 0.0) || !std::isfinite(cadence_hz)) throw std::invalid_argument("cadence_hz must be > 0");
  if (!(stance_fraction > 0.5 && stance_fraction < 0.8)) {
    throw std::invalid_argument("stance_fraction must lie in (0.5, 0.8)");
  }
  if (!(speed_m_s >= 0.0) || !std::isfinite(speed_m_s)) throw std::invalid_argument("speed_m_s must be >= 0");
  if (!(omega_amp_rad_s > 0.0)) throw std::invalid_argument("omega_amp_rad_s must be > 0");
  if (!(load_peak_n > 0.0)) throw std::invalid_argument("load_peak_n must be > 0");
  if (!(emg_level > 0.0 && emg_level <= 1.0)) throw std::invalid_argument("emg_level must lie in (0, 1]");
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) throw std::invalid_argument("noise_sigma must be >= 0");
  if (!(knee_rom_deg >= 0.0)) throw std::invalid_argument("knee_rom_deg must be >= 0");
  if (!(emg_mvc_rms_mv > 0.0)) throw std::invalid_argument("emg_mvc_rms_mv must be > 0");
}

namespace channel {

std::string insole(Foot foot, std::size_t sensor) {
  return "insole_" + std::string(to_string(foot)) + "_f" + std::to_string(sensor);
}
std::string_view omega(Foot foot) { return foot == Foot::Left ? kOmegaLeft : kOmegaRight; }
std::string_view hip(Foot foot) { return foot == Foot::Left ? kHipLeft : kHipRight; }
std::string_view knee(Foot foot) { return foot == Foot::Left ? kKneeLeft : kKneeRight; }
std::string_view foot_x(Foot foot) { return foot == Foot::Left ? kLeftX : kRightX; }
std::string_view foot_y(Foot foot) { return foot == Foot::Left ? kLeftY : kRightY; }

}  // namespace channel

const TimeSeries& TrialLog::channel(std::string_view name) const {
  const auto it = channels.find(name);
  if (it == channels.end()) throw DataError("missing channel '" + std::string(name) + "'");
  return it->second;
}

std::size_t TrialLog::control_samples() const {
  return static_cast<std::size_t>(std::llround(duration_s * rates.control_hz));
}

std::vector<GaitState> TrialLog::truth_states() const {
  std::vector<GaitState> out;
  out.reserve(truth_phases.size());
  for (const auto& p : truth_phases) out.push_back(classify(p));
  return out;
}

double hip_omega_waveform(const GaitParams& params, double phase) {
  const PhaseWarp warp(params.stance_fraction);
  return params.omega_amp_rad_s * std::sin(kTwoPi * warp(phase));
}

double stride_phase(const GaitParams& params, Foot foot, double t) {
  return frac(params.cadence_hz * t + phase_offset(params, foot));
}

TrialLog generate(const GaitParams& params, double duration_s, SampleRates rates) {
  params.validate();
  if (!(rates.control_hz > 0.0) || !(rates.emg_hz > 0.0)) throw std::invalid_argument("sample rates must be > 0");
  if (!(duration_s * params.cadence_hz >= 5.0 - 1e-9)) {
    throw std::invalid_argument("duration must cover at least 5 strides (" +
                                std::to_string(5.0 / params.cadence_hz) + " s at this cadence)");
  }

  TrialLog log;
  log.params = params;
  log.rates = rates;
  log.duration_s = duration_s;

  const std::size_t n = log.control_samples();
  const double fs = rates.control_hz;
  const double s = params.stance_fraction;
  const double stride_len = params.stride_length_m();
  const double sigma = params.noise_sigma;

  const PhaseWarp warp(s);
  const HipAngleTable hip_table(params);

  auto omega_rng = engine_for(params.seed, Stream::Omega);
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::map<std::string, std::vector<double>, std::less<>> data;
  auto column = [&](std::string_view name) -> std::vector<double>& {
    auto& v = data[std::string(name)];
    v.resize(n);
    return v;
  };

  log.truth_phases.resize(n);
  for (Foot foot : {Foot::Left, Foot::Right}) {
    auto insole_rng = engine_for(params.seed, foot == Foot::Left ? Stream::InsoleLeft : Stream::InsoleRight);
    auto& om = column(channel::omega(foot));
    auto& hip = column(channel::hip(foot));
    auto& knee = column(channel::knee(foot));
    auto& fx = column(channel::foot_x(foot));
    auto& fy = column(channel::foot_y(foot));
    std::array<std::vector<double>*, 8> sensors{};
    for (std::size_t i = 0; i < 8; ++i) sensors[i] = &column(channel::insole(foot, i));

    const double offset = phase_offset(params, foot);
    const double lateral = (foot == Foot::Left ? 0.5 : -0.5) * kStepWidthM;
    for (std::size_t k = 0; k < n; ++k) {
      const double t = static_cast<double>(k) / fs;
      const double cycles = params.cadence_hz * t + offset;
      const double stride = std::floor(cycles);
      const double phase = cycles - stride;
      const bool stance = phase < s;
      (foot == Foot::Left ? log.truth_phases[k].left : log.truth_phases[k].right) =
          stance ? Phase::Stance : Phase::Swing;

      om[k] = params.omega_amp_rad_s * std::sin(kTwoPi * warp(phase));
      hip[k] = hip_table(phase);
      knee[k] = knee_angle(params, phase);

      const double strike_t = (stride - offset) / params.cadence_hz;
      const double strike_x = params.speed_m_s * strike_t + 0.25 * stride_len;
      fx[k] = stance ? strike_x : strike_x + stride_len * smoothstep((phase - s) / (1.0 - s));
      fy[k] = lateral;

      const ClusterLoad load = stance ? stance_load(params.load_peak_n, phase / s) : ClusterLoad{};
      for (std::size_t i = 0; i < 8; ++i) {
        const bool front = i < 4;
        const double w = front ? kFrontWeights[i] : kBackWeights[i - 4];
        double f = w * (front ? load.front : load.back);
        // An unloaded FSR is open-circuit and reads zero; noise rides on contact only.
        if (f > 0.0 && sigma > 0.0) f = std::max(0.0, f + sigma * w * params.load_peak_n * gauss(insole_rng));
        (*sensors[i])[k] = f;
      }
    }
  }
  if (sigma > 0.0) {
    for (Foot foot : {Foot::Left, Foot::Right}) {
      for (auto& v : data[std::string(channel::omega(foot))]) {
        v += sigma * params.omega_amp_rad_s * gauss(omega_rng);
      }
    }
  }
  auto& body = column(channel::kBodyX);
  for (std::size_t k = 0; k < n; ++k) body[k] = params.speed_m_s * static_cast<double>(k) / fs;

  // Truth events, analytic times inside the sampled span.
  const double t_last = n == 0 ? 0.0 : static_cast<double>(n - 1) / fs;
  for (Foot foot : {Foot::Left, Foot::Right}) {
    const double offset = phase_offset(params, foot);
    for (long stride = -1;; ++stride) {
      const double hs = (static_cast<double>(stride) - offset) / params.cadence_hz;
      const double to = (static_cast<double>(stride) + s - offset) / params.cadence_hz;
      if (hs > t_last) break;
      if (hs >= 0.0) log.truth_events.push_back({hs, foot, GaitEventKind::HeelStrike});
      if (to >= 0.0 && to <= t_last) log.truth_events.push_back({to, foot, GaitEventKind::ToeOff});
    }
  }
  std::sort(log.truth_events.begin(), log.truth_events.end(),
            [](const GaitEvent& a, const GaitEvent& b) { return a.t < b.t; });

  // Forearm EMG: band-limited carrier, amplitude-modulated around emg_level.
  const auto n_emg = static_cast<std::size_t>(std::llround(duration_s * rates.emg_hz));
  auto carrier_rng = engine_for(params.seed, Stream::EmgCarrier);
  auto noise_rng = engine_for(params.seed, Stream::EmgNoise);
  std::vector<double> emg = unit_rms_carrier(carrier_rng, n_emg, rates.emg_hz);
  for (std::size_t k = 0; k < n_emg; ++k) {
    const double t = static_cast<double>(k) / rates.emg_hz;
    const double level = std::clamp(
        params.emg_level * (1.0 + kEmgModulation * std::cos(kTwoPi * 2.0 * params.cadence_hz * t)), 0.0, 1.0);
    emg[k] *= params.emg_mvc_rms_mv * level;
    if (sigma > 0.0) emg[k] += sigma * params.emg_mvc_rms_mv * gauss(noise_rng);
  }
  log.emg_mvc = calibrate_mvc(params, rates.emg_hz);

  for (auto& [name, values] : data) log.channels.emplace(name, TimeSeries(std::move(values), fs));
  log.channels.emplace(std::string(channel::kEmgForearm), TimeSeries(std::move(emg), rates.emg_hz));
  return log;
}

namespace {

struct ReplaySources {
  const TimeSeries* omega_left;
  const TimeSeries* omega_right;
  std::array<const TimeSeries*, 8> left{};
  std::array<const TimeSeries*, 8> right{};
  const TimeSeries* emg;
  std::size_t ratio;
  std::size_t ticks;
};

ReplaySources bind(const TrialLog& log) {
  ReplaySources src{};
  src.omega_left = &log.channel(channel::kOmegaLeft);
  src.omega_right = &log.channel(channel::kOmegaRight);
  for (std::size_t i = 0; i < 8; ++i) {
    src.left[i] = &log.channel(channel::insole(Foot::Left, i));
    src.right[i] = &log.channel(channel::insole(Foot::Right, i));
  }
  src.emg = &log.channel(channel::kEmgForearm);
  const double ratio = src.emg->rate_hz / log.rates.control_hz;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 || ratio < 1.0) {
    throw DataError("EMG rate must be an integer multiple of the control rate");
  }
  src.ratio = static_cast<std::size_t>(std::llround(ratio));
  src.ticks = log.control_samples();
  for (const TimeSeries* ts : {src.omega_left, src.omega_right}) {
    if (ts->size() < src.ticks) throw DataError("control-rate channel shorter than the trial duration");
  }
  for (std::size_t i = 0; i < 8; ++i) {
    if (src.left[i]->size() < src.ticks || src.right[i]->size() < src.ticks) {
      throw DataError("insole channel shorter than the trial duration");
    }
  }
  return src;
}

ReplayFrame frame_at(const ReplaySources& src, double control_hz, std::size_t k) {
  ReplayFrame f;
  f.tick = k;
  f.t = static_cast<double>(k) / control_hz;
  f.omega_left = (*src.omega_left)[k];
  f.omega_right = (*src.omega_right)[k];
  f.left.t = f.right.t = f.t;
  f.left.foot = Foot::Left;
  f.right.foot = Foot::Right;
  for (std::size_t i = 0; i < 8; ++i) {
    f.left.forces[i] = (*src.left[i])[k];
    f.right.forces[i] = (*src.right[i])[k];
  }
  const std::size_t hi = k * src.ratio;
  const std::size_t lo = k == 0 ? 0 : hi - src.ratio + 1;
  for (std::size_t j = lo; j <= hi && j < src.emg->size(); ++j) f.emg.push_back((*src.emg)[j]);
  return f;
}

}  // namespace

void replay(const TrialLog& log, const ReplaySink& sink) {
  const auto src = bind(log);
  for (std::size_t k = 0; k < src.ticks; ++k) sink(frame_at(src, log.rates.control_hz, k));
}

void replay_async(const TrialLog& log, std::size_t queue_capacity, const ReplaySink& sink) {
  const auto src = bind(log);
  BoundedQueue<ReplayFrame> queue(queue_capacity);
  std::thread producer([&] {
    for (std::size_t k = 0; k < src.ticks; ++k) {
      if (!queue.push(frame_at(src, log.rates.control_hz, k))) break;
    }
    queue.close();
  });
  try {
    while (auto frame = queue.pop()) sink(*frame);
  } catch (...) {
    queue.close();
    producer.join();
    throw;
  }
  producer.join();
}

}  // namespace carry
