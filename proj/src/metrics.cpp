#include "carry/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "carry/errors.hpp"

namespace carry {

namespace {

std::span<const double> trailing_window(const TimeSeries& x, std::optional<double> window_s) {
  std::span<const double> all(x.samples);
  if (window_s) {
    if (!(*window_s > 0.0)) throw DataError("analysis window must be positive");
    const auto n = static_cast<std::size_t>(std::llround(*window_s * x.rate_hz));
    if (n < all.size()) all = all.last(n);
  }
  if (all.empty()) throw DataError("empty analysis window");
  return all;
}

// Position of a track at time t, linearly interpolated between samples.
double sample_at(const TimeSeries& ts, double t) {
  if (ts.empty()) throw DataError("empty position track");
  const double pos = (t - ts.t0) * ts.rate_hz;
  if (pos <= 0.0) return ts.samples.front();
  const auto i = static_cast<std::size_t>(pos);
  if (i + 1 >= ts.size()) return ts.samples.back();
  const double f = pos - static_cast<double>(i);
  return ts[i] * (1.0 - f) + ts[i + 1] * f;
}

std::vector<double> heel_strike_times(std::span<const GaitEvent> events, Foot foot) {
  std::vector<double> t;
  for (const auto& e : events) {
    if (e.foot == foot && e.kind == GaitEventKind::HeelStrike) t.push_back(e.t);
  }
  std::sort(t.begin(), t.end());
  return t;
}

EventScore match_kind(std::span<const GaitEvent> predicted, std::span<const GaitEvent> truth, GaitEventKind kind,
                      double window_s) {
  EventScore score;
  double abs_err = 0.0;
  for (Foot foot : {Foot::Left, Foot::Right}) {
    auto pred = select_events(predicted, foot, kind);
    auto want = select_events(truth, foot, kind);
    auto by_time = [](const GaitEvent& a, const GaitEvent& b) { return a.t < b.t; };
    std::sort(pred.begin(), pred.end(), by_time);
    std::sort(want.begin(), want.end(), by_time);
    std::vector<bool> used(pred.size(), false);
    for (const auto& e : want) {
      std::size_t best = pred.size();
      double best_dt = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < pred.size(); ++i) {
        const double dt = std::abs(pred[i].t - e.t);
        if (!used[i] && dt <= window_s && dt < best_dt) {
          best = i;
          best_dt = dt;
        }
      }
      if (best == pred.size()) {
        ++score.missed;
      } else {
        used[best] = true;
        ++score.matched;
        abs_err += best_dt;
      }
    }
    score.spurious += static_cast<std::size_t>(std::count(used.begin(), used.end(), false));
  }
  score.mae_s = score.matched == 0 ? 0.0 : abs_err / static_cast<double>(score.matched);
  return score;
}

}  // namespace

double rms(const TimeSeries& x, std::optional<double> window_s) {
  const auto w = trailing_window(x, window_s);
  // Neumaier-compensated sum of squares.
  double sum = 0.0;
  double comp = 0.0;
  for (double v : w) {
    const double term = v * v;
    const double t = sum + term;
    comp += std::abs(sum) >= term ? (sum - t) + term : (term - t) + sum;
    sum = t;
  }
  return std::sqrt((sum + comp) / static_cast<double>(w.size()));
}

double percentile(const TimeSeries& x, double p, std::optional<double> window_s) {
  if (!(p >= 0.0 && p <= 100.0)) throw std::invalid_argument("percentile must lie in [0, 100]");
  const auto w = trailing_window(x, window_s);
  std::vector<double> v(w.begin(), w.end());
  const double rank = p / 100.0 * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const double frac = rank - static_cast<double>(lo);
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(lo), v.end());
  const double below = v[lo];
  if (frac == 0.0 || lo + 1 >= v.size()) return below;
  const double above = *std::min_element(v.begin() + static_cast<std::ptrdiff_t>(lo + 1), v.end());
  return below + frac * (above - below);
}

double stride_length(const FootTrack& left, const FootTrack& right, std::span<const GaitEvent> events) {
  double total = 0.0;
  for (Foot foot : {Foot::Left, Foot::Right}) {
    const FootTrack& track = foot == Foot::Left ? left : right;
    const auto strikes = heel_strike_times(events, foot);
    if (strikes.size() < 2) {
      throw DataError("stride length needs at least two heel strikes of the " + std::string(to_string(foot)) +
                      " foot");
    }
    double sum = 0.0;
    for (std::size_t i = 1; i < strikes.size(); ++i) {
      const double dx = sample_at(track.x, strikes[i]) - sample_at(track.x, strikes[i - 1]);
      const double dy = sample_at(track.y, strikes[i]) - sample_at(track.y, strikes[i - 1]);
      sum += std::hypot(dx, dy);
    }
    total += sum / static_cast<double>(strikes.size() - 1);
  }
  return total / 2.0;
}

double rom(const TimeSeries& angle_deg, std::span<const GaitEvent> events, Foot foot) {
  const auto strikes = heel_strike_times(events, foot);
  double sum = 0.0;
  std::size_t strides = 0;
  for (std::size_t i = 1; i < strikes.size(); ++i) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t k = 0; k < angle_deg.size(); ++k) {
      const double t = angle_deg.time_at(k);
      if (t < strikes[i - 1] || t > strikes[i]) continue;
      lo = std::min(lo, angle_deg[k]);
      hi = std::max(hi, angle_deg[k]);
    }
    if (hi < lo) continue;  // stride outside the recording
    sum += hi - lo;
    ++strides;
  }
  if (strides == 0) throw DataError("range of motion needs at least one complete stride");
  return sum / static_cast<double>(strides);
}

double DetectionScore::recall() const noexcept {
  const auto total = truth_events();
  return total == 0 ? 1.0 : static_cast<double>(heel_strike.matched + toe_off.matched) / static_cast<double>(total);
}

DetectionScore score_detection(std::span<const GaitEvent> predicted, std::span<const LegPhases> predicted_labels,
                               std::span<const GaitEvent> truth, std::span<const LegPhases> truth_labels,
                               double window_s) {
  if (predicted_labels.size() != truth_labels.size()) {
    throw DataError("predicted and truth labels differ in length (" + std::to_string(predicted_labels.size()) +
                    " vs " + std::to_string(truth_labels.size()) + ")");
  }
  DetectionScore s;
  s.heel_strike = match_kind(predicted, truth, GaitEventKind::HeelStrike, window_s);
  s.toe_off = match_kind(predicted, truth, GaitEventKind::ToeOff, window_s);
  const std::size_t n = truth_labels.size();
  if (n > 0) {
    std::size_t legs = 0;
    std::size_t states = 0;
    for (std::size_t k = 0; k < n; ++k) {
      legs += (predicted_labels[k].left == truth_labels[k].left) + (predicted_labels[k].right == truth_labels[k].right);
      states += classify(predicted_labels[k]) == classify(truth_labels[k]);
    }
    s.phase_accuracy = static_cast<double>(legs) / static_cast<double>(2 * n);
    s.state_accuracy = static_cast<double>(states) / static_cast<double>(n);
  }
  return s;
}

TrialMetrics trial_metrics(const TrialLog& log, const AnalysisOptions& options) {
  const auto& events = options.events ? *options.events : log.truth_events;
  if (events.empty()) throw DataError("trial has no reference gait events");

  TrialMetrics m;
  const FootTrack left{log.channel(channel::kLeftX), log.channel(channel::kLeftY)};
  const FootTrack right{log.channel(channel::kRightX), log.channel(channel::kRightY)};
  m.stride_length_m = stride_length(left, right, events);
  m.hip_rom_deg = 0.5 * (rom(log.channel(channel::kHipLeft), events, Foot::Left) +
                         rom(log.channel(channel::kHipRight), events, Foot::Right));
  m.knee_rom_deg = 0.5 * (rom(log.channel(channel::kKneeLeft), events, Foot::Left) +
                          rom(log.channel(channel::kKneeRight), events, Foot::Right));

  if (log.has_channel(channel::kBodyX)) {
    const auto& body = log.channel(channel::kBodyX);
    if (body.size() < 2) throw DataError("body_x track too short for speed");
    m.speed_m_s = (body.samples.back() - body.samples.front()) / (body.time_at(body.size() - 1) - body.t0);
  } else {
    m.speed_m_s = 0.0;
    const auto strikes = heel_strike_times(events, Foot::Left);
    if (strikes.size() >= 2) {
      m.speed_m_s = (sample_at(left.x, strikes.back()) - sample_at(left.x, strikes.front())) /
                    (strikes.back() - strikes.front());
    }
  }

  const EmgChannel emg{log.channel(options.emg_channel), log.emg_mvc, options.emg_channel};
  const auto env = emg_envelope(emg, FilterMode::ZeroPhase);
  m.emg_rms = rms(env, options.window_s);
  m.emg_p90 = percentile(env, 90.0, options.window_s);
  return m;
}

}  // namespace carry
