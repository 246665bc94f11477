#pragma once

#include <complex>
#include <cstddef>
#include <string>
#include <vector>

namespace carry {

/// Uniformly sampled scalar channel. Sample k sits at t0 + k / rate_hz.
///
/// The constructor rejects a non-positive rate and non-finite samples, so a
/// constructed series always satisfies the channel invariants.
struct TimeSeries {
  std::vector<double> samples;
  double rate_hz = 1.0;
  double t0 = 0.0;

  TimeSeries() = default;
  TimeSeries(std::vector<double> values, double rate, double start = 0.0);

  std::size_t size() const noexcept { return samples.size(); }
  bool empty() const noexcept { return samples.empty(); }
  double operator[](std::size_t k) const { return samples[k]; }
  double time_at(std::size_t k) const noexcept {
    return t0 + static_cast<double>(k) / rate_hz;
  }
  /// Span covered by the samples, size() / rate_hz.
  double duration() const noexcept { return static_cast<double>(samples.size()) / rate_hz; }
};

enum class FilterKind { LowPass, HighPass, BandPass };

/// Butterworth design request. `order` is the prototype order; a band-pass of
/// order N has 2N poles.
struct FilterSpec {
  FilterKind kind = FilterKind::LowPass;
  int order = 4;
  std::vector<double> cutoffs_hz;  // one entry, or {low, high} for band-pass
  double rate_hz = 1000.0;

  static FilterSpec low_pass(int order, double cutoff_hz, double rate_hz);
  static FilterSpec high_pass(int order, double cutoff_hz, double rate_hz);
  static FilterSpec band_pass(int order, double low_hz, double high_hz, double rate_hz);

  /// Throws std::invalid_argument when a cutoff is not strictly inside
  /// (0, rate/2), band edges are out of order, or the order is out of range.
  void validate() const;
};

/// y[n] = b0 x[n] + b1 x[n-1] + b2 x[n-2] - a1 y[n-1] - a2 y[n-2]
struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;
};

struct FilterCoefficients {
  FilterSpec spec;
  std::vector<Biquad> sections;

  std::complex<double> response(double freq_hz) const;
  std::vector<std::complex<double>> poles() const;
};

FilterCoefficients design_filter(const FilterSpec& spec);

/// Streaming cascade in transposed direct form II. Holds its own state, so two
/// streams never share an instance.
class CascadeFilter {
 public:
  explicit CascadeFilter(FilterCoefficients coeffs);

  double step(double x) noexcept;
  void reset() noexcept;
  /// Loads the state a constant input `level` would have settled to.
  void settle_to(double level) noexcept;

  const FilterCoefficients& coefficients() const noexcept { return coeffs_; }

 private:
  struct SectionState {
    double s1 = 0.0;
    double s2 = 0.0;
  };

  FilterCoefficients coeffs_;
  std::vector<SectionState> state_;
};

/// Sample-by-sample IIR application starting from rest. Throws DataError when
/// the series rate differs from the design rate.
TimeSeries filter_causal(const FilterCoefficients& coeffs, const TimeSeries& x);

/// Forward-backward application with odd-reflection padding and settled
/// initial state: zero phase, squared magnitude. Requires more than
/// 3 x order samples.
TimeSeries filter_zero_phase(const FilterCoefficients& coeffs, const TimeSeries& x);

TimeSeries rectify(const TimeSeries& x);

enum class FilterMode { Causal, ZeroPhase };

/// Electrocardiogram suppression: a 4th-order 30 Hz Butterworth high-pass.
TimeSeries remove_ecg(const TimeSeries& x, FilterMode mode = FilterMode::Causal);

/// Raw surface EMG plus its maximum-voluntary-contraction reference, expressed
/// in envelope units (the plateau the envelope chain produces at MVC).
struct EmgChannel {
  TimeSeries raw;
  double mvc = 1.0;
  std::string label;
};

namespace emg {
inline constexpr int kFilterOrder = 4;
inline constexpr double kBandLowHz = 10.0;
inline constexpr double kBandHighHz = 400.0;
inline constexpr double kEcgHighPassHz = 30.0;
inline constexpr double kEnvelopeLowPassHz = 2.5;
}  // namespace emg

/// Band-pass 10-400 Hz, ECG removal, rectification, 2.5 Hz low-pass. Output in
/// the raw channel's units (no MVC scaling, no clipping).
TimeSeries emg_envelope_unnormalized(const TimeSeries& raw, FilterMode mode = FilterMode::Causal);

/// Envelope divided by MVC and clipped to [0, 1].
TimeSeries emg_envelope(const EmgChannel& ch, FilterMode mode = FilterMode::Causal);

/// Online form of emg_envelope(ch, Causal): push raw samples one at a time.
class EnvelopeTracker {
 public:
  EnvelopeTracker(double rate_hz, double mvc);

  /// Consumes one raw sample and returns the normalized envelope after it.
  double push(double raw);
  double value() const noexcept { return value_; }
  double rate_hz() const noexcept { return rate_hz_; }

 private:
  double rate_hz_;
  double mvc_;
  CascadeFilter band_;
  CascadeFilter ecg_;
  CascadeFilter smooth_;
  double value_ = 0.0;
};

/// Keeps samples 0, factor, 2*factor, ...
TimeSeries decimate(const TimeSeries& x, std::size_t factor);

}  // namespace carry
