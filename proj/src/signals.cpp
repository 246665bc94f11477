#include "carry/signals.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "carry/errors.hpp"

namespace carry {

namespace {

using cplx = std::complex<double>;
constexpr double kPi = std::numbers::pi;

void require_finite(const std::vector<double>& v, const char* where) {
  for (double x : v) {
    if (!std::isfinite(x)) throw DataError(std::string(where) + ": non-finite sample");
  }
}

// Analog Butterworth prototype poles on the unit circle, left half-plane.
std::vector<cplx> prototype_poles(int order) {
  std::vector<cplx> poles;
  poles.reserve(static_cast<std::size_t>(order));
  for (int k = 0; k < order; ++k) {
    const double theta = kPi * (2.0 * k + order + 1) / (2.0 * order);
    poles.emplace_back(std::cos(theta), std::sin(theta));
  }
  return poles;
}

double prewarp(double f_hz, double rate_hz) { return 2.0 * rate_hz * std::tan(kPi * f_hz / rate_hz); }

cplx bilinear(cplx s, double rate_hz) {
  const double k = 2.0 * rate_hz;
  return (k + s) / (k - s);
}

cplx section_response(const Biquad& q, cplx z) {
  const cplx zi = 1.0 / z;
  const cplx num = q.b0 + zi * (q.b1 + zi * q.b2);
  const cplx den = 1.0 + zi * (q.a1 + zi * q.a2);
  return num / den;
}

// Numerator of a two-zero section; zeros are only ever at z = +1 or z = -1.
Biquad numerator_for(int plus_ones, int minus_ones) {
  // (1 - z^-1)^p (1 + z^-1)^m
  std::vector<double> poly{1.0};
  auto mul = [&poly](double c) {
    std::vector<double> out(poly.size() + 1, 0.0);
    for (std::size_t i = 0; i < poly.size(); ++i) {
      out[i] += poly[i];
      out[i + 1] += c * poly[i];
    }
    poly = out;
  };
  for (int i = 0; i < plus_ones; ++i) mul(-1.0);
  for (int i = 0; i < minus_ones; ++i) mul(1.0);
  poly.resize(3, 0.0);
  Biquad q;
  q.b0 = poly[0];
  q.b1 = poly[1];
  q.b2 = poly[2];
  return q;
}

}  // namespace

TimeSeries::TimeSeries(std::vector<double> values, double rate, double start)
    : samples(std::move(values)), rate_hz(rate), t0(start) {
  if (!(rate_hz > 0.0) || !std::isfinite(rate_hz)) {
    throw std::invalid_argument("TimeSeries: rate_hz must be positive and finite");
  }
  if (!std::isfinite(t0)) throw std::invalid_argument("TimeSeries: t0 must be finite");
  require_finite(samples, "TimeSeries");
}

FilterSpec FilterSpec::low_pass(int order, double cutoff_hz, double rate_hz) {
  return FilterSpec{FilterKind::LowPass, order, {cutoff_hz}, rate_hz};
}

FilterSpec FilterSpec::high_pass(int order, double cutoff_hz, double rate_hz) {
  return FilterSpec{FilterKind::HighPass, order, {cutoff_hz}, rate_hz};
}

FilterSpec FilterSpec::band_pass(int order, double low_hz, double high_hz, double rate_hz) {
  return FilterSpec{FilterKind::BandPass, order, {low_hz, high_hz}, rate_hz};
}

void FilterSpec::validate() const {
  if (order < 1 || order > 16) throw std::invalid_argument("filter order must be in [1, 16]");
  if (!(rate_hz > 0.0) || !std::isfinite(rate_hz)) {
    throw std::invalid_argument("filter rate must be positive and finite");
  }
  const std::size_t want = kind == FilterKind::BandPass ? 2 : 1;
  if (cutoffs_hz.size() != want) {
    throw std::invalid_argument(kind == FilterKind::BandPass ? "band-pass needs two cutoffs"
                                                             : "filter needs exactly one cutoff");
  }
  const double nyquist = rate_hz / 2.0;
  for (double c : cutoffs_hz) {
    if (!(c > 0.0) || !(c < nyquist)) {
      throw std::invalid_argument("cutoff " + std::to_string(c) + " Hz must lie in (0, " +
                                  std::to_string(nyquist) + ") Hz");
    }
  }
  if (kind == FilterKind::BandPass && !(cutoffs_hz[0] < cutoffs_hz[1])) {
    throw std::invalid_argument("band-pass low cutoff must be below high cutoff");
  }
}

std::complex<double> FilterCoefficients::response(double freq_hz) const {
  const cplx z = std::polar(1.0, 2.0 * kPi * freq_hz / spec.rate_hz);
  cplx h{1.0, 0.0};
  for (const auto& q : sections) h *= section_response(q, z);
  return h;
}

std::vector<std::complex<double>> FilterCoefficients::poles() const {
  std::vector<cplx> out;
  for (const auto& q : sections) {
    if (q.a2 == 0.0) {
      if (q.a1 != 0.0) out.emplace_back(-q.a1, 0.0);
      continue;
    }
    const cplx disc = std::sqrt(cplx(q.a1 * q.a1 - 4.0 * q.a2, 0.0));
    out.push_back((-q.a1 + disc) / 2.0);
    out.push_back((-q.a1 - disc) / 2.0);
  }
  return out;
}

FilterCoefficients design_filter(const FilterSpec& spec) {
  spec.validate();
  const double fs = spec.rate_hz;
  const auto proto = prototype_poles(spec.order);

  std::vector<cplx> analog;
  double ref_omega = 0.0;  // digital frequency where the passband gain is pinned to 1
  switch (spec.kind) {
    case FilterKind::LowPass: {
      const double wc = prewarp(spec.cutoffs_hz[0], fs);
      for (cplx p : proto) analog.push_back(wc * p);
      ref_omega = 0.0;
      break;
    }
    case FilterKind::HighPass: {
      const double wc = prewarp(spec.cutoffs_hz[0], fs);
      for (cplx p : proto) analog.push_back(wc / p);
      ref_omega = kPi;
      break;
    }
    case FilterKind::BandPass: {
      const double w1 = prewarp(spec.cutoffs_hz[0], fs);
      const double w2 = prewarp(spec.cutoffs_hz[1], fs);
      const double bw = w2 - w1;
      const double w0 = std::sqrt(w1 * w2);
      for (cplx p : proto) {
        const cplx a = p * bw / 2.0;
        const cplx d = std::sqrt(a * a - w0 * w0);
        analog.push_back(a + d);
        analog.push_back(a - d);
      }
      ref_omega = 2.0 * std::atan(w0 / (2.0 * fs));
      break;
    }
  }

  std::vector<cplx> upper;
  std::vector<double> real;
  for (cplx s : analog) {
    const cplx z = bilinear(s, fs);
    if (std::abs(z.imag()) <= 1e-12) {
      real.push_back(z.real());
    } else if (z.imag() > 0.0) {
      upper.push_back(z);
    }
  }
  std::sort(real.begin(), real.end());

  // Zeros: low-pass puts all at z = -1, high-pass all at z = +1, band-pass one
  // of each per section.
  auto numerator = [&](int n_zeros) {
    switch (spec.kind) {
      case FilterKind::LowPass: return numerator_for(0, n_zeros);
      case FilterKind::HighPass: return numerator_for(n_zeros, 0);
      case FilterKind::BandPass: return numerator_for(1, 1);
    }
    return numerator_for(0, n_zeros);
  };

  FilterCoefficients out{spec, {}};
  for (cplx p : upper) {
    Biquad q = numerator(2);
    q.a1 = -2.0 * p.real();
    q.a2 = std::norm(p);
    out.sections.push_back(q);
  }
  std::size_t i = 0;
  for (; i + 1 < real.size(); i += 2) {
    Biquad q = numerator(2);
    q.a1 = -(real[i] + real[i + 1]);
    q.a2 = real[i] * real[i + 1];
    out.sections.push_back(q);
  }
  if (i < real.size()) {
    Biquad q = numerator(1);
    q.a1 = -real[i];
    q.a2 = 0.0;
    out.sections.push_back(q);
  }

  const cplx z_ref = std::polar(1.0, ref_omega);
  for (auto& q : out.sections) {
    const double g = 1.0 / std::abs(section_response(q, z_ref));
    q.b0 *= g;
    q.b1 *= g;
    q.b2 *= g;
  }
  cplx total{1.0, 0.0};
  for (const auto& q : out.sections) total *= section_response(q, z_ref);
  if (total.real() < 0.0 && !out.sections.empty()) {
    auto& q = out.sections.front();
    q.b0 = -q.b0;
    q.b1 = -q.b1;
    q.b2 = -q.b2;
  }

  for (const auto& q : out.sections) {
    for (double c : {q.b0, q.b1, q.b2, q.a1, q.a2}) {
      if (!std::isfinite(c)) throw std::invalid_argument("filter design produced non-finite coefficients");
    }
  }
  for (cplx p : out.poles()) {
    if (!(std::abs(p) < 1.0)) throw std::invalid_argument("filter design is unstable at this cutoff");
  }
  return out;
}

CascadeFilter::CascadeFilter(FilterCoefficients coeffs)
    : coeffs_(std::move(coeffs)), state_(coeffs_.sections.size()) {}

double CascadeFilter::step(double x) noexcept {
  double v = x;
  for (std::size_t i = 0; i < state_.size(); ++i) {
    const Biquad& q = coeffs_.sections[i];
    SectionState& s = state_[i];
    const double y = q.b0 * v + s.s1;
    s.s1 = q.b1 * v - q.a1 * y + s.s2;
    s.s2 = q.b2 * v - q.a2 * y;
    v = y;
  }
  return v;
}

void CascadeFilter::reset() noexcept {
  for (auto& s : state_) s = SectionState{};
}

void CascadeFilter::settle_to(double level) noexcept {
  double u = level;
  for (std::size_t i = 0; i < state_.size(); ++i) {
    const Biquad& q = coeffs_.sections[i];
    const double g = (q.b0 + q.b1 + q.b2) / (1.0 + q.a1 + q.a2);
    const double y = g * u;
    state_[i].s2 = q.b2 * u - q.a2 * y;
    state_[i].s1 = q.b1 * u - q.a1 * y + state_[i].s2;
    u = y;
  }
}

namespace {

void require_rate(const FilterCoefficients& coeffs, const TimeSeries& x) {
  const double want = coeffs.spec.rate_hz;
  if (std::abs(x.rate_hz - want) > 1e-9 * want) {
    throw DataError("series rate " + std::to_string(x.rate_hz) + " Hz does not match filter rate " +
                    std::to_string(want) + " Hz");
  }
}

std::vector<double> run_forward(CascadeFilter& f, const std::vector<double>& x) {
  std::vector<double> y(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) y[k] = f.step(x[k]);
  return y;
}

}  // namespace

TimeSeries filter_causal(const FilterCoefficients& coeffs, const TimeSeries& x) {
  require_rate(coeffs, x);
  CascadeFilter f(coeffs);
  TimeSeries out = x;
  out.samples = run_forward(f, x.samples);
  return out;
}

TimeSeries filter_zero_phase(const FilterCoefficients& coeffs, const TimeSeries& x) {
  require_rate(coeffs, x);
  const std::size_t n = x.size();
  const std::size_t min_len = 3 * static_cast<std::size_t>(coeffs.spec.order);
  if (n <= min_len) {
    throw DataError("zero-phase filtering needs more than " + std::to_string(min_len) +
                    " samples, got " + std::to_string(n));
  }
  const std::size_t pad = std::min<std::size_t>(3 * (2 * coeffs.sections.size() + 1), n - 1);

  const auto& s = x.samples;
  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * s.front() - s[i]);
  ext.insert(ext.end(), s.begin(), s.end());
  for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * s.back() - s[n - 1 - i]);

  CascadeFilter f(coeffs);
  f.settle_to(ext.front());
  auto fwd = run_forward(f, ext);
  std::reverse(fwd.begin(), fwd.end());
  f.reset();
  f.settle_to(fwd.front());
  auto back = run_forward(f, fwd);
  std::reverse(back.begin(), back.end());

  TimeSeries out = x;
  std::copy(back.begin() + static_cast<std::ptrdiff_t>(pad),
            back.begin() + static_cast<std::ptrdiff_t>(pad + n), out.samples.begin());
  return out;
}

TimeSeries rectify(const TimeSeries& x) {
  TimeSeries out = x;
  for (double& v : out.samples) v = std::abs(v);
  return out;
}

namespace {

TimeSeries apply(const FilterSpec& spec, const TimeSeries& x, FilterMode mode) {
  const auto coeffs = design_filter(spec);
  return mode == FilterMode::Causal ? filter_causal(coeffs, x) : filter_zero_phase(coeffs, x);
}

FilterSpec ecg_spec(double rate_hz) {
  return FilterSpec::high_pass(emg::kFilterOrder, emg::kEcgHighPassHz, rate_hz);
}

FilterSpec band_spec(double rate_hz) {
  if (!(rate_hz > 2.0 * emg::kBandHighHz)) {
    throw std::invalid_argument("EMG rate " + std::to_string(rate_hz) +
                                " Hz is too low for the 10-400 Hz band-pass");
  }
  return FilterSpec::band_pass(emg::kFilterOrder, emg::kBandLowHz, emg::kBandHighHz, rate_hz);
}

FilterSpec smooth_spec(double rate_hz) {
  return FilterSpec::low_pass(emg::kFilterOrder, emg::kEnvelopeLowPassHz, rate_hz);
}

double normalize(double v, double mvc) { return std::clamp(v / mvc, 0.0, 1.0); }

}  // namespace

TimeSeries remove_ecg(const TimeSeries& x, FilterMode mode) { return apply(ecg_spec(x.rate_hz), x, mode); }

TimeSeries emg_envelope_unnormalized(const TimeSeries& raw, FilterMode mode) {
  const auto band = band_spec(raw.rate_hz);
  auto x = apply(band, raw, mode);
  x = remove_ecg(x, mode);
  x = rectify(x);
  return apply(smooth_spec(raw.rate_hz), x, mode);
}

TimeSeries emg_envelope(const EmgChannel& ch, FilterMode mode) {
  if (!(ch.mvc > 0.0) || !std::isfinite(ch.mvc)) {
    throw std::invalid_argument("EMG channel '" + ch.label + "': mvc must be positive");
  }
  auto env = emg_envelope_unnormalized(ch.raw, mode);
  for (double& v : env.samples) v = normalize(v, ch.mvc);
  return env;
}

EnvelopeTracker::EnvelopeTracker(double rate_hz, double mvc)
    : rate_hz_(rate_hz),
      mvc_(mvc),
      band_(design_filter(band_spec(rate_hz))),
      ecg_(design_filter(ecg_spec(rate_hz))),
      smooth_(design_filter(smooth_spec(rate_hz))) {
  if (!(mvc > 0.0) || !std::isfinite(mvc)) throw std::invalid_argument("EnvelopeTracker: mvc must be positive");
}

double EnvelopeTracker::push(double raw) {
  if (!std::isfinite(raw)) throw DataError("EnvelopeTracker: non-finite EMG sample");
  const double v = smooth_.step(std::abs(ecg_.step(band_.step(raw))));
  value_ = normalize(v, mvc_);
  return value_;
}

TimeSeries decimate(const TimeSeries& x, std::size_t factor) {
  if (factor == 0) throw std::invalid_argument("decimation factor must be positive");
  std::vector<double> kept;
  kept.reserve(x.size() / factor + 1);
  for (std::size_t k = 0; k < x.size(); k += factor) kept.push_back(x.samples[k]);
  return TimeSeries(std::move(kept), x.rate_hz / static_cast<double>(factor), x.t0);
}

}  // namespace carry
