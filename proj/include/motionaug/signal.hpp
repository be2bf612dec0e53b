#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "motionaug/error.hpp"

namespace motionaug {

/// One fixed-length multi-channel sensor window. Values are stored
/// channel-major: channel c occupies [c * length, (c + 1) * length).
class Signal {
 public:
  Signal() = default;

  Signal(std::size_t n_channels, std::size_t length, double sample_rate_hz = 100.0)
      : n_channels_(n_channels), length_(length), sample_rate_hz_(sample_rate_hz),
        values_(n_channels * length, 0.0) {
    check_shape();
  }

  /// Builds a signal from per-channel rows; every row must have the same length.
  explicit Signal(const std::vector<std::vector<double>>& channels, double sample_rate_hz = 100.0)
      : n_channels_(channels.size()),
        length_(channels.empty() ? 0 : channels.front().size()),
        sample_rate_hz_(sample_rate_hz) {
    check_shape();
    values_.reserve(n_channels_ * length_);
    for (const auto& row : channels) {
      if (row.size() != length_) throw InvalidArgument("Signal: ragged channel lengths");
      values_.insert(values_.end(), row.begin(), row.end());
    }
    check_finite();
  }

  std::size_t n_channels() const noexcept { return n_channels_; }
  std::size_t length() const noexcept { return length_; }
  double sample_rate_hz() const noexcept { return sample_rate_hz_; }

  std::span<const double> channel(std::size_t c) const {
    return {values_.data() + c * length_, length_};
  }
  std::span<double> channel(std::size_t c) { return {values_.data() + c * length_, length_}; }

  double operator()(std::size_t c, std::size_t i) const { return values_[c * length_ + i]; }
  double& operator()(std::size_t c, std::size_t i) { return values_[c * length_ + i]; }

  std::span<const double> data() const noexcept { return values_; }

  void check_finite() const {
    for (double v : values_)
      if (!std::isfinite(v)) throw InvalidArgument("Signal: non-finite value");
  }

  friend bool operator==(const Signal&, const Signal&) = default;

 private:
  void check_shape() const {
    if (n_channels_ < 1) throw InvalidArgument("Signal: needs at least one channel");
    if (length_ < 2) throw InvalidArgument("Signal: length must be >= 2");
    if (!(sample_rate_hz_ > 0.0) || !std::isfinite(sample_rate_hz_))
      throw InvalidArgument("Signal: sample rate must be positive");
  }

  std::size_t n_channels_ = 0;
  std::size_t length_ = 0;
  double sample_rate_hz_ = 100.0;
  std::vector<double> values_;
};

/// Piecewise-linear monotone remapping of the time axis, as (source, target) knots.
struct TimeMap {
  struct Knot {
    double source;
    double target;
  };
  std::vector<Knot> knots;

  static TimeMap identity(std::size_t length) {
    const double last = static_cast<double>(length - 1);
    return TimeMap{{{0.0, 0.0}, {last, last}}};
  }
};

namespace detail {

/// Linear interpolation of `x` at fractional position `pos` in [0, x.size() - 1].
/// The result is clamped to the bracketing samples so it is always a convex
/// combination of them, even under rounding.
inline double interpolate_at(std::span<const double> x, double pos) {
  const std::size_t last = x.size() - 1;
  if (pos <= 0.0) return x.front();
  if (pos >= static_cast<double>(last)) return x.back();
  const auto i0 = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(i0);
  const double a = x[i0];
  const double b = x[i0 + 1];
  const double v = a + frac * (b - a);
  return std::clamp(v, std::min(a, b), std::max(a, b));
}

}  // namespace detail

/// Resamples every channel to `new_length` samples by linear interpolation.
/// Output sample j reads the input at j * (length - 1) / (new_length - 1), so
/// both endpoints are kept exactly and new_length == length is the identity.
inline Signal resample_linear(const Signal& s, std::size_t new_length) {
  if (new_length < 2) throw InvalidArgument("resample_linear: new_length must be >= 2");
  Signal out(s.n_channels(), new_length, s.sample_rate_hz());
  const std::size_t span_in = s.length() - 1;
  const std::size_t span_out = new_length - 1;
  for (std::size_t c = 0; c < s.n_channels(); ++c) {
    const auto src = s.channel(c);
    auto dst = out.channel(c);
    for (std::size_t j = 0; j < new_length; ++j) {
      // j * span_in is exact in integer arithmetic; one rounding in the division.
      const double pos = static_cast<double>(j * span_in) / static_cast<double>(span_out);
      dst[j] = detail::interpolate_at(src, pos);
    }
  }
  return out;
}

/// Checks knots are strictly increasing in both coordinates and that the
/// target axis spans exactly [0, length - 1].
inline void validate_time_map(const TimeMap& map, std::size_t length) {
  const auto& k = map.knots;
  if (k.size() < 2) throw InvalidArgument("TimeMap: needs at least two knots");
  for (std::size_t i = 1; i < k.size(); ++i) {
    if (!(k[i].source > k[i - 1].source) || !(k[i].target > k[i - 1].target))
      throw InvalidArgument("TimeMap: knots must be strictly increasing");
  }
  const double last = static_cast<double>(length - 1);
  if (k.front().target != 0.0 || k.back().target != last)
    throw InvalidArgument("TimeMap: target knots must span [0, length-1]");
  if (k.front().source < 0.0 || k.back().source > last)
    throw InvalidArgument("TimeMap: source knots outside the signal");
}

/// Output sample j is the input read at the source position the map sends to
/// target j (the map is inverted segment by segment). All channels share the map.
inline Signal apply_time_map(const Signal& s, const TimeMap& map) {
  validate_time_map(map, s.length());
  const std::size_t n = s.length();
  std::vector<double> source_pos(n);
  std::size_t seg = 0;
  const auto& k = map.knots;
  for (std::size_t j = 0; j < n; ++j) {
    const double t = static_cast<double>(j);
    while (seg + 2 < k.size() && t > k[seg + 1].target) ++seg;
    const auto& a = k[seg];
    const auto& b = k[seg + 1];
    source_pos[j] = a.source + (t - a.target) * (b.source - a.source) / (b.target - a.target);
  }
  Signal out(s.n_channels(), n, s.sample_rate_hz());
  for (std::size_t c = 0; c < s.n_channels(); ++c) {
    const auto src = s.channel(c);
    auto dst = out.channel(c);
    for (std::size_t j = 0; j < n; ++j) dst[j] = detail::interpolate_at(src, source_pos[j]);
  }
  return out;
}

}  // namespace motionaug
