#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "motionaug/error.hpp"
#include "motionaug/random.hpp"
#include "motionaug/signal.hpp"

namespace motionaug {

enum class Method : std::uint8_t {
  RandomNoise = 0,
  TemporalScaling = 1,
  IntensityScaling = 2,
  WarpLeftToRight = 3,
  WarpRightToLeft = 4,
};

enum class WarpDirection { LeftToRight, RightToLeft };

inline std::string_view method_name(Method m) {
  switch (m) {
    case Method::RandomNoise: return "noise";
    case Method::TemporalScaling: return "temporal";
    case Method::IntensityScaling: return "intensity";
    case Method::WarpLeftToRight: return "warp-lr";
    case Method::WarpRightToLeft: return "warp-rl";
  }
  return "?";
}

inline std::optional<Method> parse_method(std::string_view s) {
  for (auto m : {Method::RandomNoise, Method::TemporalScaling, Method::IntensityScaling,
                 Method::WarpLeftToRight, Method::WarpRightToLeft})
    if (method_name(m) == s) return m;
  return std::nullopt;
}

/// One augmentation method with its parameters. Only the fields relevant to
/// `method` are consulted.
struct AugmentationSpec {
  Method method = Method::IntensityScaling;
  double mu = 0.0;
  double sigma = 0.0;
  double f_t = 1.0;
  double f_i = 1.0;

  static AugmentationSpec noise(double sigma, double mu = 0.0) {
    return {Method::RandomNoise, mu, sigma, 1.0, 1.0};
  }
  static AugmentationSpec temporal(double f_t) { return {Method::TemporalScaling, 0.0, 0.0, f_t, 1.0}; }
  static AugmentationSpec intensity(double f_i) { return {Method::IntensityScaling, 0.0, 0.0, 1.0, f_i}; }
  static AugmentationSpec warp(WarpDirection d) {
    return {d == WarpDirection::LeftToRight ? Method::WarpLeftToRight : Method::WarpRightToLeft,
            0.0, 0.0, 1.0, 1.0};
  }

  void validate() const {
    switch (method) {
      case Method::RandomNoise:
        if (!(sigma >= 0.0) || !std::isfinite(sigma) || !std::isfinite(mu))
          throw InvalidArgument("noise: sigma must be finite and >= 0");
        break;
      case Method::TemporalScaling:
        if (!(f_t > 0.0) || !std::isfinite(f_t)) throw InvalidArgument("temporal: f_T must be > 0");
        break;
      case Method::IntensityScaling:
        if (!(f_i > 0.0) || !std::isfinite(f_i)) throw InvalidArgument("intensity: f_I must be > 0");
        break;
      default:
        break;
    }
  }

  friend bool operator==(const AugmentationSpec&, const AugmentationSpec&) = default;
};

/// Ordered list of specs applied to the same copy, plus the fraction of
/// training samples that receive a copy.
struct AugmentationPlan {
  std::vector<AugmentationSpec> specs;
  double ratio = 1.0;
  std::uint64_t base_seed = 0;
  /// Standard mode restricts ratio to {0.5, 1}.
  bool exploratory = false;

  void validate() const {
    if (specs.empty()) throw InvalidArgument("AugmentationPlan: no specs");
    for (const auto& s : specs) s.validate();
    if (exploratory) {
      if (!(ratio > 0.0 && ratio <= 1.0)) throw InvalidArgument("AugmentationPlan: ratio must be in (0, 1]");
    } else if (ratio != 1.0 && ratio != 0.5) {
      throw InvalidArgument("AugmentationPlan: ratio must be 1.0 or 0.5");
    }
  }
};

struct WarpCuts {
  std::size_t t1 = 0;
  std::size_t t2 = 0;
  std::size_t n = 0;

  bool valid() const noexcept {
    return n >= 8 && n / 4 <= t1 && t1 <= n / 2 && n / 2 <= t2 && t2 <= 3 * n / 4;
  }
};

inline Signal add_random_noise(const Signal& s, double mu, double sigma, Rng& rng) {
  AugmentationSpec::noise(sigma, mu).validate();
  Signal out = s;
  if (sigma == 0.0 && mu == 0.0) return out;
  std::normal_distribution<double> dist(mu, sigma);
  for (std::size_t c = 0; c < out.n_channels(); ++c)
    for (double& v : out.channel(c)) v += dist(rng);
  return out;
}

/// Resamples to round(n * f_T) samples, then center-crops (f_T > 1) or
/// zero-pads (f_T < 1) back to n. On odd differences the left side gets the
/// smaller share.
inline Signal temporal_scale(const Signal& s, double f_t) {
  AugmentationSpec::temporal(f_t).validate();
  if (f_t == 1.0) return s;
  const std::size_t n = s.length();
  // std::round rounds half away from zero.
  const double scaled = std::round(static_cast<double>(n) * f_t);
  if (scaled < 2.0) throw InvalidArgument("temporal: round(n * f_T) must be >= 2");
  const auto m = static_cast<std::size_t>(scaled);
  if (m == n) return s;
  const Signal r = resample_linear(s, m);
  Signal out(s.n_channels(), n, s.sample_rate_hz());
  for (std::size_t c = 0; c < s.n_channels(); ++c) {
    const auto src = r.channel(c);
    auto dst = out.channel(c);
    if (m > n) {
      const std::size_t left = (m - n) / 2;
      std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(left), n, dst.begin());
    } else {
      const std::size_t left = (n - m) / 2;
      std::copy(src.begin(), src.end(), dst.begin() + static_cast<std::ptrdiff_t>(left));
    }
  }
  return out;
}

inline Signal intensity_scale(const Signal& s, double f_i) {
  AugmentationSpec::intensity(f_i).validate();
  Signal out = s;
  if (f_i == 1.0) return out;
  for (std::size_t c = 0; c < out.n_channels(); ++c)
    for (double& v : out.channel(c)) v *= f_i;
  return out;
}

/// t1 ~ U{floor(n/4), floor(n/2)}, t2 ~ U{floor(n/2), floor(3n/4)}, inclusive.
inline WarpCuts draw_warp_cuts(std::size_t n, Rng& rng) {
  if (n < 8) throw InvalidArgument("draw_warp_cuts: n must be >= 8");
  std::uniform_int_distribution<std::size_t> first(n / 4, n / 2);
  std::uniform_int_distribution<std::size_t> second(n / 2, 3 * n / 4);
  WarpCuts cuts;
  cuts.n = n;
  cuts.t1 = first(rng);
  cuts.t2 = second(rng);
  return cuts;
}

/// Left-to-right: source [0, t1] is stretched over target [0, t2] and source
/// [t1, n-1] contracted into [t2, n-1]. Right-to-left swaps the roles of t1/t2.
inline Signal warp(const Signal& s, WarpDirection direction, const WarpCuts& cuts) {
  if (cuts.n != s.length() || !cuts.valid()) throw InvalidArgument("warp: invalid cuts for signal");
  const double last = static_cast<double>(s.length() - 1);
  const auto t1 = static_cast<double>(cuts.t1);
  const auto t2 = static_cast<double>(cuts.t2);
  TimeMap map;
  if (direction == WarpDirection::LeftToRight)
    map.knots = {{0.0, 0.0}, {t1, t2}, {last, last}};
  else
    map.knots = {{0.0, 0.0}, {t2, t1}, {last, last}};
  return apply_time_map(s, map);
}

/// Applies a single spec; `rng` is consumed only by the random methods.
inline Signal apply_spec(const Signal& s, const AugmentationSpec& spec, Rng& rng) {
  switch (spec.method) {
    case Method::RandomNoise: return add_random_noise(s, spec.mu, spec.sigma, rng);
    case Method::TemporalScaling: return temporal_scale(s, spec.f_t);
    case Method::IntensityScaling: return intensity_scale(s, spec.f_i);
    case Method::WarpLeftToRight:
      return warp(s, WarpDirection::LeftToRight, draw_warp_cuts(s.length(), rng));
    case Method::WarpRightToLeft:
      return warp(s, WarpDirection::RightToLeft, draw_warp_cuts(s.length(), rng));
  }
  throw InvalidArgument("unknown augmentation method");
}

/// Random stream key for spec `position` of a plan: method ordinal in the low
/// byte, plan position above it.
constexpr std::uint64_t spec_stream(std::size_t position, Method m) noexcept {
  return (static_cast<std::uint64_t>(position) << 8) | static_cast<std::uint64_t>(m);
}

/// Indices of the samples that receive an augmented copy: i is selected iff
/// ceil((i + 1) * ratio) > ceil(i * ratio). Ratio 1 selects all, ratio 0.5
/// selects 0, 2, 4, ...; the count is always ceil(ratio * count).
inline std::vector<std::size_t> augmented_indices(std::size_t count, double ratio) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < count; ++i) {
    const double lo = std::ceil(static_cast<double>(i) * ratio);
    const double hi = std::ceil(static_cast<double>(i + 1) * ratio);
    if (hi > lo) idx.push_back(i);
  }
  return idx;
}

/// Augmented copy of sample `index` under `plan`: all specs composed in order,
/// each drawing from its own stream mix(base_seed, index, spec_stream(...)).
inline Signal augment_sample(const Signal& s, std::size_t index, const AugmentationPlan& plan) {
  Signal out = s;
  for (std::size_t k = 0; k < plan.specs.size(); ++k) {
    Rng rng = make_rng(plan.base_seed, index, spec_stream(k, plan.specs[k].method));
    out = apply_spec(out, plan.specs[k], rng);
  }
  return out;
}

/// Returns the originals followed by one augmented copy for each selected index.
inline std::vector<Signal> apply_plan(const std::vector<Signal>& training_set,
                                      const AugmentationPlan& plan) {
  if (training_set.empty()) throw InvalidArgument("apply_plan: empty training set");
  plan.validate();
  const auto selected = augmented_indices(training_set.size(), plan.ratio);
  std::vector<Signal> out;
  out.reserve(training_set.size() + selected.size());
  out.insert(out.end(), training_set.begin(), training_set.end());
  for (std::size_t i : selected) out.push_back(augment_sample(training_set[i], i, plan));
  return out;
}

}  // namespace motionaug
