#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "motionaug/dataset.hpp"
#include "motionaug/error.hpp"
#include "motionaug/signal.hpp"

namespace motionaug {

struct Embedding {
  std::vector<double> vector;
  std::string provider;
};

/// Per-channel statistical features, in output order.
enum class Feature : std::size_t {
  Mean,
  StdDev,
  Min,
  Max,
  Rms,
  MeanAbsDiff,
  Skewness,
  Kurtosis,
  ZeroCrossingRate,
  Iqr,
};

inline constexpr std::size_t kFeaturesPerChannel = 10;

inline constexpr std::array<std::string_view, kFeaturesPerChannel> kFeatureNames = {
    "mean", "std", "min", "max", "rms", "mad1", "skew", "kurt", "zcr", "iqr"};

namespace detail {

/// Quantile with linear interpolation between order statistics of `sorted`.
inline double quantile_sorted(std::span<const double> sorted, double p) {
  const double pos = p * static_cast<double>(sorted.size() - 1);
  return interpolate_at(sorted, pos);
}

inline void channel_features(std::span<const double> x, std::span<double> out) {
  const auto n = static_cast<double>(x.size());
  double sum = 0.0, sum_sq = 0.0, lo = x[0], hi = x[0];
  for (double v : x) {
    sum += v;
    sum_sq += v * v;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double mean = sum / n;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : x) {
    const double d = v - mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  const double mean_sq = sum_sq / n;

  double abs_diff = 0.0;
  std::size_t crossings = 0;
  for (std::size_t i = 1; i < x.size(); ++i) {
    abs_diff += std::abs(x[i] - x[i - 1]);
    if ((x[i - 1] < 0.0) != (x[i] < 0.0)) ++crossings;
  }

  // Constant windows (e.g. zero padding) define skewness and kurtosis as 0.
  // The threshold is relative to the signal power so it scales with f_I.
  const bool flat = m2 <= 1e-24 * mean_sq || m2 == 0.0;

  std::vector<double> sorted(x.begin(), x.end());
  std::sort(sorted.begin(), sorted.end());

  out[static_cast<std::size_t>(Feature::Mean)] = mean;
  out[static_cast<std::size_t>(Feature::StdDev)] = std::sqrt(m2);
  out[static_cast<std::size_t>(Feature::Min)] = lo;
  out[static_cast<std::size_t>(Feature::Max)] = hi;
  out[static_cast<std::size_t>(Feature::Rms)] = std::sqrt(mean_sq);
  out[static_cast<std::size_t>(Feature::MeanAbsDiff)] = abs_diff / (n - 1.0);
  out[static_cast<std::size_t>(Feature::Skewness)] = flat ? 0.0 : m3 / std::pow(m2, 1.5);
  out[static_cast<std::size_t>(Feature::Kurtosis)] = flat ? 0.0 : m4 / (m2 * m2) - 3.0;
  out[static_cast<std::size_t>(Feature::ZeroCrossingRate)] = static_cast<double>(crossings) / n;
  out[static_cast<std::size_t>(Feature::Iqr)] =
      quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
}

}  // namespace detail

/// Fixed-order statistical embedding: for each channel the ten features of
/// `Feature` (population moments, excess kurtosis, sign changes / length,
/// IQR with linearly interpolated quartiles). Dimension is 10 * n_channels.
inline Embedding extract_statistical(const Signal& s) {
  Embedding e;
  e.provider = "statistical";
  e.vector.assign(kFeaturesPerChannel * s.n_channels(), 0.0);
  for (std::size_t c = 0; c < s.n_channels(); ++c)
    detail::channel_features(s.channel(c),
                             std::span<double>(e.vector).subspan(c * kFeaturesPerChannel, kFeaturesPerChannel));
  return e;
}

inline Embedding lookup_embedding(const EmbeddingTable& table, const SampleKey& key) {
  const auto it = table.vectors.find(key);
  if (it == table.vectors.end()) throw NotFound("no embedding for key " + key_string(key));
  return {it->second, "table"};
}

/// Where embeddings come from: the built-in extractor or a precomputed table.
class EmbeddingProvider {
 public:
  static EmbeddingProvider statistical() { return EmbeddingProvider{}; }

  static EmbeddingProvider from_table(EmbeddingTable table, std::string path) {
    EmbeddingProvider p;
    p.table_ = std::make_shared<const EmbeddingTable>(std::move(table));
    p.path_ = std::move(path);
    return p;
  }

  /// Parses "statistical" or "table:<path>"; the table is loaded immediately.
  static EmbeddingProvider parse(std::string_view spec) {
    if (spec == "statistical") return statistical();
    if (spec.starts_with("table:")) {
      std::string path(spec.substr(6));
      if (path.empty()) throw ConfigError("provider table: path is empty");
      return from_table(load_embeddings(path), path);
    }
    throw ConfigError("unknown embedding provider '" + std::string(spec) + "'");
  }

  bool is_table() const noexcept { return table_ != nullptr; }

  std::string name() const { return is_table() ? "table:" + path_ : "statistical"; }

  /// Signal-domain embedding; only valid for the statistical provider.
  Embedding embed(const Signal& s) const {
    if (is_table()) throw ConfigError("table provider cannot embed raw signals");
    return extract_statistical(s);
  }

  Embedding embed(const GestureSample& sample) const {
    return is_table() ? lookup_embedding(*table_, sample.key()) : extract_statistical(sample.signal);
  }

 private:
  std::shared_ptr<const EmbeddingTable> table_;
  std::string path_;
};

}  // namespace motionaug
