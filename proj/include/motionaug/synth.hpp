#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "motionaug/dataset.hpp"
#include "motionaug/error.hpp"
#include "motionaug/random.hpp"

namespace motionaug {

struct SynthConfig {
  std::size_t n_users = 100;
  std::size_t samples_per_user = 200;
  std::size_t length = 150;
  std::size_t n_channels = 6;
  double sample_rate_hz = 100.0;
  /// Sinusoids per channel in a user's signature.
  std::size_t components = 4;
  double min_freq_hz = 1.0;
  double max_freq_hz = 10.0;
  /// Signature amplitude A: component amplitudes are drawn in [A/4, A] and
  /// the per-channel offset in [-A, A].
  double amplitude = 1.0;
  /// Standard deviation of the i.i.d. per-sample jitter.
  double jitter_std = 0.1;
  std::uint64_t seed = 1;

  void validate() const {
    if (n_users == 0 || samples_per_user == 0 || n_channels == 0 || components == 0)
      throw InvalidArgument("SynthConfig: counts must be positive");
    if (length < 2) throw InvalidArgument("SynthConfig: length must be >= 2");
    if (!(sample_rate_hz > 0.0)) throw InvalidArgument("SynthConfig: sample rate must be positive");
    if (!(min_freq_hz > 0.0) || !(max_freq_hz >= min_freq_hz))
      throw InvalidArgument("SynthConfig: frequency range must satisfy 0 < min <= max");
    if (!(amplitude > 0.0)) throw InvalidArgument("SynthConfig: amplitude must be positive");
    if (!(jitter_std >= 0.0)) throw InvalidArgument("SynthConfig: jitter std must be >= 0");
  }
};

/// "u000", "u001", ... padded to the width of the largest index.
inline std::string synth_user_id(std::size_t index, std::size_t n_users) {
  const std::size_t width = std::max<std::size_t>(3, std::to_string(n_users - 1).size());
  std::string digits = std::to_string(index);
  return "u" + std::string(width - digits.size(), '0') + digits;
}

/// The noiseless template of one user: per channel, an offset plus a bank of
/// sinusoids with user-specific frequency, phase and amplitude.
inline Signal user_signature(const SynthConfig& cfg, std::size_t user) {
  Rng rng = make_rng(cfg.seed, user, 0x5167);
  std::uniform_real_distribution<double> freq(cfg.min_freq_hz, cfg.max_freq_hz);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> amp(cfg.amplitude / 4.0, cfg.amplitude);
  std::uniform_real_distribution<double> offset(-cfg.amplitude, cfg.amplitude);
  Signal sig(cfg.n_channels, cfg.length, cfg.sample_rate_hz);
  for (std::size_t c = 0; c < cfg.n_channels; ++c) {
    auto row = sig.channel(c);
    const double base = offset(rng);
    std::fill(row.begin(), row.end(), base);
    for (std::size_t k = 0; k < cfg.components; ++k) {
      const double f = freq(rng), p = phase(rng), a = amp(rng) / static_cast<double>(cfg.components);
      for (std::size_t i = 0; i < cfg.length; ++i)
        row[i] += a * std::sin(2.0 * std::numbers::pi * f * static_cast<double>(i) / cfg.sample_rate_hz + p);
    }
  }
  return sig;
}

/// Each sample is the user's signature plus i.i.d. Gaussian jitter, drawn
/// from its own stream so users and samples are generated independently.
inline Dataset generate(const SynthConfig& cfg) {
  cfg.validate();
  Dataset ds;
  ds.samples.reserve(cfg.n_users * cfg.samples_per_user);
  for (std::size_t u = 0; u < cfg.n_users; ++u) {
    const std::string id = synth_user_id(u, cfg.n_users);
    ds.users.push_back(id);
    const Signal signature = user_signature(cfg, u);
    for (std::size_t e = 0; e < cfg.samples_per_user; ++e) {
      Signal s = signature;
      if (cfg.jitter_std > 0.0) {
        Rng rng = make_rng(cfg.seed, u, 0x10000 + e);
        std::normal_distribution<double> jitter(0.0, cfg.jitter_std);
        for (std::size_t c = 0; c < s.n_channels(); ++c)
          for (double& v : s.channel(c)) v += jitter(rng);
      }
      ds.samples.push_back({id, e, std::move(s)});
    }
  }
  return ds;
}

}  // namespace motionaug
