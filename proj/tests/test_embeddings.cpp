#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "motionaug/augmentation.hpp"
#include "motionaug/embeddings.hpp"
#include "support/oracles.hpp"

using namespace motionaug;
using testutil::single_channel;

namespace {

double feature(const Embedding& e, std::size_t c, Feature f) {
  return e.vector.at(c * kFeaturesPerChannel + static_cast<std::size_t>(f));
}

/// Textbook two-pass formulas for the moment features.
struct Moments {
  double mean, sd, skew, kurt;
};

Moments moments(const std::vector<double>& x) {
  const auto [mean, sd] = oracle::mean_std(x);
  double s3 = 0.0, s4 = 0.0;
  for (double v : x) {
    s3 += std::pow((v - mean) / sd, 3);
    s4 += std::pow((v - mean) / sd, 4);
  }
  const auto n = static_cast<double>(x.size());
  return {mean, sd, s3 / n, s4 / n - 3.0};
}

/// Quantile by the "type 7" definition: h = (n-1)p, interpolate floor/ceil.
double quantile7(std::vector<double> x, double p) {
  std::sort(x.begin(), x.end());
  const double h = (static_cast<double>(x.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, x.size() - 1);
  return x[lo] + (h - std::floor(h)) * (x[hi] - x[lo]);
}

}  // namespace

TEST(Statistical, DimensionIsTenPerChannel) {
  std::mt19937_64 g(1);
  EXPECT_EQ(extract_statistical(testutil::random_signal(g, 6, 150)).vector.size(), 60u);
  EXPECT_EQ(extract_statistical(testutil::random_signal(g, 1, 10)).vector.size(), 10u);
}

TEST(Statistical, ConstantChannel) {
  const auto e = extract_statistical(single_channel(std::vector<double>(50, 2.5)));
  EXPECT_DOUBLE_EQ(feature(e, 0, Feature::Mean), 2.5);
  EXPECT_EQ(feature(e, 0, Feature::StdDev), 0.0);
  EXPECT_EQ(feature(e, 0, Feature::Min), 2.5);
  EXPECT_EQ(feature(e, 0, Feature::Max), 2.5);
  EXPECT_DOUBLE_EQ(feature(e, 0, Feature::Rms), 2.5);
  EXPECT_EQ(feature(e, 0, Feature::MeanAbsDiff), 0.0);
  EXPECT_EQ(feature(e, 0, Feature::Skewness), 0.0);
  EXPECT_EQ(feature(e, 0, Feature::Kurtosis), 0.0);
  EXPECT_EQ(feature(e, 0, Feature::ZeroCrossingRate), 0.0);
  EXPECT_EQ(feature(e, 0, Feature::Iqr), 0.0);
  for (double v : e.vector) EXPECT_TRUE(std::isfinite(v));
}

TEST(Statistical, AllZeroWindowIsFinite) {
  const auto e = extract_statistical(Signal(6, 150));
  for (double v : e.vector) EXPECT_EQ(v, 0.0);
}

TEST(Statistical, AlternatingSigns) {
  const auto e = extract_statistical(single_channel({1, -1, 1, -1}));
  EXPECT_DOUBLE_EQ(feature(e, 0, Feature::ZeroCrossingRate), 0.75);
  EXPECT_DOUBLE_EQ(feature(e, 0, Feature::MeanAbsDiff), 2.0);
  EXPECT_DOUBLE_EQ(feature(e, 0, Feature::Mean), 0.0);
  EXPECT_DOUBLE_EQ(feature(e, 0, Feature::StdDev), 1.0);
  EXPECT_DOUBLE_EQ(feature(e, 0, Feature::Kurtosis), -2.0);
  // Quartiles of {-1,-1,1,1}: h=0.75 -> -1, h=2.25 -> 1.
  EXPECT_DOUBLE_EQ(feature(e, 0, Feature::Iqr), 2.0);
}

TEST(Statistical, MatchesTextbookFormulas) {
  std::mt19937_64 g(2);
  for (int t = 0; t < 50; ++t) {
    const Signal s = testutil::random_signal(g, 3, 40 + t);
    const auto e = extract_statistical(s);
    for (std::size_t c = 0; c < 3; ++c) {
      const auto x = testutil::row(s, c);
      const auto m = moments(x);
      double rms = 0.0, mad = 0.0;
      for (double v : x) rms += v * v;
      for (std::size_t i = 1; i < x.size(); ++i) mad += std::abs(x[i] - x[i - 1]);
      EXPECT_NEAR(feature(e, c, Feature::Mean), m.mean, 1e-12);
      EXPECT_NEAR(feature(e, c, Feature::StdDev), m.sd, 1e-12);
      EXPECT_NEAR(feature(e, c, Feature::Skewness), m.skew, 1e-9);
      EXPECT_NEAR(feature(e, c, Feature::Kurtosis), m.kurt, 1e-9);
      EXPECT_NEAR(feature(e, c, Feature::Rms), std::sqrt(rms / static_cast<double>(x.size())), 1e-12);
      EXPECT_NEAR(feature(e, c, Feature::MeanAbsDiff), mad / static_cast<double>(x.size() - 1), 1e-12);
      EXPECT_EQ(feature(e, c, Feature::Min), *std::min_element(x.begin(), x.end()));
      EXPECT_EQ(feature(e, c, Feature::Max), *std::max_element(x.begin(), x.end()));
      EXPECT_NEAR(feature(e, c, Feature::Iqr), quantile7(x, 0.75) - quantile7(x, 0.25), 1e-12);
    }
  }
}

TEST(Statistical, IntensityScalingCovariance) {
  std::mt19937_64 g(3);
  const Signal s = testutil::random_signal(g, 6, 150);
  const auto a = extract_statistical(s);
  for (double f : {0.8, 1.2}) {
    const auto b = extract_statistical(intensity_scale(s, f));
    for (std::size_t c = 0; c < 6; ++c) {
      for (auto k : {Feature::Mean, Feature::StdDev, Feature::Min, Feature::Max, Feature::Rms, Feature::MeanAbsDiff,
                     Feature::Iqr})
        EXPECT_NEAR(feature(b, c, k), f * feature(a, c, k), 1e-12);
      for (auto k : {Feature::Skewness, Feature::Kurtosis, Feature::ZeroCrossingRate})
        EXPECT_NEAR(feature(b, c, k), feature(a, c, k), 1e-9);
    }
  }
}

TEST(Statistical, Deterministic) {
  std::mt19937_64 g(4);
  const Signal s = testutil::random_signal(g);
  EXPECT_EQ(extract_statistical(s).vector, extract_statistical(s).vector);
}

TEST(Provider, TableLookup) {
  EmbeddingTable t;
  t.dim = 2;
  t.vectors[{"a", 1}] = {0.5, 1.5};
  const auto p = EmbeddingProvider::from_table(t, "mem");
  EXPECT_TRUE(p.is_table());
  GestureSample s{"a", 1, Signal(1, 4)};
  EXPECT_EQ(p.embed(s).vector, (std::vector<double>{0.5, 1.5}));
  s.event_index = 2;
  try {
    p.embed(s);
    FAIL();
  } catch (const NotFound& e) {
    EXPECT_NE(std::string(e.what()).find("(a, 2)"), std::string::npos);
  }
  EXPECT_THROW(p.embed(Signal(1, 4)), ConfigError);
}

TEST(Provider, Parse) {
  EXPECT_FALSE(EmbeddingProvider::parse("statistical").is_table());
  EXPECT_THROW(EmbeddingProvider::parse("learned"), ConfigError);
  EXPECT_THROW(EmbeddingProvider::parse("table:"), ConfigError);
  EXPECT_ANY_THROW(EmbeddingProvider::parse("table:/nonexistent.csv"));
}
