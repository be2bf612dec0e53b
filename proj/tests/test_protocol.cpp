#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "motionaug/protocol.hpp"
#include "motionaug/synth.hpp"

using namespace motionaug;

namespace {

SynthConfig small_synth(std::size_t users = 12, std::size_t samples = 120) {
  SynthConfig s;
  s.n_users = users;
  s.samples_per_user = samples;
  s.length = 24;
  s.n_channels = 2;
  s.seed = 3;
  return s;
}

const Dataset& small_dataset() {
  static const Dataset ds = generate(small_synth());
  return ds;
}

std::vector<std::string> second_half(const Dataset& ds) {
  return {ds.users.begin() + static_cast<std::ptrdiff_t>(ds.users.size() / 2), ds.users.end()};
}

std::set<std::string> users_of(const Dataset& ds, const std::vector<std::size_t>& idx) {
  std::set<std::string> out;
  for (std::size_t i : idx) out.insert(ds.samples[i].user_id);
  return out;
}

ExperimentConfig baseline_config() {
  ExperimentConfig cfg;
  cfg.seed = 5;
  return cfg;
}

}  // namespace

TEST(Split, SizesAndDisjointness) {
  const auto& ds = small_dataset();
  const auto eval = second_half(ds);
  for (const auto& target : eval) {
    const auto s = build_split(ds, eval, target, PoolRule::EvalAlternate, {}, 9);
    EXPECT_EQ(s.train_pos.size(), 20u);
    EXPECT_EQ(s.test_pos.size(), 100u);
    EXPECT_EQ(s.train_neg.size(), 100u);
    EXPECT_EQ(s.test_neg.size(), 100u);
    std::set<std::size_t> all;
    for (const auto* v : {&s.train_pos, &s.test_pos, &s.train_neg, &s.test_neg})
      for (std::size_t i : *v) EXPECT_TRUE(all.insert(i).second) << "index " << i << " used twice";
    EXPECT_EQ(users_of(ds, s.train_pos), std::set<std::string>{target});
    EXPECT_EQ(users_of(ds, s.test_pos), std::set<std::string>{target});
    const auto a = users_of(ds, s.train_neg), b = users_of(ds, s.test_neg);
    EXPECT_FALSE(a.count(target));
    EXPECT_FALSE(b.count(target));
    for (const auto& u : a) EXPECT_FALSE(b.count(u)) << "user " << u << " in both negative pools";
  }
}

TEST(Split, PositivesAreFirstEventsInOrder) {
  const auto& ds = small_dataset();
  const auto eval = second_half(ds);
  const auto s = build_split(ds, eval, eval[0], PoolRule::EvalAlternate, {}, 9);
  for (std::size_t k = 0; k < 20; ++k) EXPECT_EQ(ds.samples[s.train_pos[k]].event_index, k);
  for (std::size_t k = 0; k < 100; ++k) EXPECT_EQ(ds.samples[s.test_pos[k]].event_index, 20 + k);
}

TEST(Split, PoolsAlternateOverCandidates) {
  const auto& ds = small_dataset();
  const auto eval = second_half(ds);  // u006..u011
  const auto [a, b] = negative_pools(ds, eval, "u008", PoolRule::EvalAlternate);
  EXPECT_EQ(a, (std::vector<std::string>{"u006", "u009", "u011"}));
  EXPECT_EQ(b, (std::vector<std::string>{"u007", "u010"}));
  const auto [aa, bb] = negative_pools(ds, eval, "u008", PoolRule::AllAlternate);
  EXPECT_EQ(aa.size() + bb.size(), 11u);
  EXPECT_EQ(aa.front(), "u000");
  EXPECT_EQ(bb.front(), "u001");
}

TEST(Split, NegativesAreStratified) {
  const auto& ds = small_dataset();
  const auto eval = second_half(ds);
  const auto s = build_split(ds, eval, eval[2], PoolRule::EvalAlternate, {}, 4);
  std::map<std::string, std::size_t> counts;
  for (std::size_t i : s.train_neg) ++counts[ds.samples[i].user_id];
  ASSERT_EQ(counts.size(), s.pool_a.size());
  std::size_t lo = 1000, hi = 0;
  for (const auto& [u, n] : counts) {
    lo = std::min(lo, n);
    hi = std::max(hi, n);
  }
  EXPECT_LE(hi - lo, 1u);
}

TEST(Split, SeededDeterminism) {
  const auto& ds = small_dataset();
  const auto eval = second_half(ds);
  const auto a = build_split(ds, eval, eval[1], PoolRule::EvalAlternate, {}, 1);
  const auto b = build_split(ds, eval, eval[1], PoolRule::EvalAlternate, {}, 1);
  const auto c = build_split(ds, eval, eval[1], PoolRule::EvalAlternate, {}, 2);
  EXPECT_EQ(a.train_neg, b.train_neg);
  EXPECT_EQ(a.test_neg, b.test_neg);
  EXPECT_NE(a.train_neg, c.train_neg);
  EXPECT_EQ(a.train_pos, c.train_pos);
}

TEST(Split, TooFewTargetSamples) {
  const Dataset ds = generate(small_synth(4, 119));
  const std::vector<std::string> eval{"u002", "u003"};
  try {
    build_split(ds, eval, "u002", PoolRule::AllAlternate, {}, 0);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("needs >= 120"), std::string::npos) << e.what();
  }
}

TEST(Split, EmptyPoolIsConfigError) {
  const auto& ds = small_dataset();
  const std::vector<std::string> eval{"u010", "u011"};
  EXPECT_THROW(build_split(ds, eval, "u010", PoolRule::EvalAlternate, {}, 0), ConfigError);
}

TEST(TrainingSet, AugmentationRatioCounts) {
  const auto& ds = small_dataset();
  const auto eval = second_half(ds);
  const auto split = build_split(ds, eval, eval[0], PoolRule::EvalAlternate, {}, 1);
  const auto provider = EmbeddingProvider::statistical();
  const auto ctx = prepare_user(ds, split, provider);
  AugmentationPlan plan{{AugmentationSpec::noise(0.05)}, 1.0, 3};
  auto ts = build_training_set(ctx, plan, provider);
  EXPECT_EQ(ts.n_pos, 40u);
  EXPECT_EQ(ts.n_neg, 200u);
  plan.ratio = 0.5;
  ts = build_training_set(ctx, plan, provider);
  EXPECT_EQ(ts.n_pos, 30u);
  EXPECT_EQ(ts.n_neg, 150u);
  ts = build_training_set(ctx, std::nullopt, provider);
  EXPECT_EQ(ts.n_pos, 20u);
  EXPECT_EQ(ts.n_neg, 100u);
  EXPECT_EQ(std::count(ts.labels.begin(), ts.labels.end(), 1), 20);
}

TEST(TrainingSet, IdentityIntensityDuplicatesOriginals) {
  const auto& ds = small_dataset();
  const auto eval = second_half(ds);
  const auto split = build_split(ds, eval, eval[3], PoolRule::EvalAlternate, {}, 1);
  const auto provider = EmbeddingProvider::statistical();
  const auto ctx = prepare_user(ds, split, provider);
  const auto ts = build_training_set(ctx, AugmentationPlan{{AugmentationSpec::intensity(1.0)}, 1.0, 3}, provider);
  for (std::size_t i = 0; i < 20; ++i) EXPECT_EQ(ts.features[20 + i], ctx.train_pos[i]);
  for (std::size_t i = 0; i < 100; ++i) EXPECT_EQ(ts.features[140 + i], ctx.train_neg[i]);
}

TEST(RunCell, SeparableUsersAreIdentified) {
  const auto& ds = small_dataset();
  const auto eval = second_half(ds);
  const auto split = build_split(ds, eval, eval[0], PoolRule::EvalAlternate, {}, 1);
  SvmConfig svm;
  svm.C = 100.0;
  const auto r = run_cell(ds, split, std::nullopt, EmbeddingProvider::statistical(), svm, CalibrationMode::Test);
  EXPECT_EQ(r.accuracy, 1.0);
  EXPECT_EQ(r.far, 0.0);
  EXPECT_EQ(r.frr, 0.0);
  EXPECT_TRUE(r.within_target);
  EXPECT_EQ(r.raw_scores.size(), 200u);
}

TEST(RunCell, CalibrationModes) {
  const auto& ds = small_dataset();
  const auto eval = second_half(ds);
  const auto split = build_split(ds, eval, eval[1], PoolRule::EvalAlternate, {}, 1);
  SvmConfig svm;
  svm.kernel = Kernel::Rbf;
  svm.C = 1.0;
  const auto provider = EmbeddingProvider::statistical();
  const auto a = run_cell(ds, split, std::nullopt, provider, svm, CalibrationMode::Test);
  const auto b = run_cell(ds, split, std::nullopt, provider, svm, CalibrationMode::Train);
  EXPECT_EQ(a.raw_scores, b.raw_scores);  // calibration never changes the model scores
  EXPECT_GT(a.gamma, 0.0);
  EXPECT_GE(b.accuracy, 0.0);
}

TEST(RunCell, TableProviderRejectsAugmentation) {
  const auto& ds = small_dataset();
  const auto eval = second_half(ds);
  const auto split = build_split(ds, eval, eval[0], PoolRule::EvalAlternate, {}, 1);
  EmbeddingTable t;
  t.dim = 1;
  for (const auto& s : ds.samples) t.vectors[s.key()] = {static_cast<double>(s.event_index)};
  const auto provider = EmbeddingProvider::from_table(t, "mem");
  AugmentationPlan plan{{AugmentationSpec::noise(0.1)}, 1.0, 0};
  EXPECT_THROW(run_cell(ds, split, plan, provider, SvmConfig{}, CalibrationMode::Test), ConfigError);
  EXPECT_NO_THROW(run_cell(ds, split, std::nullopt, provider, SvmConfig{}, CalibrationMode::Test));
}

TEST(Experiment, BaselineOnlyCells) {
  const auto rep = run_experiment(small_dataset(), EmbeddingProvider::statistical(), baseline_config());
  EXPECT_EQ(rep.cells.size(), 6u);
  EXPECT_EQ(rep.eval_users.size(), 6u);
  ASSERT_NE(rep.best_baseline(), nullptr);
  for (const auto& c : rep.cells) {
    EXPECT_EQ(c.key.family, Family::None);
    EXPECT_EQ(c.per_user.size(), 6u);
    double m = 0.0;
    for (const auto& u : c.per_user) m += u.accuracy;
    EXPECT_DOUBLE_EQ(c.mean_accuracy, m / 6.0);
    EXPECT_EQ(c.n_train_pos, 20u);
    EXPECT_EQ(c.n_train_neg, 100u);
  }
}

TEST(Experiment, NoiseGridCellCount) {
  auto cfg = baseline_config();
  cfg.eval_users = {"u006", "u007", "u008", "u009"};
  cfg.sweep.sigmas = {0.0125, 0.025, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5};
  cfg.sweep.ratios = {1.0, 0.5};
  const auto rep = run_experiment(small_dataset(), EmbeddingProvider::statistical(), cfg);
  EXPECT_EQ(rep.cells.size(), 6u + 96u);
  std::size_t best_noise = 0;
  for (const auto& c : rep.cells)
    if (c.key.family == Family::Noise && c.best) ++best_noise;
  EXPECT_EQ(best_noise, 2u);  // one per ratio
}

TEST(Experiment, ThreadCountDoesNotChangeResults) {
  auto cfg = baseline_config();
  cfg.sweep.f_is = {0.9, 1.1};
  cfg.sweep.ratios = {1.0};
  const auto a = run_experiment(small_dataset(), EmbeddingProvider::statistical(), cfg);
  cfg.threads = 3;
  const auto b = run_experiment(small_dataset(), EmbeddingProvider::statistical(), cfg);
  ASSERT_EQ(a.cells.size(), b.cells.size());
  for (std::size_t i = 0; i < a.cells.size(); ++i) {
    EXPECT_EQ(a.cells[i].mean_accuracy, b.cells[i].mean_accuracy);
    EXPECT_EQ(a.cells[i].mean_far, b.cells[i].mean_far);
    EXPECT_EQ(a.cells[i].best, b.cells[i].best);
  }
}

TEST(Experiment, InputDatasetUntouched) {
  const Dataset before = small_dataset();
  auto cfg = baseline_config();
  cfg.sweep.warps = {WarpDirection::LeftToRight};
  cfg.sweep.f_ts = {0.9};
  cfg.sweep.ratios = {1.0};
  run_experiment(small_dataset(), EmbeddingProvider::statistical(), cfg);
  EXPECT_EQ(small_dataset(), before);
}

TEST(Experiment, CombinedBestResolvesFromIndependentSweep) {
  auto cfg = baseline_config();
  cfg.eval_users = {"u006", "u007", "u008"};
  cfg.sweep.sigmas = {0.05, 0.5};
  cfg.sweep.f_ts = {0.9};
  cfg.sweep.ratios = {1.0};
  cfg.combined.push_back({"mix", {{Family::Noise, std::nullopt, std::nullopt}, {Family::Temporal, 0.95, std::nullopt}}, 1.0});
  const auto rep = run_experiment(small_dataset(), EmbeddingProvider::statistical(), cfg);
  const CellReport* best_noise = nullptr;
  for (const auto& c : rep.cells)
    if (c.key.family == Family::Noise && c.best) best_noise = &c;
  ASSERT_NE(best_noise, nullptr);
  std::size_t combined = 0;
  for (const auto& c : rep.cells)
    if (c.key.family == Family::Combined) {
      ++combined;
      EXPECT_EQ(c.description, "noise(sigma=" + detail::format_param(best_noise->param) + ")+temporal(f_T=0.95)");
      EXPECT_EQ(c.key.value, "mix");
    }
  EXPECT_EQ(combined, 6u);
}

TEST(Experiment, CombinedBestWithoutSweepIsConfigError) {
  auto cfg = baseline_config();
  cfg.combined.push_back({"mix", {{Family::Noise, std::nullopt, std::nullopt}}, 1.0});
  EXPECT_THROW(run_experiment(small_dataset(), EmbeddingProvider::statistical(), cfg), ConfigError);
}

TEST(Experiment, ConfigValidation) {
  auto cfg = baseline_config();
  cfg.grid.Cs.clear();
  EXPECT_THROW(validate_config(cfg), ConfigError);
  cfg = baseline_config();
  cfg.sweep.sigmas = {0.1};
  EXPECT_THROW(validate_config(cfg), ConfigError);  // no ratios
  cfg.sweep.ratios = {0.3};
  EXPECT_THROW(validate_config(cfg), ConfigError);
  cfg.exploratory = true;
  EXPECT_NO_THROW(validate_config(cfg));
  cfg = baseline_config();
  cfg.split.train_pos = 10;
  EXPECT_THROW(validate_config(cfg), ConfigError);
  cfg.eval_users = {"nobody"};
  cfg.exploratory = true;
  EXPECT_THROW(run_experiment(small_dataset(), EmbeddingProvider::statistical(), cfg), ConfigError);
}

TEST(MarkBest, TieBreaks) {
  auto cell = [](double acc, double far, double frr, double C) {
    CellReport c;
    c.key = {Family::Noise, "x", 1.0, Kernel::Linear, C};
    c.mean_accuracy = acc;
    c.mean_far = far;
    c.mean_frr = frr;
    return c;
  };
  std::vector<CellReport> cells{cell(0.9, 0.1, 0.1, 1), cell(0.95, 0.06, 0.04, 10), cell(0.95, 0.05, 0.05, 100),
                                cell(0.95, 0.05, 0.05, 10)};
  detail::mark_best(cells);
  EXPECT_FALSE(cells[0].best);
  EXPECT_FALSE(cells[1].best);
  EXPECT_FALSE(cells[2].best);
  EXPECT_TRUE(cells[3].best);
}
