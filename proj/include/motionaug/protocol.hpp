#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "motionaug/augmentation.hpp"
#include "motionaug/dataset.hpp"
#include "motionaug/embeddings.hpp"
#include "motionaug/error.hpp"
#include "motionaug/random.hpp"
#include "motionaug/svm.hpp"

namespace motionaug {

struct SplitSizes {
  std::size_t train_pos = 20;
  std::size_t test_pos = 100;
  std::size_t train_neg = 100;
  std::size_t test_neg = 100;

  friend bool operator==(const SplitSizes&, const SplitSizes&) = default;
};

/// How non-target users are divided into the training (A) and test (B)
/// negative pools. Both rules alternate A, B, A, ... over the candidate users
/// in order, skipping the target.
enum class PoolRule {
  /// Candidates are the other evaluation users.
  EvalAlternate,
  /// Candidates are all other users in the dataset.
  AllAlternate,
};

enum class CalibrationMode {
  /// Bias balanced on the evaluation scores themselves.
  Test,
  /// Bias balanced on the (possibly augmented) training scores.
  Train,
};

inline std::string_view calibration_name(CalibrationMode m) { return m == CalibrationMode::Test ? "test" : "train"; }

/// Indices into a Dataset's samples.
struct FewShotSplit {
  std::string target_user;
  std::vector<std::size_t> train_pos;
  std::vector<std::size_t> train_neg;
  std::vector<std::size_t> test_pos;
  std::vector<std::size_t> test_neg;
  std::vector<std::string> pool_a;
  std::vector<std::string> pool_b;
};

inline std::pair<std::vector<std::string>, std::vector<std::string>> negative_pools(
    const Dataset& ds, const std::vector<std::string>& eval_users, const std::string& target, PoolRule rule) {
  const auto& candidates = rule == PoolRule::EvalAlternate ? eval_users : ds.users;
  std::pair<std::vector<std::string>, std::vector<std::string>> pools;
  bool to_a = true;
  for (const auto& u : candidates) {
    if (u == target) continue;
    (to_a ? pools.first : pools.second).push_back(u);
    to_a = !to_a;
  }
  return pools;
}

namespace detail {

/// `total` samples spread as evenly as possible over the pool users (the
/// remainder goes to randomly chosen users), each user's share drawn
/// uniformly without replacement.
inline std::vector<std::size_t> draw_negatives(const std::map<std::string, std::vector<std::size_t>>& by_user,
                                               const std::vector<std::string>& pool, std::size_t total,
                                               Rng& rng, std::string_view pool_name) {
  if (pool.empty()) throw ConfigError(std::string("negative pool ") + std::string(pool_name) + " has no users");
  std::vector<std::size_t> quota(pool.size(), total / pool.size());
  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  for (std::size_t k = 0; k < total % pool.size(); ++k) ++quota[order[k]];

  std::vector<std::size_t> picked;
  picked.reserve(total);
  for (std::size_t p = 0; p < pool.size(); ++p) {
    const auto it = by_user.find(pool[p]);
    const std::size_t available = it == by_user.end() ? 0 : it->second.size();
    if (available < quota[p])
      throw ConfigError("pool " + std::string(pool_name) + " user " + pool[p] + " has " +
                        std::to_string(available) + " samples, needs " + std::to_string(quota[p]));
    if (quota[p] == 0) continue;
    std::vector<std::size_t> idx = it->second;
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(quota[p]);
    std::sort(idx.begin(), idx.end());
    picked.insert(picked.end(), idx.begin(), idx.end());
  }
  return picked;
}

}  // namespace detail

/// Positives: the target's first train_pos events train, the next test_pos
/// test. Negatives: train from pool A, test from pool B (disjoint users).
inline FewShotSplit build_split(const Dataset& ds, const std::map<std::string, std::vector<std::size_t>>& by_user,
                                const std::vector<std::string>& eval_users, const std::string& target,
                                PoolRule rule, const SplitSizes& sizes, std::uint64_t seed) {
  const auto it = by_user.find(target);
  const std::size_t needed = sizes.train_pos + sizes.test_pos;
  const std::size_t have = it == by_user.end() ? 0 : it->second.size();
  if (have < needed)
    throw ConfigError("target user " + target + " has " + std::to_string(have) + " samples, needs >= " +
                      std::to_string(needed));
  FewShotSplit split;
  split.target_user = target;
  const auto& own = it->second;
  split.train_pos.assign(own.begin(), own.begin() + static_cast<std::ptrdiff_t>(sizes.train_pos));
  split.test_pos.assign(own.begin() + static_cast<std::ptrdiff_t>(sizes.train_pos),
                        own.begin() + static_cast<std::ptrdiff_t>(needed));
  std::tie(split.pool_a, split.pool_b) = negative_pools(ds, eval_users, target, rule);
  Rng rng(seed);
  split.train_neg = detail::draw_negatives(by_user, split.pool_a, sizes.train_neg, rng, "A");
  split.test_neg = detail::draw_negatives(by_user, split.pool_b, sizes.test_neg, rng, "B");
  return split;
}

inline FewShotSplit build_split(const Dataset& ds, const std::vector<std::string>& eval_users,
                                const std::string& target, PoolRule rule, const SplitSizes& sizes,
                                std::uint64_t seed) {
  return build_split(ds, ds.index_by_user(), eval_users, target, rule, sizes, seed);
}

/// Result of one (split, training set, kernel, C) evaluation.
struct CellResult {
  double accuracy = 0.0;
  double far = 0.0;
  double frr = 0.0;
  bool within_target = false;
  /// RBF width actually used; 0 for the linear kernel.
  double gamma = 0.0;
  std::size_t n_train_pos = 0;
  std::size_t n_train_neg = 0;
  /// Test decision scores before bias calibration.
  std::vector<double> raw_scores;
  /// Threshold on raw_scores chosen by calibration.
  double threshold = 0.0;
};

/// Test-side data and original-training embeddings of one split, computed once
/// and shared by every cell of that user.
struct UserContext {
  const Dataset* dataset = nullptr;
  const FewShotSplit* split = nullptr;
  FeatureMatrix train_pos;
  FeatureMatrix train_neg;
  FeatureMatrix test;
  std::vector<int> test_labels;
};

inline UserContext prepare_user(const Dataset& ds, const FewShotSplit& split, const EmbeddingProvider& provider) {
  UserContext ctx;
  ctx.dataset = &ds;
  ctx.split = &split;
  auto embed = [&](const std::vector<std::size_t>& idx, FeatureMatrix& out) {
    out.reserve(idx.size());
    for (std::size_t i : idx) out.push_back(provider.embed(ds.samples[i]).vector);
  };
  embed(split.train_pos, ctx.train_pos);
  embed(split.train_neg, ctx.train_neg);
  embed(split.test_pos, ctx.test);
  embed(split.test_neg, ctx.test);
  ctx.test_labels.assign(split.test_pos.size(), 1);
  ctx.test_labels.insert(ctx.test_labels.end(), split.test_neg.size(), -1);
  return ctx;
}

/// Appends embeddings of the augmented copies of one class. Only training
/// signals are ever passed through the plan.
inline void augment_class(const Dataset& ds, const std::vector<std::size_t>& idx, const AugmentationPlan& plan,
                          const EmbeddingProvider& provider, FeatureMatrix& features) {
  std::vector<Signal> originals;
  originals.reserve(idx.size());
  for (std::size_t i : idx) originals.push_back(ds.samples[i].signal);
  const auto augmented = apply_plan(originals, plan);
  for (std::size_t k = originals.size(); k < augmented.size(); ++k)
    features.push_back(provider.embed(augmented[k]).vector);
}

struct TrainingSet {
  FeatureMatrix features;
  std::vector<int> labels;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
};

inline constexpr std::uint64_t kPositiveStream = 0x706f73;
inline constexpr std::uint64_t kNegativeStream = 0x6e6567;

/// Original training embeddings plus, when a plan is given, the embeddings of
/// the augmented copies. Positives and negatives draw from separate streams.
inline TrainingSet build_training_set(const UserContext& ctx, const std::optional<AugmentationPlan>& plan,
                                      const EmbeddingProvider& provider) {
  FeatureMatrix pos = ctx.train_pos;
  FeatureMatrix neg = ctx.train_neg;
  if (plan) {
    if (provider.is_table())
      throw ConfigError("augmentation requires a signal-domain embedding provider; '" + provider.name() +
                        "' only holds precomputed vectors");
    AugmentationPlan p = *plan;
    p.base_seed = mix_seed(plan->base_seed, 0, kPositiveStream);
    augment_class(*ctx.dataset, ctx.split->train_pos, p, provider, pos);
    p.base_seed = mix_seed(plan->base_seed, 0, kNegativeStream);
    augment_class(*ctx.dataset, ctx.split->train_neg, p, provider, neg);
  }
  TrainingSet ts;
  ts.n_pos = pos.size();
  ts.n_neg = neg.size();
  ts.features = std::move(pos);
  ts.features.insert(ts.features.end(), std::make_move_iterator(neg.begin()), std::make_move_iterator(neg.end()));
  ts.labels.assign(ts.n_pos, 1);
  ts.labels.insert(ts.labels.end(), ts.n_neg, -1);
  return ts;
}

/// Kernel/C grid plus solver settings shared by every cell.
struct SvmGrid {
  std::vector<Kernel> kernels{Kernel::Linear, Kernel::Rbf};
  std::vector<double> Cs{1.0, 10.0, 100.0};
  /// Fixed RBF width; empty means 1 / (D * var) of the standardized training features.
  std::optional<double> gamma;
  double tolerance = 1e-6;
  std::size_t max_passes = 10000;

  void validate() const {
    if (kernels.empty() || Cs.empty()) throw ConfigError("SVM grid must list at least one kernel and one C");
    for (double c : Cs)
      if (!(c > 0.0)) throw ConfigError("SVM grid: C values must be > 0");
    if (gamma && !(*gamma > 0.0)) throw ConfigError("SVM grid: gamma must be > 0");
    if (!(tolerance > 0.0) || max_passes == 0) throw ConfigError("SVM grid: bad solver settings");
  }
};

/// Standardizes, trains every (kernel, C) of the grid on one training set and
/// evaluates on the untouched test features. Results are ordered kernel-major.
inline std::vector<CellResult> evaluate_grid(const TrainingSet& ts, const UserContext& ctx, const SvmGrid& grid,
                                             CalibrationMode mode) {
  const Standardizer standardizer = Standardizer::fit(ts.features);
  const FeatureMatrix train_x = standardizer.apply(ts.features);
  const FeatureMatrix test_x = standardizer.apply(ctx.test);
  const double auto_gamma = grid.gamma ? *grid.gamma : default_gamma(train_x);

  std::vector<CellResult> results;
  results.reserve(grid.kernels.size() * grid.Cs.size());
  for (Kernel k : grid.kernels) {
    const double gamma = k == Kernel::Rbf ? auto_gamma : 0.0;
    const GramMatrix gram = compute_gram(train_x, k, gamma);
    for (double C : grid.Cs) {
      SvmConfig cfg{k, C, gamma, grid.tolerance, grid.max_passes};
      const SvmModel model = train_gram(gram, train_x, ts.labels, cfg);
      CellResult r;
      r.gamma = gamma;
      r.n_train_pos = ts.n_pos;
      r.n_train_neg = ts.n_neg;
      r.raw_scores = decision_scores(model, test_x);
      if (mode == CalibrationMode::Test) {
        r.threshold = balanced_threshold(r.raw_scores, ctx.test_labels);
      } else {
        r.threshold = balanced_threshold(decision_scores(model, train_x), ts.labels);
      }
      const Rates rates = compute_rates(r.raw_scores, ctx.test_labels, r.threshold);
      r.accuracy = rates.accuracy;
      r.far = rates.rates.far;
      r.frr = rates.rates.frr;
      r.within_target = std::abs(r.far - r.frr) < 0.01;
      results.push_back(std::move(r));
    }
  }
  return results;
}

/// One (split, plan, provider, SVM config, calibration) evaluation.
inline CellResult run_cell(const Dataset& ds, const FewShotSplit& split, const std::optional<AugmentationPlan>& plan,
                           const EmbeddingProvider& provider, const SvmConfig& svm, CalibrationMode mode) {
  if (plan && provider.is_table())
    throw ConfigError("augmentation requires a signal-domain embedding provider");
  const UserContext ctx = prepare_user(ds, split, provider);
  const TrainingSet ts = build_training_set(ctx, plan, provider);
  SvmGrid grid;
  grid.kernels = {svm.kernel};
  grid.Cs = {svm.C};
  if (svm.kernel == Kernel::Rbf && svm.gamma > 0.0) grid.gamma = svm.gamma;
  grid.tolerance = svm.tolerance;
  grid.max_passes = svm.max_passes;
  return evaluate_grid(ts, ctx, grid, mode).front();
}

// ---------------------------------------------------------------------------
// Experiment runner

enum class Family { None, Noise, Temporal, Intensity, Warp, Combined };

inline std::string_view family_label(Family f) {
  switch (f) {
    case Family::None: return "No augmentation";
    case Family::Noise: return "Random noise";
    case Family::Temporal: return "Temporal scaling";
    case Family::Intensity: return "Intensity scaling";
    case Family::Warp: return "Warping";
    case Family::Combined: return "Combined";
  }
  return "?";
}

inline std::string_view family_key(Family f) {
  switch (f) {
    case Family::None: return "none";
    case Family::Noise: return "noise";
    case Family::Temporal: return "temporal";
    case Family::Intensity: return "intensity";
    case Family::Warp: return "warp";
    case Family::Combined: return "combined";
  }
  return "?";
}

/// One component of a combined plan. An empty value means "use the best
/// parameter found by the independent sweep of that family".
struct ComboEntry {
  Family family = Family::Noise;
  std::optional<double> value;
  std::optional<WarpDirection> direction;
};

struct CombinedPlanSpec {
  std::string name;
  std::vector<ComboEntry> entries;
  double ratio = 1.0;
};

struct IndependentSweep {
  std::vector<double> sigmas;
  double mu = 0.0;
  std::vector<double> f_ts;
  std::vector<double> f_is;
  std::vector<WarpDirection> warps;
  std::vector<double> ratios;
};

struct ExperimentConfig {
  std::string provider = "statistical";
  SvmGrid grid;
  CalibrationMode calibration = CalibrationMode::Test;
  /// Empty means the second half of the dataset's users.
  std::vector<std::string> eval_users;
  PoolRule pools = PoolRule::EvalAlternate;
  SplitSizes split;
  IndependentSweep sweep;
  std::vector<CombinedPlanSpec> combined;
  std::uint64_t seed = 0;
  bool exploratory = false;
  std::size_t threads = 1;
};

inline std::vector<std::string> resolve_eval_users(const Dataset& ds, const ExperimentConfig& cfg) {
  if (!cfg.eval_users.empty()) {
    std::set<std::string> known(ds.users.begin(), ds.users.end());
    for (const auto& u : cfg.eval_users)
      if (!known.count(u)) throw ConfigError("eval user " + u + " is not in the dataset");
    return cfg.eval_users;
  }
  return {ds.users.begin() + static_cast<std::ptrdiff_t>(ds.users.size() / 2), ds.users.end()};
}

inline void validate_config(const ExperimentConfig& cfg) {
  cfg.grid.validate();
  const auto check_ratio = [&](double r) {
    if (cfg.exploratory ? !(r > 0.0 && r <= 1.0) : !(r == 1.0 || r == 0.5))
      throw ConfigError("augmentation ratio " + std::to_string(r) +
                        (cfg.exploratory ? " must be in (0, 1]" : " must be 1.0 or 0.5"));
  };
  const auto& s = cfg.sweep;
  if (!(s.sigmas.empty() && s.f_ts.empty() && s.f_is.empty() && s.warps.empty()) && s.ratios.empty())
    throw ConfigError("augmentation grids given but no ratios");
  for (double r : s.ratios) check_ratio(r);
  for (double v : s.sigmas)
    if (!(v >= 0.0)) throw ConfigError("sigma values must be >= 0");
  for (double v : s.f_ts)
    if (!(v > 0.0)) throw ConfigError("f_T values must be > 0");
  for (double v : s.f_is)
    if (!(v > 0.0)) throw ConfigError("f_I values must be > 0");
  for (const auto& c : cfg.combined) {
    if (c.entries.empty()) throw ConfigError("combined plan '" + c.name + "' has no entries");
    check_ratio(c.ratio);
  }
  if (cfg.threads == 0) throw ConfigError("threads must be >= 1");
  if (!cfg.exploratory && !(cfg.split == SplitSizes{}))
    throw ConfigError("standard mode requires 20/100 training and 100/100 test samples");
}

struct CellKey {
  Family family = Family::None;
  /// Human-readable parameter, e.g. "sigma=0.025", "L->R", or the combined plan's name.
  std::string value;
  /// 0 for the baseline.
  double ratio = 0.0;
  Kernel kernel = Kernel::Linear;
  double C = 1.0;
};

struct UserMetrics {
  std::string user;
  double accuracy = 0.0;
  double far = 0.0;
  double frr = 0.0;
  bool within_target = false;
  double gamma = 0.0;
};

struct CellReport {
  CellKey key;
  /// Numeric parameter (sigma, f_T, f_I); NaN where not applicable.
  double param = std::numeric_limits<double>::quiet_NaN();
  std::vector<UserMetrics> per_user;
  double mean_accuracy = 0.0;
  double mean_far = 0.0;
  double mean_frr = 0.0;
  double mean_gamma = 0.0;
  std::size_t n_train_pos = 0;
  std::size_t n_train_neg = 0;
  /// Resolved components of a combined plan.
  std::string description;
  /// Best cell of its (family, ratio) group, or of its combined plan.
  bool best = false;
};

struct EvalReport {
  std::uint64_t seed = 0;
  std::string provider;
  CalibrationMode calibration = CalibrationMode::Test;
  std::optional<double> gamma;
  std::vector<std::string> eval_users;
  std::vector<CellReport> cells;

  const CellReport* best_baseline() const {
    for (const auto& c : cells)
      if (c.key.family == Family::None && c.best) return &c;
    return nullptr;
  }
};

namespace detail {

/// One training-set variant: the baseline, one independent parameter at one
/// ratio, or one combined plan.
struct Setting {
  Family family = Family::None;
  std::string value;
  double param = std::numeric_limits<double>::quiet_NaN();
  double ratio = 0.0;
  std::optional<AugmentationPlan> plan;
  std::string description;
};

inline std::string format_param(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

inline std::string warp_label(WarpDirection d) { return d == WarpDirection::LeftToRight ? "L->R" : "L<-R"; }

inline std::vector<Setting> independent_settings(const ExperimentConfig& cfg) {
  std::vector<Setting> out;
  out.push_back({Family::None, "-", std::numeric_limits<double>::quiet_NaN(), 0.0, std::nullopt, {}});
  const auto& s = cfg.sweep;
  auto add = [&](Family f, std::string value, double param, const AugmentationSpec& spec) {
    for (double r : s.ratios) {
      AugmentationPlan plan;
      plan.specs = {spec};
      plan.ratio = r;
      plan.exploratory = cfg.exploratory;
      out.push_back({f, value, param, r, plan, {}});
    }
  };
  for (double v : s.sigmas) add(Family::Noise, "sigma=" + format_param(v), v, AugmentationSpec::noise(v, s.mu));
  for (double v : s.f_ts) add(Family::Temporal, "f_T=" + format_param(v), v, AugmentationSpec::temporal(v));
  for (double v : s.f_is) add(Family::Intensity, "f_I=" + format_param(v), v, AugmentationSpec::intensity(v));
  for (auto d : s.warps)
    add(Family::Warp, warp_label(d), std::numeric_limits<double>::quiet_NaN(), AugmentationSpec::warp(d));
  return out;
}

inline bool better(const CellReport& a, const CellReport& b) {
  if (a.mean_accuracy != b.mean_accuracy) return a.mean_accuracy > b.mean_accuracy;
  const double da = std::abs(a.mean_far - a.mean_frr), db = std::abs(b.mean_far - b.mean_frr);
  if (da != db) return da < db;
  return a.key.C < b.key.C;
}

inline void mark_best(std::vector<CellReport>& cells) {
  std::map<std::tuple<int, double, std::string>, std::size_t> best;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& k = cells[i].key;
    const std::string combo = k.family == Family::Combined ? k.value : std::string();
    const auto group = std::make_tuple(static_cast<int>(k.family), k.ratio, combo);
    const auto it = best.find(group);
    if (it == best.end() || better(cells[i], cells[it->second])) best[group] = i;
  }
  for (auto& c : cells) c.best = false;
  for (const auto& [g, i] : best) cells[i].best = true;
}

/// Runs `fn(u)` for u in [0, count) on up to `threads` workers. The first
/// exception thrown is rethrown on the calling thread.
template <class Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn&& fn) {
  if (threads <= 1 || count <= 1) {
    for (std::size_t u = 0; u < count; ++u) fn(u);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> workers;
  for (std::size_t t = 0; t < std::min(threads, count); ++t) {
    workers.emplace_back([&] {
      while (true) {
        const std::size_t u = next.fetch_add(1);
        if (u >= count) return;
        try {
          fn(u);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next = count;
          return;
        }
      }
    });
  }
  for (auto& w : workers) w.join();
  if (error) std::rethrow_exception(error);
}

/// Re-throws the active exception with the failing cell's coordinates
/// prefixed, keeping its category.
[[noreturn]] inline void rethrow_in_cell(const Setting& s, const std::string& user) {
  const std::string where = "cell (" + std::string(family_key(s.family)) + ", " + s.value + ", ratio " +
                            format_param(s.ratio) + ", user " + user + "): ";
  try {
    throw;
  } catch (const ConvergenceError& e) {
    throw ConvergenceError(where + e.what(), e.gap());
  } catch (const ConfigError& e) {
    throw ConfigError(where + e.what());
  } catch (const NotFound& e) {
    throw NotFound(where + e.what());
  } catch (const InvalidArgument& e) {
    throw InvalidArgument(where + e.what());
  } catch (const std::exception& e) {
    throw std::runtime_error(where + e.what());
  }
}

}  // namespace detail

/// The split of every evaluation user, as used by run_experiment.
inline std::vector<FewShotSplit> build_splits(const Dataset& ds, const std::vector<std::string>& eval_users,
                                              const ExperimentConfig& cfg) {
  const auto by_user = ds.index_by_user();
  std::vector<FewShotSplit> splits(eval_users.size());
  for (std::size_t u = 0; u < eval_users.size(); ++u)
    splits[u] = build_split(ds, by_user, eval_users, eval_users[u], cfg.pools, cfg.split,
                            mix_seed(cfg.seed, u, 0x73706c6974));
  return splits;
}

/// Every cell of the grid for every evaluation user, aggregated into
/// per-cell means. Independent settings run first; combined plans run after
/// their "best" entries are resolved from the independent results.
inline EvalReport run_experiment(const Dataset& ds, const EmbeddingProvider& provider, const ExperimentConfig& cfg) {
  validate_config(cfg);
  ds.validate();
  const auto eval_users = resolve_eval_users(ds, cfg);
  if (eval_users.empty()) throw ConfigError("no evaluation users");
  const bool augmenting = !cfg.sweep.ratios.empty() || !cfg.combined.empty();
  if (augmenting && provider.is_table())
    throw ConfigError("augmentation experiments require the statistical provider; table embeddings have no "
                      "vectors for augmented signals");

  const std::vector<FewShotSplit> splits = build_splits(ds, eval_users, cfg);

  EvalReport report;
  report.seed = cfg.seed;
  report.provider = provider.name();
  report.calibration = cfg.calibration;
  report.gamma = cfg.grid.gamma;
  report.eval_users = eval_users;

  // results[setting][user][grid cell]
  auto run_settings = [&](const std::vector<detail::Setting>& settings) {
    std::vector<std::vector<std::vector<CellResult>>> results(
        settings.size(), std::vector<std::vector<CellResult>>(eval_users.size()));
    detail::parallel_for(eval_users.size(), cfg.threads, [&](std::size_t u) {
      const UserContext ctx = prepare_user(ds, splits[u], provider);
      for (std::size_t s = 0; s < settings.size(); ++s) {
        try {
          std::optional<AugmentationPlan> plan = settings[s].plan;
          if (plan) plan->base_seed = mix_seed(cfg.seed, u, 0x61756700);
          const TrainingSet ts = build_training_set(ctx, plan, provider);
          results[s][u] = evaluate_grid(ts, ctx, cfg.grid, cfg.calibration);
          for (auto& r : results[s][u]) r.raw_scores.clear();
        } catch (...) {
          detail::rethrow_in_cell(settings[s], eval_users[u]);
        }
      }
    });
    for (std::size_t s = 0; s < settings.size(); ++s) {
      std::size_t g = 0;
      for (Kernel k : cfg.grid.kernels) {
        for (double C : cfg.grid.Cs) {
          CellReport cell;
          cell.key = {settings[s].family, settings[s].value, settings[s].ratio, k, C};
          cell.param = settings[s].param;
          cell.description = settings[s].description;
          const auto n = static_cast<double>(eval_users.size());
          for (std::size_t u = 0; u < eval_users.size(); ++u) {
            const auto& r = results[s][u][g];
            cell.per_user.push_back({eval_users[u], r.accuracy, r.far, r.frr, r.within_target, r.gamma});
            cell.mean_accuracy += r.accuracy;
            cell.mean_far += r.far;
            cell.mean_frr += r.frr;
            cell.mean_gamma += r.gamma;
            cell.n_train_pos = r.n_train_pos;
            cell.n_train_neg = r.n_train_neg;
          }
          cell.mean_accuracy /= n;
          cell.mean_far /= n;
          cell.mean_frr /= n;
          cell.mean_gamma /= n;
          report.cells.push_back(std::move(cell));
          ++g;
        }
      }
    }
  };

  run_settings(detail::independent_settings(cfg));
  detail::mark_best(report.cells);

  if (!cfg.combined.empty()) {
    std::vector<detail::Setting> combos;
    for (const auto& c : cfg.combined) {
      AugmentationPlan plan;
      plan.ratio = c.ratio;
      plan.exploratory = cfg.exploratory;
      for (const auto& e : c.entries) {
        const CellReport* best = nullptr;
        const bool needs_best = e.family == Family::Warp ? !e.direction : !e.value;
        if (needs_best) {
          for (const auto& cell : report.cells)
            if (cell.key.family == e.family && cell.key.ratio == c.ratio && cell.best) best = &cell;
          if (!best)
            throw ConfigError("combined plan '" + c.name + "': no swept " + std::string(family_key(e.family)) +
                              " cells at ratio " + detail::format_param(c.ratio) + " to take the best value from");
        }
        switch (e.family) {
          case Family::Noise:
            plan.specs.push_back(AugmentationSpec::noise(needs_best ? best->param : *e.value, cfg.sweep.mu));
            break;
          case Family::Temporal:
            plan.specs.push_back(AugmentationSpec::temporal(needs_best ? best->param : *e.value));
            break;
          case Family::Intensity:
            plan.specs.push_back(AugmentationSpec::intensity(needs_best ? best->param : *e.value));
            break;
          case Family::Warp: {
            WarpDirection d = e.direction.value_or(WarpDirection::LeftToRight);
            if (needs_best) d = best->key.value == "L->R" ? WarpDirection::LeftToRight : WarpDirection::RightToLeft;
            plan.specs.push_back(AugmentationSpec::warp(d));
            break;
          }
          default:
            throw ConfigError("combined plan '" + c.name + "': unsupported entry");
        }
      }
      std::string description;
      for (const auto& spec : plan.specs) {
        if (!description.empty()) description += "+";
        description += std::string(method_name(spec.method));
        if (spec.method == Method::RandomNoise) description += "(sigma=" + detail::format_param(spec.sigma) + ")";
        if (spec.method == Method::TemporalScaling) description += "(f_T=" + detail::format_param(spec.f_t) + ")";
        if (spec.method == Method::IntensityScaling) description += "(f_I=" + detail::format_param(spec.f_i) + ")";
      }
      combos.push_back({Family::Combined, c.name, std::numeric_limits<double>::quiet_NaN(), c.ratio, plan,
                        description});
    }
    run_settings(combos);
    detail::mark_best(report.cells);
  }
  return report;
}

}  // namespace motionaug
