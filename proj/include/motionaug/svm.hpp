#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "motionaug/error.hpp"

namespace motionaug {

using FeatureMatrix = std::vector<std::vector<double>>;

enum class Kernel { Linear, Rbf };

inline std::string_view kernel_name(Kernel k) { return k == Kernel::Linear ? "Linear" : "RBF"; }

inline std::optional<Kernel> parse_kernel(std::string_view s) {
  if (s == "linear" || s == "Linear") return Kernel::Linear;
  if (s == "rbf" || s == "RBF") return Kernel::Rbf;
  return std::nullopt;
}

struct SvmConfig {
  Kernel kernel = Kernel::Linear;
  double C = 1.0;
  /// RBF width; must be > 0 when kernel is RBF.
  double gamma = 0.0;
  /// Stop when the maximal KKT violation m(a) - M(a) drops below this.
  double tolerance = 1e-6;
  /// Iteration cap, in passes: one pass is n pair updates.
  std::size_t max_passes = 10000;

  void validate() const {
    if (!(C > 0.0) || !std::isfinite(C)) throw InvalidArgument("SvmConfig: C must be > 0");
    if (kernel == Kernel::Rbf && (!(gamma > 0.0) || !std::isfinite(gamma)))
      throw InvalidArgument("SvmConfig: gamma must be > 0 for the RBF kernel");
    if (!(tolerance > 0.0)) throw InvalidArgument("SvmConfig: tolerance must be > 0");
    if (max_passes == 0) throw InvalidArgument("SvmConfig: max_passes must be > 0");
  }
};

inline double kernel_value(Kernel k, double gamma, std::span<const double> a, std::span<const double> b) {
  if (k == Kernel::Linear) return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
  double d2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    d2 += d * d;
  }
  return std::exp(-gamma * d2);
}

/// Dense symmetric Gram matrix, row-major.
struct GramMatrix {
  std::size_t n = 0;
  std::vector<double> values;

  double operator()(std::size_t i, std::size_t j) const { return values[i * n + j]; }
  std::span<const double> row(std::size_t i) const { return {values.data() + i * n, n}; }
};

inline GramMatrix compute_gram(const FeatureMatrix& x, Kernel k, double gamma) {
  GramMatrix g;
  g.n = x.size();
  g.values.resize(g.n * g.n);
  for (std::size_t i = 0; i < g.n; ++i)
    for (std::size_t j = i; j < g.n; ++j)
      g.values[i * g.n + j] = g.values[j * g.n + i] = kernel_value(k, gamma, x[i], x[j]);
  return g;
}

struct SvmModel {
  Kernel kernel = Kernel::Linear;
  double C = 1.0;
  double gamma = 0.0;
  FeatureMatrix support_vectors;
  /// alpha_i * y_i for each support vector.
  std::vector<double> dual_coefs;
  double bias = 0.0;
  /// Dual objective in maximisation form: sum(alpha) - 1/2 alpha' Q alpha.
  double dual_objective = 0.0;
  std::size_t iterations = 0;
  double kkt_gap = 0.0;

  std::size_t dim() const { return support_vectors.empty() ? 0 : support_vectors.front().size(); }

  double decision(std::span<const double> x) const {
    double s = bias;
    for (std::size_t i = 0; i < support_vectors.size(); ++i)
      s += dual_coefs[i] * kernel_value(kernel, gamma, support_vectors[i], x);
    return s;
  }
};

namespace detail {

inline void check_labels(std::span<const int> labels, std::string_view who) {
  bool pos = false, neg = false;
  for (int y : labels) {
    if (y == 1) pos = true;
    else if (y == -1) neg = true;
    else throw InvalidArgument(std::string(who) + ": labels must be +1 or -1");
  }
  if (!pos || !neg) throw InvalidArgument(std::string(who) + ": both classes must be present");
}

inline void check_features(const FeatureMatrix& x, std::string_view who) {
  if (x.empty()) throw InvalidArgument(std::string(who) + ": no samples");
  const std::size_t d = x.front().size();
  if (d == 0) throw InvalidArgument(std::string(who) + ": zero-dimensional features");
  for (const auto& row : x) {
    if (row.size() != d) throw InvalidArgument(std::string(who) + ": inconsistent feature dimension");
    for (double v : row)
      if (!std::isfinite(v)) throw InvalidArgument(std::string(who) + ": non-finite feature");
  }
}

}  // namespace detail

/// Solves the soft-margin dual
///   min 1/2 a'Qa - e'a  s.t.  y'a = 0, 0 <= a_i <= C,  Q_ij = y_i y_j K_ij
/// by sequential minimal optimisation with second-order working-set
/// selection, on a precomputed Gram matrix. `features` are only copied into
/// the model as support vectors.
inline SvmModel train_gram(const GramMatrix& gram, const FeatureMatrix& features, std::span<const int> labels,
                           const SvmConfig& cfg) {
  cfg.validate();
  detail::check_labels(labels, "train");
  const std::size_t n = labels.size();
  if (gram.n != n || features.size() != n) throw InvalidArgument("train: size mismatch");

  constexpr double kTau = 1e-12;
  const double C = cfg.C;
  std::vector<double> alpha(n, 0.0);
  std::vector<double> grad(n, -1.0);
  std::vector<double> y(labels.begin(), labels.end());

  auto at_upper = [&](std::size_t t) { return alpha[t] >= C; };
  auto at_lower = [&](std::size_t t) { return alpha[t] <= 0.0; };

  const std::size_t max_iter = std::max<std::size_t>(cfg.max_passes * n, 1);
  std::size_t iter = 0;
  double gap = std::numeric_limits<double>::infinity();

  while (true) {
    // i maximises -y_t G_t over I_up.
    double gmax = -std::numeric_limits<double>::infinity();
    std::size_t i = n;
    for (std::size_t t = 0; t < n; ++t) {
      if (y[t] > 0 ? !at_upper(t) : !at_lower(t)) {
        const double v = -y[t] * grad[t];
        if (v >= gmax) {
          gmax = v;
          i = t;
        }
      }
    }
    // j minimises the second-order objective decrease over I_low.
    double gmax2 = -std::numeric_limits<double>::infinity();
    double best = std::numeric_limits<double>::infinity();
    std::size_t j = n;
    if (i < n) {
      const auto ki = gram.row(i);
      for (std::size_t t = 0; t < n; ++t) {
        if (y[t] > 0 ? at_lower(t) : at_upper(t)) continue;
        const double v = y[t] * grad[t];  // -(-y_t G_t)
        gmax2 = std::max(gmax2, v);
        const double diff = gmax + v;
        if (diff > 0.0) {
          double quad = ki[i] + gram(t, t) - 2.0 * ki[t];
          if (quad <= 0.0) quad = kTau;
          const double obj = -(diff * diff) / quad;
          if (obj <= best) {
            best = obj;
            j = t;
          }
        }
      }
    }
    gap = gmax + gmax2;
    if (i == n || j == n || gap < cfg.tolerance) break;
    if (iter >= max_iter) throw ConvergenceError("SVM solver did not converge", gap);
    ++iter;

    const double ai_old = alpha[i];
    const double aj_old = alpha[j];
    const double kij = gram(i, j);
    if (y[i] != y[j]) {
      double quad = gram(i, i) + gram(j, j) - 2.0 * kij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0.0) {
        if (alpha[j] < 0.0) {
          alpha[j] = 0.0;
          alpha[i] = diff;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = -diff;
      }
      if (diff > 0.0) {
        if (alpha[i] > C) {
          alpha[i] = C;
          alpha[j] = C - diff;
        }
      } else if (alpha[j] > C) {
        alpha[j] = C;
        alpha[i] = C + diff;
      }
    } else {
      double quad = gram(i, i) + gram(j, j) - 2.0 * kij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > C) {
        if (alpha[i] > C) {
          alpha[i] = C;
          alpha[j] = sum - C;
        }
        if (alpha[j] > C) {
          alpha[j] = C;
          alpha[i] = sum - C;
        }
      } else {
        if (alpha[j] < 0.0) {
          alpha[j] = 0.0;
          alpha[i] = sum;
        }
        if (alpha[i] < 0.0) {
          alpha[i] = 0.0;
          alpha[j] = sum;
        }
      }
    }

    const double di = (alpha[i] - ai_old) * y[i];
    const double dj = (alpha[j] - aj_old) * y[j];
    const auto ki = gram.row(i);
    const auto kj = gram.row(j);
    for (std::size_t t = 0; t < n; ++t) grad[t] += y[t] * (ki[t] * di + kj[t] * dj);
  }

  // Bias: average over free vectors, else midpoint of the feasible interval.
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double sum_free = 0.0;
  std::size_t n_free = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y[t] * grad[t];
    if (at_upper(t)) {
      if (y[t] < 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (at_lower(t)) {
      if (y[t] > 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  const double rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : (ub + lb) / 2.0;

  SvmModel model;
  model.kernel = cfg.kernel;
  model.C = C;
  model.gamma = cfg.kernel == Kernel::Rbf ? cfg.gamma : 0.0;
  model.bias = -rho;
  model.iterations = iter;
  model.kkt_gap = gap;
  double objective = 0.0;  // 1/2 a'Qa - e'a = 1/2 sum a_i (G_i - 1)
  for (std::size_t t = 0; t < n; ++t) {
    objective += alpha[t] * (grad[t] - 1.0);
    if (alpha[t] > 0.0) {
      model.support_vectors.push_back(features[t]);
      model.dual_coefs.push_back(alpha[t] * y[t]);
    }
  }
  model.dual_objective = -objective / 2.0;
  return model;
}

inline SvmModel train(const FeatureMatrix& features, std::span<const int> labels, const SvmConfig& cfg) {
  cfg.validate();
  detail::check_features(features, "train");
  if (features.size() != labels.size()) throw InvalidArgument("train: features/labels size mismatch");
  detail::check_labels(labels, "train");
  return train_gram(compute_gram(features, cfg.kernel, cfg.gamma), features, labels, cfg);
}

inline std::vector<double> decision_scores(const SvmModel& model, const FeatureMatrix& features) {
  std::vector<double> scores;
  scores.reserve(features.size());
  for (const auto& x : features) {
    if (x.size() != model.dim()) throw InvalidArgument("decision_scores: feature dimension mismatch");
    scores.push_back(model.decision(x));
  }
  return scores;
}

struct RatePair {
  double far = 0.0;
  double frr = 0.0;
};

struct Rates {
  RatePair rates;
  double accuracy = 0.0;
};

/// Accept iff score > threshold. FAR = accepted negatives / negatives,
/// FRR = rejected positives / positives.
inline Rates compute_rates(std::span<const double> scores, std::span<const int> labels, double threshold) {
  if (scores.empty()) throw InvalidArgument("compute_rates: empty input");
  if (scores.size() != labels.size()) throw InvalidArgument("compute_rates: size mismatch");
  detail::check_labels(labels, "compute_rates");
  std::size_t pos = 0, neg = 0, false_accept = 0, false_reject = 0;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    const bool accepted = scores[k] > threshold;
    if (labels[k] > 0) {
      ++pos;
      if (!accepted) ++false_reject;
    } else {
      ++neg;
      if (accepted) ++false_accept;
    }
  }
  Rates r;
  r.rates.far = static_cast<double>(false_accept) / static_cast<double>(neg);
  r.rates.frr = static_cast<double>(false_reject) / static_cast<double>(pos);
  r.accuracy = static_cast<double>(scores.size() - false_accept - false_reject) / static_cast<double>(scores.size());
  return r;
}

struct CalibrationResult {
  SvmModel model;
  /// Threshold on the uncalibrated scores that the new bias moves to zero.
  double threshold = 0.0;
  Rates rates;
  /// |FAR - FRR| < 0.01 was reached on the calibration set.
  bool within_target = false;
};

/// Threshold on `scores` minimising |FAR - FRR| over all midpoints between
/// consecutive distinct sorted scores (plus one below and one above the
/// range). Ties go to the smaller FAR.
inline double balanced_threshold(std::span<const double> scores, std::span<const int> labels) {
  if (scores.empty()) throw InvalidArgument("calibrate_bias: empty input");
  if (scores.size() != labels.size()) throw InvalidArgument("calibrate_bias: size mismatch");
  detail::check_labels(labels, "calibrate_bias");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  const auto n_pos = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
  const auto n_neg = static_cast<double>(labels.size()) - n_pos;

  // Sweep thresholds upward; everything at or below the threshold is rejected.
  double rejected_pos = 0.0, rejected_neg = 0.0;
  const double lowest = scores[order.front()];
  double best_threshold = lowest - std::max(1.0, std::abs(lowest));
  double best_diff = std::abs(1.0 - 0.0);  // FAR = 1, FRR = 0
  double best_far = 1.0;
  for (std::size_t k = 0; k < order.size();) {
    const double v = scores[order[k]];
    while (k < order.size() && scores[order[k]] == v) {
      (labels[order[k]] > 0 ? rejected_pos : rejected_neg) += 1.0;
      ++k;
    }
    const double far = (n_neg - rejected_neg) / n_neg;
    const double frr = rejected_pos / n_pos;
    const double threshold = k < order.size() ? v + (scores[order[k]] - v) / 2.0 : v + std::max(1.0, std::abs(v));
    const double diff = std::abs(far - frr);
    if (diff < best_diff || (diff == best_diff && far < best_far)) {
      best_diff = diff;
      best_far = far;
      best_threshold = threshold;
    }
  }
  return best_threshold;
}

/// Shifts only the bias so that FAR and FRR on the calibration set are as
/// close as possible.
inline CalibrationResult calibrate_bias(const SvmModel& model, const FeatureMatrix& calib_features,
                                        std::span<const int> calib_labels) {
  const auto scores = decision_scores(model, calib_features);
  const double threshold = balanced_threshold(scores, calib_labels);
  CalibrationResult result;
  result.model = model;
  result.model.bias = model.bias - threshold;
  result.threshold = threshold;
  result.rates = compute_rates(scores, calib_labels, threshold);
  result.within_target = std::abs(result.rates.rates.far - result.rates.rates.frr) < 0.01;
  return result;
}

/// Z-scores each feature dimension with statistics fitted on training data.
/// Dimensions with zero spread are only centred.
class Standardizer {
 public:
  static Standardizer fit(const FeatureMatrix& x) {
    detail::check_features(x, "Standardizer");
    const std::size_t d = x.front().size();
    const auto n = static_cast<double>(x.size());
    Standardizer s;
    s.mean_.assign(d, 0.0);
    s.scale_.assign(d, 0.0);
    for (const auto& row : x)
      for (std::size_t k = 0; k < d; ++k) s.mean_[k] += row[k];
    for (double& m : s.mean_) m /= n;
    for (const auto& row : x)
      for (std::size_t k = 0; k < d; ++k) s.scale_[k] += (row[k] - s.mean_[k]) * (row[k] - s.mean_[k]);
    for (double& v : s.scale_) {
      v = std::sqrt(v / n);
      if (!(v > 1e-12)) v = 1.0;
    }
    return s;
  }

  std::vector<double> apply(std::span<const double> row) const {
    if (row.size() != mean_.size()) throw InvalidArgument("Standardizer: dimension mismatch");
    std::vector<double> out(row.size());
    for (std::size_t k = 0; k < row.size(); ++k) out[k] = (row[k] - mean_[k]) / scale_[k];
    return out;
  }

  FeatureMatrix apply(const FeatureMatrix& x) const {
    FeatureMatrix out;
    out.reserve(x.size());
    for (const auto& row : x) out.push_back(apply(row));
    return out;
  }

 private:
  std::vector<double> mean_;
  std::vector<double> scale_;
};

/// gamma = 1 / (D * var(all entries of x)); falls back to 1 / D for constant input.
inline double default_gamma(const FeatureMatrix& x) {
  detail::check_features(x, "default_gamma");
  const double d = static_cast<double>(x.front().size());
  double sum = 0.0, count = 0.0;
  for (const auto& row : x)
    for (double v : row) {
      sum += v;
      count += 1.0;
    }
  const double mean = sum / count;
  double var = 0.0;
  for (const auto& row : x)
    for (double v : row) var += (v - mean) * (v - mean);
  var /= count;
  return var > 0.0 ? 1.0 / (d * var) : 1.0 / d;
}

}  // namespace motionaug
