#pragma once

#include <Eigen/Dense>
#include <array>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "itemrec/data_model.hpp"
#include "itemrec/featurization.hpp"
#include "json.hpp"

namespace itemrec {

enum class Measure { OnNextPurchaseDate = 0, NextPurchase = 1, WithinWindow = 2 };

inline constexpr std::array<Measure, 3> kMeasures{Measure::OnNextPurchaseDate, Measure::NextPurchase,
                                                  Measure::WithinWindow};

/// "isOnNextPurchaseDate", "isNextPurchase", "isWithinWindow".
const char* measure_name(Measure m);
/// "predictedMax", "withinTop2", "withinTop3", "withinTop<k>".
std::string top_k_name(int k);

/// Players with no purchase in the window are either dropped from the
/// report (counted as excluded) or scored as misses on every measure.
enum class NoPurchasePolicy { Exclude, CountAsMiss };

struct EvalConfig {
  int cutoff = 0;
  int window = 50;
  std::vector<int> top_ks{1, 2, 3};
  NoPurchasePolicy no_purchase = NoPurchasePolicy::Exclude;
};

/// k item indices by descending probability, ties to the lower index.
/// Throws Error unless 1 <= k <= probabilities.size().
std::vector<std::size_t> top_k(std::span<const double> probabilities, int k);

/// hits[measure][j] for k = top_ks[j].
using HitMatrix = std::array<std::vector<bool>, 3>;

/// Hits of one prediction made at config.cutoff against purchases in
/// (cutoff, cutoff + window]; nullopt when the player is excluded. The very
/// next purchase at day resolution is the whole set bought on that day.
std::optional<HitMatrix> score_player(const PlayerTimeSeries& series, std::span<const double> prediction,
                                      std::size_t n_items, const EvalConfig& config);

struct EvaluationReport {
  std::string model;
  int cutoff = 0;
  int window = 0;
  std::vector<int> top_ks;
  std::array<std::vector<std::size_t>, 3> hits;
  std::size_t evaluated = 0;
  std::size_t excluded = 0;

  double accuracy(Measure m, std::size_t k_index) const;
  /// Table-style aligned text, one row per measure.
  std::string to_text() const;
  nlohmann::json to_json() const;
  static EvaluationReport from_json(const nlohmann::json& j);
};

using Predictor = std::function<Eigen::VectorXd(const FeatureVector&)>;

/// Featurizes each player at config.cutoff, predicts, scores and aggregates.
/// Players whose history starts after the cutoff are excluded. Throws Error
/// when no player can be evaluated.
EvaluationReport evaluate(const Predictor& predict, std::span<const PlayerTimeSeries> players,
                          const Featurizer& featurizer, const EvalConfig& config, std::string model_name = {},
                          unsigned threads = 1);

/// Predicts the item frequencies of a set of training labels for everyone.
class PopularityBaseline {
 public:
  explicit PopularityBaseline(const Eigen::MatrixXd& labels);
  Eigen::VectorXd operator()(const FeatureVector&) const { return frequencies_; }
  const Eigen::VectorXd& frequencies() const { return frequencies_; }

 private:
  Eigen::VectorXd frequencies_;
};

}  // namespace itemrec
