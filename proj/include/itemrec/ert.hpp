#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "itemrec/featurization.hpp"
#include "itemrec/rng.hpp"
#include "itemrec/sampling.hpp"
#include "json.hpp"

namespace itemrec {

/// Extremely-randomized-trees hyperparameters. Zero in `k_features` means
/// ceil(sqrt(F)); zero in `max_depth` means unbounded.
struct ErtParams {
  int trees_per_iteration = 20;
  int iterations = 30;
  int k_features = 0;
  int min_samples_leaf = 5;
  int max_depth = 0;
  int batch_users = 10000;
  std::uint64_t seed = 0;

  bool operator==(const ErtParams&) const = default;
};

/// Candidate features examined per node for F input features.
int resolved_k_features(const ErtParams& params, Eigen::Index n_features);

/// Outcome of one node: a (feature, threshold) test, or a leaf.
/// Samples with x[feature] < threshold go left.
struct SplitDecision {
  bool leaf = true;
  int feature = -1;
  double threshold = 0;
  double gain = 0;  ///< mean Gini impurity decrease over the output columns
};

/// Mean over label columns of the binary Gini impurity 2p(1-p), computed
/// from per-column positive counts.
double mean_gini(const Eigen::Ref<const Eigen::VectorXd>& positives, double n);

/// Chooses the split of a node holding `rows` of (features, labels).
///
/// Candidate features are drawn without replacement from a random
/// permutation of all columns, skipping columns that are constant on the
/// node, until k non-constant ones are found. Each gets a single threshold
/// drawn uniformly in (min, max); the candidate with the largest Gini
/// decrease wins, ties going to the earlier draw.
SplitDecision split_node(const Eigen::MatrixXd& features, const Eigen::MatrixXd& labels,
                         std::span<const Eigen::Index> rows, int depth, Rng& rng, const ErtParams& params);

/// Binary tree in flat storage; node 0 is the root, children are appended
/// depth-first (left subtree before right).
class DecisionTree {
 public:
  struct Node {
    int feature = -1;  ///< < 0 marks a leaf
    double threshold = 0;
    int left = -1;     ///< leaf index when this is a leaf
    int right = -1;

    bool is_leaf() const { return feature < 0; }
    bool operator==(const Node&) const = default;
  };

  DecisionTree() = default;
  DecisionTree(std::vector<Node> nodes, std::vector<double> leaf_values, int outputs);

  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<double>& leaf_values() const { return leaf_values_; }
  int outputs() const { return outputs_; }
  std::size_t leaf_count() const { return outputs_ == 0 ? 0 : leaf_values_.size() / static_cast<std::size_t>(outputs_); }

  /// Label frequencies stored at leaf `index`.
  std::span<const double> leaf(std::size_t index) const;

  /// Leaf reached by routing x from the root.
  std::span<const double> route(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  bool operator==(const DecisionTree&) const = default;

 private:
  std::vector<Node> nodes_;
  std::vector<double> leaf_values_;
  int outputs_ = 0;
};

/// Grows one tree on all rows of (features, labels). Leaves store the mean
/// label vector of their samples. Deterministic given the RNG state.
DecisionTree build_tree(const Eigen::MatrixXd& features, const Eigen::MatrixXd& labels, Rng& rng,
                        const ErtParams& params);

/// Ensemble of trees whose prediction is the mean of the reached leaves.
class ErtEnsemble {
 public:
  ErtEnsemble(ErtParams params, SamplerConfig sampler, FeatureConfig features, ItemCatalog catalog);

  const ErtParams& params() const { return params_; }
  const SamplerConfig& sampler() const { return sampler_; }
  const Featurizer& featurizer() const { return featurizer_; }
  const ItemCatalog& catalog() const { return featurizer_.catalog(); }
  const std::vector<DecisionTree>& trees() const { return trees_; }
  std::size_t increments() const { return increments_; }

  void append(DecisionTree tree);
  void mark_increment() { ++increments_; }

  /// Throws MismatchError if the vector's layout differs from the model's.
  Eigen::VectorXd predict(const FeatureVector& features) const;
  /// Raw row in the model's layout; no layout check.
  Eigen::VectorXd predict_row(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  nlohmann::json to_json() const;
  static ErtEnsemble from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static ErtEnsemble load(const std::filesystem::path& path);

 private:
  ErtParams params_;
  SamplerConfig sampler_;
  Featurizer featurizer_;
  std::vector<DecisionTree> trees_;
  std::size_t increments_ = 0;
};

/// Adds `params.trees_per_iteration` trees grown on samples freshly drawn
/// from players[batch]. Tree g (global index) uses its own RNG stream, so
/// trees may be built concurrently without changing the result. Throws Error
/// when the batch yields no training sample.
ErtEnsemble train_increment(ErtEnsemble ensemble, std::span<const PlayerTimeSeries> players,
                            std::span<const std::size_t> batch, unsigned threads = 1);

/// Runs `params.iterations` increments over the minibatch schedule, resuming
/// from `ensemble`'s increment count.
ErtEnsemble train_ert(ErtEnsemble ensemble, std::span<const PlayerTimeSeries> players, unsigned threads = 1,
                      const std::function<void(std::size_t, std::size_t)>& progress = {});

}  // namespace itemrec
