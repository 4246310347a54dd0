#include "itemrec/ert.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "itemrec/error.hpp"
#include "itemrec/model_io.hpp"
#include "itemrec/parallel.hpp"

namespace itemrec {

using nlohmann::json;

int resolved_k_features(const ErtParams& params, Eigen::Index n_features) {
  if (params.k_features > 0) return params.k_features;
  return std::max(1, static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n_features)))));
}

double mean_gini(const Eigen::Ref<const Eigen::VectorXd>& positives, double n) {
  if (n <= 0 || positives.size() == 0) return 0.0;
  const Eigen::ArrayXd p = positives.array() / n;
  return (2.0 * p * (1.0 - p)).mean();
}

namespace {

bool labels_identical(const Eigen::MatrixXd& labels, std::span<const Eigen::Index> rows) {
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (labels.row(rows[i]) != labels.row(rows[0])) return false;
  }
  return true;
}

}  // namespace

SplitDecision split_node(const Eigen::MatrixXd& features, const Eigen::MatrixXd& labels,
                         std::span<const Eigen::Index> rows, int depth, Rng& rng, const ErtParams& params) {
  SplitDecision best;
  const std::size_t n = rows.size();
  if (n == 0 || n < 2 * static_cast<std::size_t>(params.min_samples_leaf)) return best;
  if (params.max_depth > 0 && depth >= params.max_depth) return best;
  if (labels_identical(labels, rows)) return best;

  const Eigen::Index n_features = features.cols();
  const Eigen::Index outputs = labels.cols();
  const int k = resolved_k_features(params, n_features);

  Eigen::VectorXd total = Eigen::VectorXd::Zero(outputs);
  for (auto r : rows) total += labels.row(r).transpose();
  const double parent = mean_gini(total, static_cast<double>(n));

  std::vector<int> order(static_cast<std::size_t>(n_features));
  std::iota(order.begin(), order.end(), 0);
  Eigen::VectorXd left(outputs);
  int found = 0;
  for (std::size_t i = 0; i < order.size() && found < k; ++i) {
    const std::size_t j = i + rng.index(order.size() - i);
    std::swap(order[i], order[j]);
    const int f = order[i];
    const double* column = features.col(f).data();
    double lo = column[rows[0]], hi = lo;
    for (auto r : rows) {
      lo = std::min(lo, column[r]);
      hi = std::max(hi, column[r]);
    }
    if (!(lo < hi)) continue;
    ++found;
    double threshold = lo + rng.uniform_open() * (hi - lo);
    if (threshold <= lo) threshold = hi;

    left.setZero();
    std::size_t n_left = 0;
    for (auto r : rows) {
      if (column[r] < threshold) {
        left += labels.row(r).transpose();
        ++n_left;
      }
    }
    const double nl = static_cast<double>(n_left);
    const double nr = static_cast<double>(n - n_left);
    const double gain = parent - (nl / static_cast<double>(n)) * mean_gini(left, nl) -
                        (nr / static_cast<double>(n)) * mean_gini(total - left, nr);
    // Gains within rounding of each other are ties; the earlier candidate wins.
    if (best.leaf || gain > best.gain + 1e-12) {
      best = {false, f, threshold, gain};
    }
  }
  return best;
}

DecisionTree::DecisionTree(std::vector<Node> nodes, std::vector<double> leaf_values, int outputs)
    : nodes_(std::move(nodes)), leaf_values_(std::move(leaf_values)), outputs_(outputs) {
  if (nodes_.empty() || outputs_ < 1) throw FormatError("tree must have at least one node and one output");
  const std::size_t leaves = leaf_count();
  if (leaves * static_cast<std::size_t>(outputs_) != leaf_values_.size()) {
    throw FormatError("tree leaf storage does not match its output count");
  }
  for (const auto& node : nodes_) {
    if (node.is_leaf()) {
      if (node.left < 0 || static_cast<std::size_t>(node.left) >= leaves) throw FormatError("tree leaf index out of range");
    } else if (node.left <= 0 || node.right <= 0 || static_cast<std::size_t>(node.left) >= nodes_.size() ||
               static_cast<std::size_t>(node.right) >= nodes_.size()) {
      throw FormatError("tree child index out of range");
    }
  }
  for (double v : leaf_values_) {
    if (!(v >= 0.0 && v <= 1.0)) throw FormatError("tree leaf value outside [0, 1]");
  }
}

std::span<const double> DecisionTree::leaf(std::size_t index) const {
  const auto m = static_cast<std::size_t>(outputs_);
  return std::span<const double>(leaf_values_).subspan(index * m, m);
}

std::span<const double> DecisionTree::route(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  const Node* node = &nodes_[0];
  while (!node->is_leaf()) node = &nodes_[static_cast<std::size_t>(x[node->feature] < node->threshold ? node->left : node->right)];
  return leaf(static_cast<std::size_t>(node->left));
}

namespace {

struct TreeBuilder {
  const Eigen::MatrixXd& features;
  const Eigen::MatrixXd& labels;
  Rng& rng;
  const ErtParams& params;
  std::vector<DecisionTree::Node> nodes;
  std::vector<double> leaf_values;

  int make_leaf(std::span<const Eigen::Index> rows) {
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(labels.cols());
    for (auto r : rows) mean += labels.row(r).transpose();
    mean /= static_cast<double>(rows.size());
    const int leaf = static_cast<int>(leaf_values.size() / static_cast<std::size_t>(labels.cols()));
    for (Eigen::Index m = 0; m < mean.size(); ++m) leaf_values.push_back(std::clamp(mean[m], 0.0, 1.0));
    nodes.push_back({-1, 0.0, leaf, -1});
    return static_cast<int>(nodes.size()) - 1;
  }

  int grow(std::span<Eigen::Index> rows, int depth) {
    const SplitDecision split = split_node(features, labels, rows, depth, rng, params);
    if (split.leaf) return make_leaf(rows);
    const double* column = features.col(split.feature).data();
    auto mid = std::partition(rows.begin(), rows.end(), [&](Eigen::Index r) { return column[r] < split.threshold; });
    const auto n_left = static_cast<std::size_t>(mid - rows.begin());
    const int id = static_cast<int>(nodes.size());
    nodes.push_back({split.feature, split.threshold, -1, -1});
    const int left = grow(rows.first(n_left), depth + 1);
    const int right = grow(rows.subspan(n_left), depth + 1);
    nodes[static_cast<std::size_t>(id)].left = left;
    nodes[static_cast<std::size_t>(id)].right = right;
    return id;
  }
};

}  // namespace

DecisionTree build_tree(const Eigen::MatrixXd& features, const Eigen::MatrixXd& labels, Rng& rng,
                        const ErtParams& params) {
  if (features.rows() == 0) throw Error("cannot build a tree from zero samples");
  if (features.rows() != labels.rows()) throw Error("features and labels differ in row count");
  std::vector<Eigen::Index> rows(static_cast<std::size_t>(features.rows()));
  std::iota(rows.begin(), rows.end(), Eigen::Index{0});
  TreeBuilder builder{features, labels, rng, params, {}, {}};
  builder.grow(rows, 0);
  return DecisionTree(std::move(builder.nodes), std::move(builder.leaf_values), static_cast<int>(labels.cols()));
}

ErtEnsemble::ErtEnsemble(ErtParams params, SamplerConfig sampler, FeatureConfig features, ItemCatalog catalog)
    : params_(params), sampler_(sampler), featurizer_(std::move(features), std::move(catalog)) {
  if (params_.trees_per_iteration < 1 || params_.iterations < 1 || params_.min_samples_leaf < 1 ||
      params_.batch_users < 1 || params_.k_features < 0 || params_.max_depth < 0) {
    throw Error("ERT parameters must be positive counts");
  }
}

void ErtEnsemble::append(DecisionTree tree) {
  if (tree.outputs() != static_cast<int>(catalog().size())) throw MismatchError("tree output count differs from catalog");
  trees_.push_back(std::move(tree));
}

Eigen::VectorXd ErtEnsemble::predict(const FeatureVector& features) const {
  if (features.layout != featurizer_.layout() && (!features.layout || *features.layout != *featurizer_.layout())) {
    throw MismatchError("feature layout does not match the ERT model");
  }
  return predict_row(features.values);
}

Eigen::VectorXd ErtEnsemble::predict_row(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (trees_.empty()) throw Error("ERT ensemble has no trees");
  if (static_cast<std::size_t>(x.size()) != featurizer_.dimension()) throw MismatchError("feature vector has the wrong length");
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(catalog().size()));
  for (const auto& tree : trees_) {
    const auto leaf = tree.route(x);
    for (std::size_t m = 0; m < leaf.size(); ++m) sum[static_cast<Eigen::Index>(m)] += leaf[m];
  }
  return sum / static_cast<double>(trees_.size());
}

json ErtEnsemble::to_json() const {
  json trees = json::array();
  for (const auto& t : trees_) {
    std::vector<int> feature, left, right;
    std::vector<double> threshold;
    for (const auto& n : t.nodes()) {
      feature.push_back(n.feature);
      threshold.push_back(n.threshold);
      left.push_back(n.left);
      right.push_back(n.right);
    }
    trees.push_back({{"feature", feature}, {"threshold", threshold}, {"left", left}, {"right", right},
                     {"leaf_values", t.leaf_values()}});
  }
  return {{"schema_version", kSchemaVersion},
          {"kind", "ert"},
          {"params",
           {{"trees_per_iteration", params_.trees_per_iteration},
            {"iterations", params_.iterations},
            {"k_features", params_.k_features},
            {"min_samples_leaf", params_.min_samples_leaf},
            {"max_depth", params_.max_depth},
            {"batch_users", params_.batch_users},
            {"seed", params_.seed}}},
          {"sampler", itemrec::to_json(sampler_)},
          {"features", itemrec::to_json(featurizer_.config())},
          {"layout", *featurizer_.layout()},
          {"catalog", itemrec::to_json(catalog())},
          {"increments", increments_},
          {"trees", std::move(trees)}};
}

ErtEnsemble ErtEnsemble::from_json(const json& j) {
  check_header(j, "ert", "ERT model");
  ErtParams p;
  const auto& jp = j.at("params");
  p.trees_per_iteration = jp.at("trees_per_iteration").get<int>();
  p.iterations = jp.at("iterations").get<int>();
  p.k_features = jp.at("k_features").get<int>();
  p.min_samples_leaf = jp.at("min_samples_leaf").get<int>();
  p.max_depth = jp.at("max_depth").get<int>();
  p.batch_users = jp.at("batch_users").get<int>();
  p.seed = jp.at("seed").get<std::uint64_t>();
  ErtEnsemble e(p, sampler_config_from_json(j.at("sampler")), feature_config_from_json(j.at("features")),
                catalog_from_json(j.at("catalog")));
  if (j.at("layout").get<FeatureLayout>() != *e.featurizer_.layout()) {
    throw MismatchError("ERT model: stored layout does not match its feature config");
  }
  e.increments_ = j.at("increments").get<std::size_t>();
  const int outputs = static_cast<int>(e.catalog().size());
  for (const auto& jt : j.at("trees")) {
    const auto feature = jt.at("feature").get<std::vector<int>>();
    const auto threshold = jt.at("threshold").get<std::vector<double>>();
    const auto left = jt.at("left").get<std::vector<int>>();
    const auto right = jt.at("right").get<std::vector<int>>();
    if (threshold.size() != feature.size() || left.size() != feature.size() || right.size() != feature.size()) {
      throw FormatError("ERT model: node arrays differ in length");
    }
    std::vector<DecisionTree::Node> nodes(feature.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (feature[i] >= static_cast<int>(e.featurizer_.dimension())) throw FormatError("ERT model: feature index out of range");
      nodes[i] = {feature[i], threshold[i], left[i], right[i]};
    }
    e.append(DecisionTree(std::move(nodes), jt.at("leaf_values").get<std::vector<double>>(), outputs));
  }
  return e;
}

void ErtEnsemble::save(const std::filesystem::path& path) const { write_json_file(path, to_json()); }

ErtEnsemble ErtEnsemble::load(const std::filesystem::path& path) { return from_json(read_json_file(path)); }

ErtEnsemble train_increment(ErtEnsemble ensemble, std::span<const PlayerTimeSeries> players,
                            std::span<const std::size_t> batch, unsigned threads) {
  if (batch.empty()) throw Error("ERT increment: empty player batch");
  const auto& params = ensemble.params();
  const std::uint64_t increment = ensemble.increments();
  const SampleSet samples = build_sample_set(players, batch, ensemble.sampler(), ensemble.featurizer(),
                                             derive_seed(stream::kSamples, increment), threads);
  if (samples.rows() == 0) throw Error("ERT increment: batch yields zero training samples");

  const std::size_t first = ensemble.trees().size();
  std::vector<DecisionTree> grown(static_cast<std::size_t>(params.trees_per_iteration));
  parallel_for(grown.size(), threads, [&](std::size_t j) {
    Rng rng(derive_seed(derive_seed(params.seed, stream::kTree), first + j));
    grown[j] = build_tree(samples.features, samples.labels, rng, params);
  });
  for (auto& t : grown) ensemble.append(std::move(t));
  ensemble.mark_increment();
  return ensemble;
}

ErtEnsemble train_ert(ErtEnsemble ensemble, std::span<const PlayerTimeSeries> players, unsigned threads,
                      const std::function<void(std::size_t, std::size_t)>& progress) {
  if (players.empty()) throw Error("ERT training: no players");
  const auto iterations = static_cast<std::size_t>(ensemble.params().iterations);
  for (std::size_t it = 0; it < iterations; ++it) {
    const auto batch = minibatch(players.size(), static_cast<std::size_t>(ensemble.params().batch_users),
                                 ensemble.increments(), ensemble.sampler().seed);
    ensemble = train_increment(std::move(ensemble), players, batch, threads);
    if (progress) progress(it + 1, iterations);
  }
  return ensemble;
}

}  // namespace itemrec
