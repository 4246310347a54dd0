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

/// Feed-forward network hyperparameters. The defaults are the full-scale
/// network; desk_mlp_params() gives the small preset ([128, 128], lr 0.3)
/// used in tests and by the CLI unless --full-scale is given.
struct MlpParams {
  std::vector<int> hidden_sizes{2048, 2048};
  double dropout_hidden = 0.5;
  double dropout_input = 0.2;
  double learning_rate = 0.01;
  double input_clip = 3.0;  ///< standardized inputs clamped to [-clip, clip]; 0 disables
  int iterations = 30;
  int repeats_per_iteration = 5;
  int sgd_batch = 128;
  int batch_users = 10000;
  std::uint64_t seed = 0;

  bool operator==(const MlpParams&) const = default;
};

MlpParams desk_mlp_params();

enum class Mode { Train, Infer };

/// Fully connected ReLU network with per-item sigmoid outputs and z-score
/// input standardization. Layer l maps width[l] -> width[l + 1] with
/// weights[l] of shape (width[l + 1], width[l]).
template <typename Scalar>
class MlpModel {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  /// All weights zero, identity standardization.
  MlpModel(MlpParams params, SamplerConfig sampler, FeatureConfig features, ItemCatalog catalog);

  /// He-normal weights for ReLU layers, Glorot-normal for the output layer,
  /// zero biases.
  void initialize(Rng& rng);

  /// Per-column mean and population std of `rows` (samples x F); zero std
  /// becomes 1.
  void fit_standardization(const Eigen::MatrixXd& rows);
  bool has_standardization() const { return standardized_; }

  const MlpParams& params() const { return params_; }
  const SamplerConfig& sampler() const { return sampler_; }
  const Featurizer& featurizer() const { return featurizer_; }
  const ItemCatalog& catalog() const { return featurizer_.catalog(); }
  Eigen::Index inputs() const { return static_cast<Eigen::Index>(featurizer_.dimension()); }
  Eigen::Index outputs() const { return static_cast<Eigen::Index>(catalog().size()); }
  std::size_t layers() const { return weights_.size(); }
  std::size_t iterations_done() const { return iterations_done_; }
  void mark_iteration() { ++iterations_done_; }

  std::vector<Matrix>& weights() { return weights_; }
  const std::vector<Matrix>& weights() const { return weights_; }
  std::vector<Vector>& biases() { return biases_; }
  const std::vector<Vector>& biases() const { return biases_; }
  const Vector& feature_mean() const { return mean_; }
  const Vector& feature_scale() const { return scale_; }

  /// (x - mean) / scale, clamped to +-input_clip, for a F x B batch.
  Matrix standardize(const Matrix& raw) const;

  /// Inference-mode probabilities. Throws MismatchError on layout mismatch.
  Eigen::VectorXd predict(const FeatureVector& features) const;
  Eigen::VectorXd predict_row(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  nlohmann::json to_json() const;
  static MlpModel from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static MlpModel load(const std::filesystem::path& path);

 private:
  MlpParams params_;
  SamplerConfig sampler_;
  Featurizer featurizer_;
  std::vector<Matrix> weights_;
  std::vector<Vector> biases_;
  Vector mean_;
  Vector scale_;
  bool standardized_ = false;
  std::size_t iterations_done_ = 0;
};

/// Intermediate values of one forward pass over a F x B batch.
template <typename Scalar>
struct ForwardPass {
  using Matrix = typename MlpModel<Scalar>::Matrix;
  std::vector<Matrix> inputs;  ///< input to each layer, after dropout
  std::vector<Matrix> pre;     ///< pre-activation of each layer
  std::vector<Matrix> masks;   ///< inverted-dropout masks (0 or 1/(1-p)); empty when unused
  Matrix logits;
  Matrix output;               ///< sigmoid(logits), M x B
};

/// standardize -> [input dropout] -> (linear -> ReLU -> [dropout]) per hidden
/// layer -> linear -> sigmoid. Dropout only in Train mode, which needs `rng`.
template <typename Scalar>
ForwardPass<Scalar> forward(const MlpModel<Scalar>& model, const typename MlpModel<Scalar>::Matrix& raw, Mode mode,
                            Rng* rng = nullptr);

template <typename Scalar>
struct Gradients {
  std::vector<typename MlpModel<Scalar>::Matrix> weights;
  std::vector<typename MlpModel<Scalar>::Vector> biases;
};

/// Gradients of mean binary cross-entropy (over batch and items) w.r.t. all
/// parameters, reusing the masks of `pass`. `labels` is M x B.
template <typename Scalar>
Gradients<Scalar> backward(const MlpModel<Scalar>& model, const ForwardPass<Scalar>& pass,
                           const typename MlpModel<Scalar>::Matrix& labels);

/// Mean binary cross-entropy of a pass against M x B labels.
template <typename Scalar>
Scalar bce_loss(const ForwardPass<Scalar>& pass, const typename MlpModel<Scalar>::Matrix& labels);

/// Plain SGD step: parameter -= learning_rate * gradient.
template <typename Scalar>
void apply_sgd(MlpModel<Scalar>& model, const Gradients<Scalar>& grads, Scalar learning_rate);

/// Trains with the same minibatch/sampling schedule as the ERT trainer: for
/// each of params.iterations batches, samples are drawn once and swept
/// repeats_per_iteration times with shuffled SGD minibatches. Standardization
/// is fitted on the first batch and then frozen. The callback receives
/// (iteration, mean training loss of its last sweep).
template <typename Scalar>
MlpModel<Scalar> train_mlp(MlpModel<Scalar> model, std::span<const PlayerTimeSeries> players, unsigned threads = 1,
                           const std::function<void(std::size_t, double)>& progress = {});

extern template class MlpModel<float>;
extern template class MlpModel<double>;

}  // namespace itemrec
