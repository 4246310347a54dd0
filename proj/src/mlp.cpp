#include "itemrec/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "itemrec/error.hpp"
#include "itemrec/model_io.hpp"

namespace itemrec {

using nlohmann::json;

MlpParams desk_mlp_params() {
  MlpParams p;
  p.hidden_sizes = {128, 128};
  p.learning_rate = 0.3;
  return p;
}

namespace {

void validate(const MlpParams& p) {
  for (int h : p.hidden_sizes) {
    if (h < 1) throw Error("MLP hidden sizes must be at least 1");
  }
  auto rate_ok = [](double r) { return r >= 0.0 && r < 1.0; };
  if (!rate_ok(p.dropout_hidden) || !rate_ok(p.dropout_input)) throw Error("MLP dropout rates must lie in [0, 1)");
  if (p.iterations < 1 || p.repeats_per_iteration < 1 || p.sgd_batch < 1 || p.batch_users < 1) {
    throw Error("MLP schedule counts must be at least 1");
  }
  if (!(p.learning_rate > 0.0)) throw Error("MLP learning rate must be positive");
  if (p.input_clip < 0.0) throw Error("MLP input clip must be non-negative");
}

template <typename Matrix>
Matrix dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, Rng& rng) {
  using Scalar = typename Matrix::Scalar;
  const Scalar keep = static_cast<Scalar>(1.0 / (1.0 - rate));
  Matrix mask(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) mask(r, c) = rng.uniform() < rate ? Scalar(0) : keep;
  }
  return mask;
}

template <typename Scalar>
Scalar sigmoid(Scalar z) {
  return Scalar(1) / (Scalar(1) + std::exp(-z));
}

template <typename Scalar>
Scalar softplus(Scalar z) {
  return std::max(z, Scalar(0)) + std::log1p(std::exp(-std::abs(z)));
}

template <typename Scalar>
constexpr const char* scalar_name() {
  return sizeof(Scalar) == sizeof(float) ? "float32" : "float64";
}

}  // namespace

template <typename Scalar>
MlpModel<Scalar>::MlpModel(MlpParams params, SamplerConfig sampler, FeatureConfig features, ItemCatalog catalog)
    : params_(std::move(params)), sampler_(sampler), featurizer_(std::move(features), std::move(catalog)) {
  validate(params_);
  std::vector<Eigen::Index> widths{inputs()};
  for (int h : params_.hidden_sizes) widths.push_back(h);
  widths.push_back(outputs());
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    weights_.push_back(Matrix::Zero(widths[l + 1], widths[l]));
    biases_.push_back(Vector::Zero(widths[l + 1]));
  }
  mean_ = Vector::Zero(inputs());
  scale_ = Vector::Ones(inputs());
}

template <typename Scalar>
void MlpModel<Scalar>::initialize(Rng& rng) {
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    auto& w = weights_[l];
    const bool output_layer = l + 1 == weights_.size();
    const double sd = output_layer ? std::sqrt(2.0 / static_cast<double>(w.cols() + w.rows()))
                                   : std::sqrt(2.0 / static_cast<double>(w.cols()));
    for (Eigen::Index c = 0; c < w.cols(); ++c) {
      for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = static_cast<Scalar>(rng.normal(0.0, sd));
    }
    biases_[l].setZero();
  }
}

template <typename Scalar>
void MlpModel<Scalar>::fit_standardization(const Eigen::MatrixXd& rows) {
  if (rows.cols() != inputs()) throw MismatchError("standardization data has the wrong feature count");
  if (rows.rows() == 0) throw Error("cannot fit standardization on zero samples");
  const Eigen::RowVectorXd mean = rows.colwise().mean();
  const Eigen::RowVectorXd var = (rows.rowwise() - mean).array().square().colwise().mean();
  mean_ = mean.transpose().cast<Scalar>();
  for (Eigen::Index f = 0; f < inputs(); ++f) {
    const double sd = std::sqrt(var[f]);
    scale_[f] = static_cast<Scalar>(sd > 0 ? sd : 1.0);
  }
  standardized_ = true;
}

template <typename Scalar>
typename MlpModel<Scalar>::Matrix MlpModel<Scalar>::standardize(const Matrix& raw) const {
  Matrix z = (raw.colwise() - mean_).array().colwise() / scale_.array();
  if (params_.input_clip > 0) {
    const auto clip = static_cast<Scalar>(params_.input_clip);
    z = z.cwiseMax(-clip).cwiseMin(clip);
  }
  return z;
}

template <typename Scalar>
Eigen::VectorXd MlpModel<Scalar>::predict(const FeatureVector& features) const {
  if (features.layout != featurizer_.layout() && (!features.layout || *features.layout != *featurizer_.layout())) {
    throw MismatchError("feature layout does not match the MLP model");
  }
  return predict_row(features.values);
}

template <typename Scalar>
Eigen::VectorXd MlpModel<Scalar>::predict_row(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != inputs()) throw MismatchError("feature vector has the wrong length");
  const Matrix raw = x.cast<Scalar>();
  const auto pass = forward(*this, raw, Mode::Infer);
  Eigen::VectorXd out(outputs());
  for (Eigen::Index m = 0; m < outputs(); ++m) {
    const double p = 1.0 / (1.0 + std::exp(-static_cast<double>(pass.logits(m, 0))));
    out[m] = std::clamp(p, 1e-300, std::nextafter(1.0, 0.0));
  }
  return out;
}

template <typename Scalar>
json MlpModel<Scalar>::to_json() const {
  json layers = json::array();
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    const auto& w = weights_[l];
    layers.push_back({{"rows", w.rows()},
                      {"cols", w.cols()},
                      {"weights", std::vector<Scalar>(w.data(), w.data() + w.size())},
                      {"bias", std::vector<Scalar>(biases_[l].data(), biases_[l].data() + biases_[l].size())}});
  }
  return {{"schema_version", kSchemaVersion},
          {"kind", "mlp"},
          {"scalar", scalar_name<Scalar>()},
          {"params",
           {{"hidden_sizes", params_.hidden_sizes},
            {"dropout_hidden", params_.dropout_hidden},
            {"dropout_input", params_.dropout_input},
            {"learning_rate", params_.learning_rate},
            {"input_clip", params_.input_clip},
            {"iterations", params_.iterations},
            {"repeats_per_iteration", params_.repeats_per_iteration},
            {"sgd_batch", params_.sgd_batch},
            {"batch_users", params_.batch_users},
            {"seed", params_.seed}}},
          {"sampler", itemrec::to_json(sampler_)},
          {"features", itemrec::to_json(featurizer_.config())},
          {"layout", *featurizer_.layout()},
          {"catalog", itemrec::to_json(catalog())},
          {"iterations_done", iterations_done_},
          {"standardization",
           {{"fitted", standardized_},
            {"mean", std::vector<Scalar>(mean_.data(), mean_.data() + mean_.size())},
            {"scale", std::vector<Scalar>(scale_.data(), scale_.data() + scale_.size())}}},
          {"layers", std::move(layers)}};
}

template <typename Scalar>
MlpModel<Scalar> MlpModel<Scalar>::from_json(const json& j) {
  check_header(j, "mlp", "MLP model");
  const auto scalar = j.at("scalar").get<std::string>();
  if (scalar != "float32" && scalar != "float64") throw FormatError("MLP model: unknown scalar type '" + scalar + "'");
  const auto& jp = j.at("params");
  MlpParams p;
  p.hidden_sizes = jp.at("hidden_sizes").get<std::vector<int>>();
  p.dropout_hidden = jp.at("dropout_hidden").get<double>();
  p.dropout_input = jp.at("dropout_input").get<double>();
  p.learning_rate = jp.at("learning_rate").get<double>();
  p.input_clip = jp.at("input_clip").get<double>();
  p.iterations = jp.at("iterations").get<int>();
  p.repeats_per_iteration = jp.at("repeats_per_iteration").get<int>();
  p.sgd_batch = jp.at("sgd_batch").get<int>();
  p.batch_users = jp.at("batch_users").get<int>();
  p.seed = jp.at("seed").get<std::uint64_t>();
  MlpModel model(p, sampler_config_from_json(j.at("sampler")), feature_config_from_json(j.at("features")),
                 catalog_from_json(j.at("catalog")));
  if (j.at("layout").get<FeatureLayout>() != *model.featurizer_.layout()) {
    throw MismatchError("MLP model: stored layout does not match its feature config");
  }
  model.iterations_done_ = j.at("iterations_done").get<std::size_t>();
  const auto& js = j.at("standardization");
  model.standardized_ = js.at("fitted").get<bool>();
  const auto mean = js.at("mean").get<std::vector<Scalar>>();
  const auto scale = js.at("scale").get<std::vector<Scalar>>();
  if (mean.size() != static_cast<std::size_t>(model.inputs()) || scale.size() != mean.size()) {
    throw FormatError("MLP model: standardization length mismatch");
  }
  model.mean_ = Eigen::Map<const Vector>(mean.data(), model.inputs());
  model.scale_ = Eigen::Map<const Vector>(scale.data(), model.inputs());
  if ((model.scale_.array() <= 0).any()) throw FormatError("MLP model: non-positive standardization scale");
  const auto& layers = j.at("layers");
  if (layers.size() != model.weights_.size()) throw FormatError("MLP model: layer count mismatch");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    auto& w = model.weights_[l];
    const auto& jl = layers[l];
    if (jl.at("rows").get<Eigen::Index>() != w.rows() || jl.at("cols").get<Eigen::Index>() != w.cols()) {
      throw FormatError("MLP model: layer " + std::to_string(l) + " has the wrong shape");
    }
    const auto data = jl.at("weights").get<std::vector<Scalar>>();
    const auto bias = jl.at("bias").get<std::vector<Scalar>>();
    if (data.size() != static_cast<std::size_t>(w.size()) || bias.size() != static_cast<std::size_t>(w.rows())) {
      throw FormatError("MLP model: layer " + std::to_string(l) + " has the wrong parameter count");
    }
    w = Eigen::Map<const Matrix>(data.data(), w.rows(), w.cols());
    model.biases_[l] = Eigen::Map<const Vector>(bias.data(), w.rows());
  }
  return model;
}

template <typename Scalar>
void MlpModel<Scalar>::save(const std::filesystem::path& path) const {
  write_json_file(path, to_json());
}

template <typename Scalar>
MlpModel<Scalar> MlpModel<Scalar>::load(const std::filesystem::path& path) {
  return from_json(read_json_file(path));
}

template <typename Scalar>
ForwardPass<Scalar> forward(const MlpModel<Scalar>& model, const typename MlpModel<Scalar>::Matrix& raw, Mode mode,
                            Rng* rng) {
  using Matrix = typename MlpModel<Scalar>::Matrix;
  if (raw.rows() != model.inputs()) throw MismatchError("MLP input has the wrong feature count");
  if (mode == Mode::Train && rng == nullptr) throw Error("training-mode forward pass needs an RNG");
  const auto& params = model.params();
  const std::size_t layers = model.layers();
  ForwardPass<Scalar> pass;
  Matrix a = model.standardize(raw);
  auto maybe_drop = [&](double rate) {
    if (mode == Mode::Train && rate > 0) {
      Matrix mask = dropout_mask<Matrix>(a.rows(), a.cols(), rate, *rng);
      a.array() *= mask.array();
      pass.masks.push_back(std::move(mask));
    } else {
      pass.masks.emplace_back();
    }
  };
  maybe_drop(params.dropout_input);
  for (std::size_t l = 0; l < layers; ++l) {
    Matrix z = model.weights()[l] * a;
    z.colwise() += model.biases()[l];
    pass.inputs.push_back(std::move(a));
    if (l + 1 == layers) {
      pass.logits = z;
      pass.pre.push_back(std::move(z));
      break;
    }
    a = z.cwiseMax(Scalar(0));
    pass.pre.push_back(std::move(z));
    maybe_drop(params.dropout_hidden);
  }
  pass.output = pass.logits.unaryExpr([](Scalar v) { return sigmoid(v); });
  return pass;
}

template <typename Scalar>
Gradients<Scalar> backward(const MlpModel<Scalar>& model, const ForwardPass<Scalar>& pass,
                           const typename MlpModel<Scalar>::Matrix& labels) {
  using Matrix = typename MlpModel<Scalar>::Matrix;
  if (labels.rows() != pass.output.rows() || labels.cols() != pass.output.cols()) {
    throw MismatchError("label batch shape does not match the forward pass");
  }
  if (labels.cols() == 0) throw Error("backward pass on an empty batch");
  const std::size_t layers = model.layers();
  Gradients<Scalar> g;
  g.weights.resize(layers);
  g.biases.resize(layers);
  Matrix dz = (pass.output - labels) / static_cast<Scalar>(labels.rows() * labels.cols());
  for (std::size_t l = layers; l-- > 0;) {
    g.weights[l] = dz * pass.inputs[l].transpose();
    g.biases[l] = dz.rowwise().sum();
    if (l == 0) break;
    Matrix da = model.weights()[l].transpose() * dz;
    if (pass.masks[l].size() != 0) da.array() *= pass.masks[l].array();
    dz = (pass.pre[l - 1].array() > Scalar(0)).select(da, Scalar(0));
  }
  return g;
}

template <typename Scalar>
Scalar bce_loss(const ForwardPass<Scalar>& pass, const typename MlpModel<Scalar>::Matrix& labels) {
  if (labels.rows() != pass.logits.rows() || labels.cols() != pass.logits.cols() || labels.size() == 0) {
    throw MismatchError("label batch shape does not match the forward pass");
  }
  Scalar total = 0;
  for (Eigen::Index c = 0; c < labels.cols(); ++c) {
    for (Eigen::Index r = 0; r < labels.rows(); ++r) {
      const Scalar z = pass.logits(r, c);
      total += softplus(z) - labels(r, c) * z;
    }
  }
  return total / static_cast<Scalar>(labels.size());
}

template <typename Scalar>
void apply_sgd(MlpModel<Scalar>& model, const Gradients<Scalar>& grads, Scalar learning_rate) {
  for (std::size_t l = 0; l < model.layers(); ++l) {
    model.weights()[l] -= learning_rate * grads.weights[l];
    model.biases()[l] -= learning_rate * grads.biases[l];
  }
}

template <typename Scalar>
MlpModel<Scalar> train_mlp(MlpModel<Scalar> model, std::span<const PlayerTimeSeries> players, unsigned threads,
                           const std::function<void(std::size_t, double)>& progress) {
  using Matrix = typename MlpModel<Scalar>::Matrix;
  if (players.empty()) throw Error("MLP training: no players");
  const auto& params = model.params();
  if (model.iterations_done() == 0) {
    Rng init(derive_seed(params.seed, stream::kMlpInit));
    model.initialize(init);
  }
  const auto lr = static_cast<Scalar>(params.learning_rate);
  const auto batch = static_cast<Eigen::Index>(params.sgd_batch);
  for (int step = 0; step < params.iterations; ++step) {
    const std::size_t iteration = model.iterations_done();
    const auto chosen = minibatch(players.size(), static_cast<std::size_t>(params.batch_users), iteration,
                                  model.sampler().seed);
    const SampleSet samples = build_sample_set(players, chosen, model.sampler(), model.featurizer(),
                                               derive_seed(stream::kSamples, iteration), threads);
    if (samples.rows() == 0) throw Error("MLP training: batch yields zero training samples");
    if (!model.has_standardization()) model.fit_standardization(samples.features);

    const Matrix x = samples.features.transpose().cast<Scalar>();
    const Matrix y = samples.labels.transpose().cast<Scalar>();
    Rng rng(derive_seed(derive_seed(params.seed, stream::kMlpSgd), iteration));
    std::vector<Eigen::Index> order(static_cast<std::size_t>(x.cols()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    double sweep_loss = 0;
    for (int rep = 0; rep < params.repeats_per_iteration; ++rep) {
      rng.shuffle(order.begin(), order.end());
      double loss_sum = 0;
      std::size_t steps = 0;
      for (Eigen::Index begin = 0; begin < x.cols(); begin += batch) {
        const Eigen::Index size = std::min(batch, x.cols() - begin);
        Matrix xb(x.rows(), size), yb(y.rows(), size);
        for (Eigen::Index c = 0; c < size; ++c) {
          const auto src = order[static_cast<std::size_t>(begin + c)];
          xb.col(c) = x.col(src);
          yb.col(c) = y.col(src);
        }
        const auto pass = forward(model, xb, Mode::Train, &rng);
        loss_sum += static_cast<double>(bce_loss(pass, yb));
        ++steps;
        apply_sgd(model, backward(model, pass, yb), lr);
      }
      sweep_loss = loss_sum / static_cast<double>(steps);
    }
    model.mark_iteration();
    if (progress) progress(iteration + 1, sweep_loss);
  }
  return model;
}

#define ITEMREC_INSTANTIATE_MLP(Scalar)                                                                             \
  template class MlpModel<Scalar>;                                                                                  \
  template ForwardPass<Scalar> forward(const MlpModel<Scalar>&, const MlpModel<Scalar>::Matrix&, Mode, Rng*);       \
  template Gradients<Scalar> backward(const MlpModel<Scalar>&, const ForwardPass<Scalar>&,                          \
                                      const MlpModel<Scalar>::Matrix&);                                             \
  template Scalar bce_loss(const ForwardPass<Scalar>&, const MlpModel<Scalar>::Matrix&);                            \
  template void apply_sgd(MlpModel<Scalar>&, const Gradients<Scalar>&, Scalar);                                     \
  template MlpModel<Scalar> train_mlp(MlpModel<Scalar>, std::span<const PlayerTimeSeries>, unsigned,                \
                                      const std::function<void(std::size_t, double)>&);

ITEMREC_INSTANTIATE_MLP(float)
ITEMREC_INSTANTIATE_MLP(double)

}  // namespace itemrec
