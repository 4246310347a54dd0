#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "itemrec/data_model.hpp"
#include "itemrec/featurization.hpp"
#include "itemrec/rng.hpp"

namespace itemrec {

/// Which days may serve as sampling cutoffs.
enum class CutoffPool {
  LoginDays,  ///< days with a record
  AllDays,    ///< every day from the first login on
};

/// What a training label marks.
enum class LabelMode {
  NextPurchaseDay,  ///< every item bought on the next purchase day
  SingleItem,       ///< one item drawn uniformly from that day's set
};

struct SamplerConfig {
  int max_samples_per_player = 4;
  std::uint64_t seed = 0;
  CutoffPool cutoff_pool = CutoffPool::LoginDays;
  LabelMode label_mode = LabelMode::NextPurchaseDay;
};

struct TrainingSample {
  std::string player_id;
  int cutoff = 0;
  FeatureVector features;
  Eigen::VectorXd label;  ///< binary, length = catalog size
};

/// Cutoff candidates that have a purchase strictly after them, ascending.
std::vector<int> eligible_cutoffs(const PlayerTimeSeries& series, CutoffPool pool = CutoffPool::LoginDays);

/// min(S, |eligible|) samples at distinct cutoffs drawn without replacement;
/// returned in ascending cutoff order.
std::vector<TrainingSample> draw_samples(const PlayerTimeSeries& series, const SamplerConfig& config,
                                         const Featurizer& featurizer, Rng& rng);

/// Per-player stream: independent of the order players are processed in.
inline Rng player_rng(std::uint64_t seed, std::string_view player_id, std::uint64_t stream_id = 0) {
  return Rng(derive_seed(derive_seed(seed, stream_id), hash_string(player_id)));
}

/// Samples of many players stacked into dense matrices (one row per sample).
struct SampleSet {
  Eigen::MatrixXd features;  ///< rows x F, column-major
  Eigen::MatrixXd labels;    ///< rows x M
  std::vector<std::string> player_ids;
  std::vector<int> cutoffs;
  std::shared_ptr<const FeatureLayout> layout;

  Eigen::Index rows() const { return features.rows(); }
};

/// Draws samples for `players[indices]` with per-player RNG streams keyed
/// by (config.seed, stream_id, player id). Output is independent of threads.
SampleSet build_sample_set(std::span<const PlayerTimeSeries> players, std::span<const std::size_t> indices,
                           const SamplerConfig& config, const Featurizer& featurizer, std::uint64_t stream_id,
                           unsigned threads = 1);

/// Number of minibatches forming one pass over `n_players`: the nearest
/// integer to n_players / batch_users, at least one.
std::size_t iterations_per_epoch(std::size_t n_players, std::size_t batch_users);

/// Player indices for minibatch `iteration`. Each epoch reshuffles all
/// players and splits the permutation into iterations_per_epoch() near-equal
/// chunks.
std::vector<std::size_t> minibatch(std::size_t n_players, std::size_t batch_users, std::size_t iteration,
                                   std::uint64_t seed);

}  // namespace itemrec
