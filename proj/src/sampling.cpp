#include "itemrec/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "itemrec/error.hpp"
#include "itemrec/parallel.hpp"

namespace itemrec {

std::vector<int> eligible_cutoffs(const PlayerTimeSeries& series, CutoffPool pool) {
  const auto purchases = series.purchase_days();
  std::vector<int> out;
  if (purchases.empty()) return out;
  const int last_purchase = purchases.back();
  if (pool == CutoffPool::AllDays) {
    for (int d = series.first_day(); d < last_purchase; ++d) out.push_back(d);
    return out;
  }
  for (const auto& r : series.records()) {
    if (r.day < last_purchase) out.push_back(r.day);
  }
  return out;
}

std::vector<TrainingSample> draw_samples(const PlayerTimeSeries& series, const SamplerConfig& config,
                                         const Featurizer& featurizer, Rng& rng) {
  if (config.max_samples_per_player < 1) throw Error("max_samples_per_player must be at least 1");
  auto pool = eligible_cutoffs(series, config.cutoff_pool);
  const std::size_t take = std::min(pool.size(), static_cast<std::size_t>(config.max_samples_per_player));
  // Partial Fisher-Yates: the first `take` slots become the draw.
  for (std::size_t i = 0; i < take; ++i) {
    const std::size_t j = i + rng.index(pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(take);
  std::sort(pool.begin(), pool.end());

  const auto m = static_cast<Eigen::Index>(featurizer.catalog().size());
  std::vector<TrainingSample> samples;
  samples.reserve(take);
  for (int cutoff : pool) {
    auto next = next_purchase_after(series, cutoff);
    TrainingSample s;
    s.player_id = series.player_id();
    s.cutoff = cutoff;
    s.label = Eigen::VectorXd::Zero(m);
    if (config.label_mode == LabelMode::SingleItem) {
      s.label[static_cast<Eigen::Index>(next->items[rng.index(next->items.size())])] = 1.0;
    } else {
      for (auto i : next->items) s.label[static_cast<Eigen::Index>(i)] = 1.0;
    }
    s.features = featurizer.vectorize(series, cutoff);
    samples.push_back(std::move(s));
  }
  return samples;
}

SampleSet build_sample_set(std::span<const PlayerTimeSeries> players, std::span<const std::size_t> indices,
                           const SamplerConfig& config, const Featurizer& featurizer, std::uint64_t stream_id,
                           unsigned threads) {
  std::vector<std::vector<TrainingSample>> per_player(indices.size());
  parallel_for(indices.size(), threads, [&](std::size_t i) {
    const auto& series = players[indices[i]];
    Rng rng = player_rng(config.seed, series.player_id(), stream_id);
    per_player[i] = draw_samples(series, config, featurizer, rng);
  });
  std::size_t total = 0;
  for (const auto& v : per_player) total += v.size();

  SampleSet set;
  set.layout = featurizer.layout();
  set.features.resize(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(featurizer.dimension()));
  set.labels.resize(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(featurizer.catalog().size()));
  set.player_ids.reserve(total);
  set.cutoffs.reserve(total);
  Eigen::Index row = 0;
  for (auto& v : per_player) {
    for (auto& s : v) {
      set.features.row(row) = s.features.values.transpose();
      set.labels.row(row) = s.label.transpose();
      set.player_ids.push_back(std::move(s.player_id));
      set.cutoffs.push_back(s.cutoff);
      ++row;
    }
  }
  return set;
}

std::size_t iterations_per_epoch(std::size_t n_players, std::size_t batch_users) {
  if (batch_users == 0) throw Error("batch_users must be at least 1");
  const auto k = static_cast<std::size_t>(std::llround(static_cast<double>(n_players) / static_cast<double>(batch_users)));
  return std::max<std::size_t>(1, k);
}

std::vector<std::size_t> minibatch(std::size_t n_players, std::size_t batch_users, std::size_t iteration,
                                   std::uint64_t seed) {
  const std::size_t per_epoch = iterations_per_epoch(n_players, batch_users);
  const std::size_t epoch = iteration / per_epoch;
  const std::size_t part = iteration % per_epoch;
  std::vector<std::size_t> perm(n_players);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(derive_seed(derive_seed(seed, stream::kEpoch), epoch));
  rng.shuffle(perm.begin(), perm.end());
  const std::size_t begin = part * n_players / per_epoch;
  const std::size_t end = (part + 1) * n_players / per_epoch;
  return {perm.begin() + static_cast<std::ptrdiff_t>(begin), perm.begin() + static_cast<std::ptrdiff_t>(end)};
}

}  // namespace itemrec
