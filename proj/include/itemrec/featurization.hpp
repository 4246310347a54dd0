#pragma once

#include <Eigen/Dense>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "itemrec/data_model.hpp"

namespace itemrec {

/// Temporal channels to summarize. A channel named `purchases:<item>` or
/// `sales:<item>` reads the per-item purchase count or sales column; any
/// other name is an activity channel (missing values read as zero).
struct FeatureConfig {
  std::vector<std::string> channels;
  int edge_window = 7;
  bool include_scalars = true;

  bool operator==(const FeatureConfig&) const = default;
};

using FeatureLayout = std::vector<std::string>;

/// Static summary of one player's history up to a cutoff day.
struct FeatureVector {
  Eigen::VectorXd values;
  std::shared_ptr<const FeatureLayout> layout;
};

/// Population moments plus maximum of a sample.
struct Moments {
  double mean = 0;
  double variance = 0;
  double skewness = 0;
  double kurtosis = 0;  ///< excess kurtosis
  double maximum = 0;

  bool operator==(const Moments&) const = default;
};

inline constexpr std::size_t kStatsPerChannel = 11;
inline constexpr std::size_t kScalarDescriptors = 5;

/// Activity channels present in `players` (sorted), followed by the per-item
/// purchase and sales channels of `catalog`.
FeatureConfig default_feature_config(const ItemCatalog& catalog, std::span<const PlayerTimeSeries> players);

/// Column names for a config: 11 per channel, then the scalar descriptors.
FeatureLayout feature_layout(const FeatureConfig& config);

/// Per-day rate of change between consecutive records:
/// (v[j+1] - v[j]) / (day[j+1] - day[j]).
std::vector<double> derive(std::span<const double> values, std::span<const int> days);

/// Skewness and kurtosis are 0 when the sample is constant or shorter than
/// two; the empty sample maps to all zeros.
Moments summarize(std::span<const double> values);

/// Values of one channel over the records of a series.
std::vector<double> channel_values(const PlayerTimeSeries& series, std::string_view channel,
                                   const ItemCatalog& catalog);

/// Mean over the last min(k, n) records minus mean over the first min(k, n).
double first_last_distance(std::span<const double> values, int k);
double first_last_distance(const PlayerTimeSeries& series, std::string_view channel, int k,
                           const ItemCatalog& catalog);

/// Converts series into feature vectors for one config. Resolves channel
/// names once; safe to share between threads.
class Featurizer {
 public:
  Featurizer(FeatureConfig config, ItemCatalog catalog);

  const FeatureConfig& config() const { return config_; }
  const ItemCatalog& catalog() const { return catalog_; }
  const std::shared_ptr<const FeatureLayout>& layout() const { return layout_; }
  std::size_t dimension() const { return layout_->size(); }

  /// Features of truncate(series, t). Propagates truncate errors.
  FeatureVector vectorize(const PlayerTimeSeries& series, int t) const;

  /// Writes into a preallocated row; `out.size()` must equal dimension().
  void vectorize_into(const PlayerTimeSeries& series, int t, Eigen::Ref<Eigen::VectorXd> out) const;

 private:
  enum class Source { Activity, Purchases, Sales };
  struct Channel {
    Source source;
    std::string activity;
    std::size_t item = 0;
  };
  double read(const DailyRecord& r, const Channel& c) const;

  FeatureConfig config_;
  ItemCatalog catalog_;
  std::vector<Channel> channels_;
  std::shared_ptr<const FeatureLayout> layout_;
};

inline FeatureVector vectorize(const PlayerTimeSeries& series, int t, const FeatureConfig& config,
                               const ItemCatalog& catalog) {
  return Featurizer(config, catalog).vectorize(series, t);
}

}  // namespace itemrec
