#include "itemrec/featurization.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "itemrec/error.hpp"

namespace itemrec {

namespace {

constexpr std::string_view kPurchasePrefix = "purchases:";
constexpr std::string_view kSalesPrefix = "sales:";

constexpr const char* kStatNames[] = {"mean", "var", "skew", "kurt", "max"};

}  // namespace

FeatureConfig default_feature_config(const ItemCatalog& catalog, std::span<const PlayerTimeSeries> players) {
  std::set<std::string> activity;
  for (const auto& p : players) {
    for (const auto& r : p.records()) {
      for (const auto& [name, value] : r.activity) activity.insert(name);
    }
  }
  FeatureConfig config;
  config.channels.assign(activity.begin(), activity.end());
  for (const auto& item : catalog.items()) config.channels.push_back(std::string(kPurchasePrefix) + item);
  for (const auto& item : catalog.items()) config.channels.push_back(std::string(kSalesPrefix) + item);
  return config;
}

FeatureLayout feature_layout(const FeatureConfig& config) {
  FeatureLayout names;
  names.reserve(config.channels.size() * kStatsPerChannel + kScalarDescriptors);
  for (const auto& c : config.channels) {
    for (const char* s : kStatNames) names.push_back(c + "." + s);
    for (const char* s : kStatNames) names.push_back(c + ".d_" + s);
    names.push_back(c + ".first_last");
  }
  if (config.include_scalars) {
    for (const char* s : {"lifetime_days", "login_days", "purchase_days", "days_since_last_purchase", "cutoff_day"}) {
      names.emplace_back(s);
    }
  }
  return names;
}

std::vector<double> derive(std::span<const double> values, std::span<const int> days) {
  if (values.size() != days.size()) throw Error("derive: values and days differ in length");
  std::vector<double> out;
  if (values.size() < 2) return out;
  out.reserve(values.size() - 1);
  for (std::size_t j = 0; j + 1 < values.size(); ++j) {
    out.push_back((values[j + 1] - values[j]) / static_cast<double>(days[j + 1] - days[j]));
  }
  return out;
}

Moments summarize(std::span<const double> values) {
  Moments m;
  if (values.empty()) return m;
  const double n = static_cast<double>(values.size());
  m.maximum = *std::max_element(values.begin(), values.end());
  const bool constant = std::all_of(values.begin(), values.end(), [&](double v) { return v == values[0]; });
  if (constant) {
    m.mean = values[0];
    return m;
  }
  double sum = 0;
  for (double v : values) sum += v;
  m.mean = sum / n;
  double m2 = 0, m3 = 0, m4 = 0;
  for (double v : values) {
    const double d = v - m.mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  m.variance = m2;
  if (values.size() >= 2 && m2 > 0) {
    m.skewness = m3 / (m2 * std::sqrt(m2));
    m.kurtosis = m4 / (m2 * m2) - 3.0;
  }
  return m;
}

double first_last_distance(std::span<const double> values, int k) {
  if (values.empty()) return 0.0;
  const std::size_t w = std::min<std::size_t>(static_cast<std::size_t>(std::max(k, 1)), values.size());
  double head = 0, tail = 0;
  for (std::size_t i = 0; i < w; ++i) {
    head += values[i];
    tail += values[values.size() - w + i];
  }
  return (tail - head) / static_cast<double>(w);
}

std::vector<double> channel_values(const PlayerTimeSeries& series, std::string_view channel,
                                   const ItemCatalog& catalog) {
  std::vector<double> out;
  out.reserve(series.size());
  const auto& c = channel;
  if (c.starts_with(kPurchasePrefix)) {
    const auto item = catalog.index_of(c.substr(kPurchasePrefix.size()));
    for (const auto& r : series.records()) out.push_back(static_cast<double>(r.purchases.at(item)));
  } else if (c.starts_with(kSalesPrefix)) {
    const auto item = catalog.index_of(c.substr(kSalesPrefix.size()));
    for (const auto& r : series.records()) out.push_back(r.sales.at(item));
  } else {
    const std::string name(c);
    for (const auto& r : series.records()) out.push_back(r.activity_value(name));
  }
  return out;
}

double first_last_distance(const PlayerTimeSeries& series, std::string_view channel, int k,
                           const ItemCatalog& catalog) {
  return first_last_distance(channel_values(series, channel, catalog), k);
}

Featurizer::Featurizer(FeatureConfig config, ItemCatalog catalog)
    : config_(std::move(config)), catalog_(std::move(catalog)) {
  if (config_.edge_window < 1) throw Error("edge window must be at least 1 day");
  for (const auto& name : config_.channels) {
    std::string_view c = name;
    if (c.starts_with(kPurchasePrefix)) {
      channels_.push_back({Source::Purchases, {}, catalog_.index_of(c.substr(kPurchasePrefix.size()))});
    } else if (c.starts_with(kSalesPrefix)) {
      channels_.push_back({Source::Sales, {}, catalog_.index_of(c.substr(kSalesPrefix.size()))});
    } else {
      channels_.push_back({Source::Activity, name, 0});
    }
  }
  layout_ = std::make_shared<const FeatureLayout>(feature_layout(config_));
}

double Featurizer::read(const DailyRecord& r, const Channel& c) const {
  switch (c.source) {
    case Source::Purchases:
      return static_cast<double>(r.purchases.at(c.item));
    case Source::Sales:
      return r.sales.at(c.item);
    case Source::Activity:
      break;
  }
  return r.activity_value(c.activity);
}

FeatureVector Featurizer::vectorize(const PlayerTimeSeries& series, int t) const {
  FeatureVector fv{Eigen::VectorXd(static_cast<Eigen::Index>(dimension())), layout_};
  vectorize_into(series, t, fv.values);
  return fv;
}

void Featurizer::vectorize_into(const PlayerTimeSeries& series, int t, Eigen::Ref<Eigen::VectorXd> out) const {
  if (static_cast<std::size_t>(out.size()) != dimension()) throw Error("feature buffer has the wrong length");
  if (t < series.first_day()) {
    throw Error("cutoff day " + std::to_string(t) + " precedes the first record of player '" +
                series.player_id() + "'");
  }
  const auto& all = series.records();
  const auto end = std::upper_bound(all.begin(), all.end(), t,
                                    [](int day, const DailyRecord& r) { return day < r.day; });
  const std::span<const DailyRecord> records(all.begin(), end);

  std::vector<int> days;
  days.reserve(records.size());
  for (const auto& r : records) days.push_back(r.day);

  std::vector<double> values(records.size());
  Eigen::Index pos = 0;
  auto put = [&](const Moments& m) {
    out[pos++] = m.mean;
    out[pos++] = m.variance;
    out[pos++] = m.skewness;
    out[pos++] = m.kurtosis;
    out[pos++] = m.maximum;
  };
  for (const auto& c : channels_) {
    for (std::size_t i = 0; i < records.size(); ++i) values[i] = read(records[i], c);
    put(summarize(values));
    put(summarize(derive(values, days)));
    out[pos++] = first_last_distance(values, config_.edge_window);
  }
  if (config_.include_scalars) {
    int purchase_days = 0;
    int last_purchase = -1;
    for (const auto& r : records) {
      if (r.has_purchase()) {
        ++purchase_days;
        last_purchase = r.day;
      }
    }
    const int lifetime = t - days.front();
    out[pos++] = lifetime;
    out[pos++] = static_cast<double>(records.size());
    out[pos++] = purchase_days;
    // Never purchased: one day longer than the whole observed lifetime.
    out[pos++] = last_purchase >= 0 ? t - last_purchase : lifetime + 1;
    out[pos++] = t;
  }
  if (!out.allFinite()) throw Error("non-finite feature for player '" + series.player_id() + "'");
}

}  // namespace itemrec
