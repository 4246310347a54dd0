#include "itemrec/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "itemrec/error.hpp"
#include "itemrec/model_io.hpp"
#include "itemrec/parallel.hpp"

namespace itemrec {

using nlohmann::json;

const char* measure_name(Measure m) {
  switch (m) {
    case Measure::OnNextPurchaseDate:
      return "isOnNextPurchaseDate";
    case Measure::NextPurchase:
      return "isNextPurchase";
    case Measure::WithinWindow:
      return "isWithinWindow";
  }
  return "?";
}

std::string top_k_name(int k) {
  if (k == 1) return "predictedMax";
  return "withinTop" + std::to_string(k);
}

std::vector<std::size_t> top_k(std::span<const double> probabilities, int k) {
  if (k < 1 || static_cast<std::size_t>(k) > probabilities.size()) {
    throw Error("top_k: k = " + std::to_string(k) + " outside [1, " + std::to_string(probabilities.size()) + "]");
  }
  std::vector<std::size_t> order(probabilities.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::partial_sort(order.begin(), order.begin() + k, order.end(), [&](std::size_t a, std::size_t b) {
    if (probabilities[a] != probabilities[b]) return probabilities[a] > probabilities[b];
    return a < b;
  });
  order.resize(static_cast<std::size_t>(k));
  return order;
}

std::optional<HitMatrix> score_player(const PlayerTimeSeries& series, std::span<const double> prediction,
                                      std::size_t n_items, const EvalConfig& config) {
  if (prediction.size() != n_items) {
    throw MismatchError("prediction for player '" + series.player_id() + "' has " +
                        std::to_string(prediction.size()) + " items, catalog has " + std::to_string(n_items));
  }
  const int t = config.cutoff;
  const int end = t + config.window;
  std::vector<bool> in_day(n_items, false), in_window(n_items, false);
  std::optional<int> next_day;
  for (const auto& r : series.records()) {
    if (r.day <= t || r.day > end || !r.has_purchase()) continue;
    if (!next_day) next_day = r.day;
    for (std::size_t i = 0; i < n_items; ++i) {
      if (r.purchases.at(i) <= 0) continue;
      in_window[i] = true;
      if (r.day == *next_day) in_day[i] = true;
    }
  }
  HitMatrix hits;
  for (auto& row : hits) row.assign(config.top_ks.size(), false);
  if (!next_day) {
    if (config.no_purchase == NoPurchasePolicy::Exclude) return std::nullopt;
    return hits;
  }
  // Daily records cannot order purchases within a day, so the very next
  // purchase is the full set bought on the next purchase day.
  const std::vector<bool>& in_next = in_day;
  for (std::size_t j = 0; j < config.top_ks.size(); ++j) {
    for (auto i : top_k(prediction, config.top_ks[j])) {
      if (in_day[i]) hits[0][j] = true;
      if (in_next[i]) hits[1][j] = true;
      if (in_window[i]) hits[2][j] = true;
    }
  }
  return hits;
}

double EvaluationReport::accuracy(Measure m, std::size_t k_index) const {
  if (evaluated == 0) return 0.0;
  return static_cast<double>(hits[static_cast<std::size_t>(m)].at(k_index)) / static_cast<double>(evaluated);
}

std::string EvaluationReport::to_text() const {
  std::ostringstream out;
  const std::string label = "(" + (model.empty() ? std::string("model") : model) + ")";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%-22s", label.c_str());
  out << buf;
  for (int k : top_ks) {
    std::snprintf(buf, sizeof buf, "%14s", top_k_name(k).c_str());
    out << buf;
  }
  out << '\n';
  for (auto m : kMeasures) {
    std::snprintf(buf, sizeof buf, "%-22s", measure_name(m));
    out << buf;
    for (std::size_t j = 0; j < top_ks.size(); ++j) {
      std::snprintf(buf, sizeof buf, "%13.1f%%", 100.0 * accuracy(m, j));
      out << buf;
    }
    out << '\n';
  }
  out << "evaluated players: " << evaluated << ", excluded players: " << excluded << '\n';
  out << "cutoff day: " << cutoff << ", window: " << window << " days\n";
  return out.str();
}

json EvaluationReport::to_json() const {
  json acc = json::object();
  json raw = json::object();
  for (auto m : kMeasures) {
    std::vector<double> row;
    for (std::size_t j = 0; j < top_ks.size(); ++j) row.push_back(accuracy(m, j));
    acc[measure_name(m)] = row;
    raw[measure_name(m)] = hits[static_cast<std::size_t>(m)];
  }
  return {{"schema_version", kSchemaVersion},
          {"kind", "evaluation_report"},
          {"model", model},
          {"cutoff", cutoff},
          {"window", window},
          {"top_ks", top_ks},
          {"accuracy", acc},
          {"hits", raw},
          {"evaluated", evaluated},
          {"excluded", excluded}};
}

EvaluationReport EvaluationReport::from_json(const json& j) {
  check_header(j, "evaluation_report", "evaluation report");
  EvaluationReport r;
  r.model = j.at("model").get<std::string>();
  r.cutoff = j.at("cutoff").get<int>();
  r.window = j.at("window").get<int>();
  r.top_ks = j.at("top_ks").get<std::vector<int>>();
  for (auto m : kMeasures) {
    r.hits[static_cast<std::size_t>(m)] = j.at("hits").at(measure_name(m)).get<std::vector<std::size_t>>();
  }
  r.evaluated = j.at("evaluated").get<std::size_t>();
  r.excluded = j.at("excluded").get<std::size_t>();
  return r;
}

EvaluationReport evaluate(const Predictor& predict, std::span<const PlayerTimeSeries> players,
                          const Featurizer& featurizer, const EvalConfig& config, std::string model_name,
                          unsigned threads) {
  if (config.window < 1) throw Error("evaluation window must be at least 1 day");
  const std::size_t n_items = featurizer.catalog().size();
  for (int k : config.top_ks) {
    if (k < 1 || static_cast<std::size_t>(k) > n_items) throw Error("top-k value " + std::to_string(k) + " out of range");
  }
  std::vector<std::optional<HitMatrix>> scored(players.size());
  parallel_for(players.size(), threads, [&](std::size_t i) {
    const auto& p = players[i];
    if (p.first_day() > config.cutoff) return;
    const Eigen::VectorXd prediction = predict(featurizer.vectorize(p, config.cutoff));
    scored[i] = score_player(p, std::span<const double>(prediction.data(), static_cast<std::size_t>(prediction.size())),
                             n_items, config);
  });
  EvaluationReport report;
  report.model = std::move(model_name);
  report.cutoff = config.cutoff;
  report.window = config.window;
  report.top_ks = config.top_ks;
  for (auto& row : report.hits) row.assign(config.top_ks.size(), 0);
  for (const auto& s : scored) {
    if (!s) {
      ++report.excluded;
      continue;
    }
    ++report.evaluated;
    for (std::size_t m = 0; m < 3; ++m) {
      for (std::size_t j = 0; j < config.top_ks.size(); ++j) report.hits[m][j] += (*s)[m][j] ? 1 : 0;
    }
  }
  if (report.evaluated == 0) throw Error("evaluation: no player has a purchase in the evaluation window");
  return report;
}

PopularityBaseline::PopularityBaseline(const Eigen::MatrixXd& labels) {
  if (labels.rows() == 0) throw Error("popularity baseline needs at least one label");
  frequencies_ = labels.colwise().mean().transpose();
}

}  // namespace itemrec
