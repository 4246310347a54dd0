#include "itemrec/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <optional>

#include "itemrec/error.hpp"
#include "itemrec/model_io.hpp"
#include "itemrec/parallel.hpp"
#include "itemrec/rng.hpp"

namespace itemrec {

using nlohmann::json;

SynthConfig default_synth_config(std::size_t n_players, std::size_t n_items, double epsilon, std::uint64_t seed) {
  SynthConfig c;
  c.n_players = n_players;
  c.n_items = n_items;
  c.epsilon = epsilon;
  c.seed = seed;
  const std::size_t a_count = n_items;
  for (std::size_t a = 0; a < a_count; ++a) {
    Archetype arch;
    const double playtime = 600.0 + 300.0 * static_cast<double>(a);
    const double sessions = 2.0 + 1.5 * static_cast<double>((3 * a) % a_count);
    const double levelups = 0.5 + 0.5 * static_cast<double>((5 * a + 2) % a_count);
    arch.activity = {{"playtime", playtime, 0.08 * playtime, false},
                     {"sessions", sessions, 0.5, false},
                     {"level", levelups, 0.3, true}};
    arch.preference.assign(n_items, 0.0);
    arch.preference[a] = 1.0;
    c.archetypes.push_back(std::move(arch));
  }
  for (std::size_t i = 0; i < n_items; ++i) c.item_prices.push_back(120.0 + 40.0 * static_cast<double>(i));
  return c;
}

SynthConfig full_scale_synth_config(double epsilon, std::uint64_t seed) {
  SynthConfig c = default_synth_config(33488, 8, epsilon, seed);
  for (auto& a : c.archetypes) {
    a.lifetime_min = 600;
    a.lifetime_max = 1200;
    a.purchase_rate = 0.05;
  }
  return c;
}

void validate(const SynthConfig& c) {
  if (c.n_players == 0) throw Error("synthetic config: zero players");
  if (c.n_items == 0) throw Error("synthetic config: zero items");
  if (c.archetypes.empty()) throw Error("synthetic config: no archetypes");
  if (!(c.epsilon >= 0.0 && c.epsilon <= 1.0)) throw Error("synthetic config: epsilon outside [0, 1]");
  if (c.item_prices.size() != c.n_items) throw Error("synthetic config: one price per item required");
  for (const auto& a : c.archetypes) {
    if (a.preference.size() != c.n_items) throw Error("synthetic config: preference length differs from item count");
    double sum = 0;
    for (double p : a.preference) {
      if (p < 0) throw Error("synthetic config: negative preference");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw Error("synthetic config: preferences must sum to 1");
    if (a.lifetime_min < 1 || a.lifetime_max < a.lifetime_min) throw Error("synthetic config: bad lifetime range");
    if (a.weight <= 0) throw Error("synthetic config: archetype weights must be positive");
    auto unit = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!unit(a.purchase_rate) || !unit(a.login_rate)) throw Error("synthetic config: rates must lie in [0, 1]");
  }
}

namespace {

double total_weight(const SynthConfig& c) {
  double w = 0;
  for (const auto& a : c.archetypes) w += a.weight;
  return w;
}

std::size_t draw_categorical(const std::vector<double>& weights, double total, Rng& rng) {
  double u = rng.uniform() * total;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (u < weights[i]) return i;
    u -= weights[i];
  }
  // Rounding can leave u just above the last bucket; pick the last positive one.
  for (std::size_t i = weights.size(); i-- > 0;) {
    if (weights[i] > 0) return i;
  }
  return weights.size() - 1;
}

}  // namespace

std::vector<double> item_mixture(const SynthConfig& c) {
  validate(c);
  const double w = total_weight(c);
  const double m = static_cast<double>(c.n_items);
  std::vector<double> mix(c.n_items, 0.0);
  for (const auto& a : c.archetypes) {
    for (std::size_t i = 0; i < c.n_items; ++i) {
      mix[i] += a.weight / w * ((1.0 - c.epsilon) * a.preference[i] + c.epsilon / m);
    }
  }
  return mix;
}

double bayes_top1(const SynthConfig& c) {
  validate(c);
  const double w = total_weight(c);
  const double m = static_cast<double>(c.n_items);
  double total = 0;
  for (const auto& a : c.archetypes) {
    const double best = *std::max_element(a.preference.begin(), a.preference.end());
    total += a.weight / w * ((1.0 - c.epsilon) * best + c.epsilon / m);
  }
  return total;
}

SynthDataset generate(const SynthConfig& c, unsigned threads) {
  validate(c);
  std::vector<std::string> items;
  for (std::size_t i = 0; i < c.n_items; ++i) items.push_back("gacha_" + std::to_string(i));
  std::vector<double> weights;
  for (const auto& a : c.archetypes) weights.push_back(a.weight);
  const double wsum = total_weight(c);

  std::vector<std::optional<PlayerTimeSeries>> players(c.n_players);
  std::vector<std::size_t> archetype(c.n_players);
  parallel_for(c.n_players, threads, [&](std::size_t p) {
    Rng rng(derive_seed(derive_seed(c.seed, stream::kPlayer), p));
    const std::size_t a = draw_categorical(weights, wsum, rng);
    const Archetype& arch = c.archetypes[a];
    archetype[p] = a;
    const int lifetime = rng.between(arch.lifetime_min, arch.lifetime_max);
    std::vector<double> running(arch.activity.size(), 0.0);
    std::vector<DailyRecord> records;
    for (int day = 0; day < lifetime; ++day) {
      if (day > 0 && !rng.bernoulli(arch.login_rate)) continue;
      DailyRecord r;
      r.day = day;
      for (std::size_t ch = 0; ch < arch.activity.size(); ++ch) {
        const auto& prof = arch.activity[ch];
        const double draw = std::max(0.0, rng.normal(prof.mean, prof.sd));
        if (prof.cumulative) {
          running[ch] += draw;
          r.activity[prof.name] = running[ch];
        } else {
          r.activity[prof.name] = draw;
        }
      }
      r.purchases.assign(c.n_items, 0);
      r.sales.assign(c.n_items, 0.0);
      if (rng.bernoulli(arch.purchase_rate)) {
        const std::size_t item = rng.bernoulli(c.epsilon) ? rng.index(c.n_items)
                                                          : draw_categorical(arch.preference, 1.0, rng);
        const auto units = static_cast<std::int64_t>(1 + rng.index(3));
        r.purchases[item] = units;
        r.sales[item] = static_cast<double>(units) * c.item_prices[item];
      }
      records.push_back(std::move(r));
    }
    char id[32];
    std::snprintf(id, sizeof id, "p%06zu", p);
    players[p].emplace(id, std::move(records));
  });

  SynthDataset data{ItemCatalog(std::move(items)), {}, std::move(archetype), bayes_top1(c)};
  data.players.reserve(c.n_players);
  for (auto& p : players) data.players.push_back(std::move(*p));
  return data;
}

json ground_truth_json(const SynthDataset& data, const SynthConfig& config) {
  json players = json::object();
  for (std::size_t i = 0; i < data.players.size(); ++i) players[data.players[i].player_id()] = data.archetype[i];
  json archetypes = json::array();
  for (const auto& a : config.archetypes) {
    json activity = json::array();
    for (const auto& ch : a.activity) {
      activity.push_back({{"name", ch.name}, {"mean", ch.mean}, {"sd", ch.sd}, {"cumulative", ch.cumulative}});
    }
    archetypes.push_back({{"activity", activity},
                          {"preference", a.preference},
                          {"purchase_rate", a.purchase_rate},
                          {"login_rate", a.login_rate},
                          {"lifetime_min", a.lifetime_min},
                          {"lifetime_max", a.lifetime_max},
                          {"weight", a.weight}});
  }
  return {{"schema_version", kSchemaVersion},
          {"kind", "ground_truth"},
          {"seed", config.seed},
          {"epsilon", config.epsilon},
          {"n_players", config.n_players},
          {"catalog", to_json(data.catalog)},
          {"item_prices", config.item_prices},
          {"item_mixture", item_mixture(config)},
          {"bayes_top1", data.bayes_top1},
          {"archetypes", archetypes},
          {"player_archetype", players}};
}

}  // namespace itemrec
