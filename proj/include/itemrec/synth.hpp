#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "itemrec/data_model.hpp"
#include "json.hpp"

namespace itemrec {

/// Daily activity channel of an archetype: N(mean, sd) clipped at zero. A
/// cumulative channel adds each day's draw to a running total (like a
/// player's level).
struct ChannelProfile {
  std::string name;
  double mean = 0;
  double sd = 0;
  bool cumulative = false;
};

struct Archetype {
  std::vector<ChannelProfile> activity;
  std::vector<double> preference;  ///< item distribution, sums to 1
  double purchase_rate = 0.2;      ///< P(purchase | login day)
  double login_rate = 0.75;        ///< P(login) for days after the first
  int lifetime_min = 40;           ///< days, inclusive range
  int lifetime_max = 80;
  double weight = 1.0;             ///< relative share of players
};

struct SynthConfig {
  std::size_t n_players = 2000;
  std::size_t n_items = 8;
  std::vector<Archetype> archetypes;
  double epsilon = 0.0;  ///< P(an item is drawn uniformly instead of by preference)
  std::uint64_t seed = 0;
  std::vector<double> item_prices;
};

/// One archetype per item, each buying only its own item; activity channels
/// (playtime, sessions, level) separate the archetypes. Lifetimes ~60 days.
SynthConfig default_synth_config(std::size_t n_players = 2000, std::size_t n_items = 8, double epsilon = 0.0,
                                 std::uint64_t seed = 0);

/// Same archetypes at the size of the original study: 33,488 players with
/// lifetimes of roughly 900 days.
SynthConfig full_scale_synth_config(double epsilon = 0.0, std::uint64_t seed = 0);

/// Throws Error on a degenerate or inconsistent config.
void validate(const SynthConfig& config);

/// Overall item distribution of a single purchase.
std::vector<double> item_mixture(const SynthConfig& config);

/// Best achievable expected top-1 hit rate for a one-item next purchase when
/// the player's archetype is known:
///   sum_a w_a * max_i ((1 - eps) * pref[a][i] + eps / M).
double bayes_top1(const SynthConfig& config);

struct SynthDataset {
  ItemCatalog catalog;
  std::vector<PlayerTimeSeries> players;
  std::vector<std::size_t> archetype;  ///< per player
  double bayes_top1 = 0;
};

/// Items are named gacha_0 .. gacha_{M-1}; players p000000, p000001, ...
/// Each player uses its own RNG stream, so output does not depend on threads.
SynthDataset generate(const SynthConfig& config, unsigned threads = 1);

/// Archetype assignments, per-archetype parameters and the Bayes bound.
nlohmann::json ground_truth_json(const SynthDataset& data, const SynthConfig& config);

}  // namespace itemrec
