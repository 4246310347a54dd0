#include "itemrec/data_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "itemrec/error.hpp"
#include "json.hpp"

namespace itemrec {

using nlohmann::json;

ItemCatalog::ItemCatalog(std::vector<std::string> items) : items_(std::move(items)) {
  if (items_.empty()) throw FormatError("item catalog is empty");
  for (std::size_t i = 0; i < items_.size(); ++i) {
    if (items_[i].empty()) throw FormatError("item catalog contains an empty identifier");
    if (!index_.emplace(items_[i], i).second) {
      throw FormatError("duplicate item id '" + items_[i] + "' in catalog");
    }
  }
}

ItemCatalog ItemCatalog::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open catalog file " + path.string());
  std::vector<std::string> items;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) line.pop_back();
    if (!line.empty()) items.push_back(line);
  }
  return ItemCatalog(std::move(items));
}

void ItemCatalog::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write catalog file " + path.string());
  for (const auto& id : items_) out << id << '\n';
}

std::optional<std::size_t> ItemCatalog::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t ItemCatalog::index_of(std::string_view id) const {
  if (auto i = find(id)) return *i;
  throw FormatError("unknown item id '" + std::string(id) + "'");
}

bool DailyRecord::has_purchase() const {
  return std::any_of(purchases.begin(), purchases.end(), [](std::int64_t n) { return n > 0; });
}

double DailyRecord::activity_value(const std::string& channel) const {
  auto it = activity.find(channel);
  return it == activity.end() ? 0.0 : it->second;
}

PlayerTimeSeries::PlayerTimeSeries(std::string player_id, std::vector<DailyRecord> records)
    : player_id_(std::move(player_id)), records_(std::move(records)) {
  if (records_.empty()) throw FormatError("player '" + player_id_ + "' has no records");
  std::stable_sort(records_.begin(), records_.end(),
                   [](const DailyRecord& a, const DailyRecord& b) { return a.day < b.day; });
  const std::size_t items = records_.front().purchases.size();
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto& r = records_[i];
    if (r.day < 0) throw FormatError("player '" + player_id_ + "' has a negative day index");
    if (i > 0 && records_[i - 1].day == r.day) {
      throw FormatError("duplicate day " + std::to_string(r.day) + " for player '" + player_id_ + "'");
    }
    if (r.purchases.size() != items || r.sales.size() != items) {
      throw FormatError("player '" + player_id_ + "' has records with inconsistent item counts");
    }
    for (auto n : r.purchases) {
      if (n < 0) throw FormatError("negative purchase count for player '" + player_id_ + "'");
    }
    for (double s : r.sales) {
      if (!std::isfinite(s) || s < 0) throw FormatError("invalid sales value for player '" + player_id_ + "'");
    }
    for (const auto& [name, value] : r.activity) {
      if (!std::isfinite(value)) {
        throw FormatError("non-finite activity '" + name + "' for player '" + player_id_ + "'");
      }
    }
  }
}

std::vector<int> PlayerTimeSeries::purchase_days() const {
  std::vector<int> days;
  for (const auto& r : records_) {
    if (r.has_purchase()) days.push_back(r.day);
  }
  return days;
}

PlayerTimeSeries truncate(const PlayerTimeSeries& series, int t) {
  if (t < series.first_day()) {
    throw Error("cutoff day " + std::to_string(t) + " precedes the first record of player '" +
                series.player_id() + "'");
  }
  const auto& recs = series.records();
  auto end = std::upper_bound(recs.begin(), recs.end(), t,
                              [](int day, const DailyRecord& r) { return day < r.day; });
  return PlayerTimeSeries(series.player_id(), std::vector<DailyRecord>(recs.begin(), end));
}

std::optional<PurchaseDay> next_purchase_after(const PlayerTimeSeries& series, int t) {
  const auto& recs = series.records();
  auto it = std::upper_bound(recs.begin(), recs.end(), t,
                             [](int day, const DailyRecord& r) { return day < r.day; });
  for (; it != recs.end(); ++it) {
    if (!it->has_purchase()) continue;
    PurchaseDay next{it->day, {}};
    for (std::size_t i = 0; i < it->purchases.size(); ++i) {
      if (it->purchases[i] > 0) next.items.push_back(i);
    }
    return next;
  }
  return std::nullopt;
}

namespace {

DailyRecord parse_record(const json& row, const ItemCatalog& catalog, std::string& player_id) {
  if (!row.is_object()) throw FormatError("expected a JSON object");
  player_id = row.at("player_id").get<std::string>();
  DailyRecord rec;
  const auto& day = row.at("day");
  if (!day.is_number_integer()) throw FormatError("'day' must be an integer");
  rec.day = day.get<int>();
  rec.purchases.assign(catalog.size(), 0);
  rec.sales.assign(catalog.size(), 0.0);
  if (auto it = row.find("activity"); it != row.end()) {
    for (const auto& [name, value] : it->items()) {
      if (!value.is_number()) throw FormatError("activity '" + name + "' is not a number");
      rec.activity[name] = value.get<double>();
    }
  }
  if (auto it = row.find("purchases"); it != row.end()) {
    for (const auto& [id, value] : it->items()) {
      if (!value.is_number_integer()) throw FormatError("purchase count for '" + id + "' is not an integer");
      rec.purchases[catalog.index_of(id)] = value.get<std::int64_t>();
    }
  }
  if (auto it = row.find("sales"); it != row.end()) {
    for (const auto& [id, value] : it->items()) {
      if (!value.is_number()) throw FormatError("sales value for '" + id + "' is not a number");
      rec.sales[catalog.index_of(id)] = value.get<double>();
    }
  }
  return rec;
}

}  // namespace

std::vector<PlayerTimeSeries> ingest_logs(std::istream& in, const ItemCatalog& catalog) {
  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<DailyRecord>> by_player;
  std::unordered_map<std::string, std::vector<std::size_t>> lines_of;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::string player_id;
    DailyRecord rec;
    try {
      rec = parse_record(json::parse(line), catalog, player_id);
    } catch (const std::exception& e) {
      throw FormatError("line " + std::to_string(line_no) + ": " + e.what());
    }
    auto [it, inserted] = by_player.try_emplace(player_id);
    if (inserted) order.push_back(player_id);
    it->second.push_back(std::move(rec));
    lines_of[player_id].push_back(line_no);
  }
  std::vector<PlayerTimeSeries> players;
  players.reserve(order.size());
  for (const auto& id : order) {
    auto& recs = by_player[id];
    std::vector<std::size_t> perm(recs.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::stable_sort(perm.begin(), perm.end(), [&](auto a, auto b) { return recs[a].day < recs[b].day; });
    for (std::size_t i = 1; i < perm.size(); ++i) {
      if (recs[perm[i]].day == recs[perm[i - 1]].day) {
        throw FormatError("line " + std::to_string(lines_of[id][perm[i]]) + ": duplicate (player, day) = ('" +
                          id + "', " + std::to_string(recs[perm[i]].day) + ")");
      }
    }
    players.emplace_back(id, std::move(recs));
  }
  return players;
}

std::vector<PlayerTimeSeries> ingest_logs(const std::filesystem::path& path, const ItemCatalog& catalog) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open telemetry file " + path.string());
  return ingest_logs(in, catalog);
}

void write_logs(std::ostream& out, std::span<const PlayerTimeSeries> players, const ItemCatalog& catalog) {
  for (const auto& p : players) {
    for (const auto& r : p.records()) {
      json row;
      row["player_id"] = p.player_id();
      row["day"] = r.day;
      row["activity"] = json::object();
      for (const auto& [name, value] : r.activity) row["activity"][name] = value;
      row["purchases"] = json::object();
      row["sales"] = json::object();
      for (std::size_t i = 0; i < catalog.size(); ++i) {
        if (r.purchases.at(i) != 0) row["purchases"][catalog.name(i)] = r.purchases[i];
        if (r.sales.at(i) != 0.0) row["sales"][catalog.name(i)] = r.sales[i];
      }
      out << row.dump() << '\n';
    }
  }
}

void write_logs(const std::filesystem::path& path, std::span<const PlayerTimeSeries> players,
                const ItemCatalog& catalog) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write telemetry file " + path.string());
  write_logs(out, players, catalog);
}

}  // namespace itemrec
