#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace itemrec {

/// Ordered list of item identifiers. An item's position is the coordinate it
/// occupies in every label and probability vector of a run.
class ItemCatalog {
 public:
  ItemCatalog() = default;
  explicit ItemCatalog(std::vector<std::string> items);

  /// One identifier per line; blank lines are ignored.
  static ItemCatalog load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  std::size_t size() const { return items_.size(); }
  const std::string& name(std::size_t index) const { return items_.at(index); }
  const std::vector<std::string>& items() const { return items_; }

  std::optional<std::size_t> find(std::string_view id) const;
  /// Throws FormatError for unknown identifiers.
  std::size_t index_of(std::string_view id) const;

  bool operator==(const ItemCatalog& other) const { return items_ == other.items_; }

 private:
  std::vector<std::string> items_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// One login day of one player. `purchases` and `sales` are indexed by the
/// catalog; days are player-relative (0 = first login).
struct DailyRecord {
  int day = 0;
  std::map<std::string, double> activity;
  std::vector<std::int64_t> purchases;
  std::vector<double> sales;

  bool has_purchase() const;
  /// Missing channels read as zero.
  double activity_value(const std::string& channel) const;

  bool operator==(const DailyRecord&) const = default;
};

/// A player's login records, strictly ascending by day. Immutable.
class PlayerTimeSeries {
 public:
  /// Sorts `records` by day; throws FormatError on duplicates, an empty
  /// history, negative quantities or non-finite activity values.
  PlayerTimeSeries(std::string player_id, std::vector<DailyRecord> records);

  const std::string& player_id() const { return player_id_; }
  const std::vector<DailyRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  int first_day() const { return records_.front().day; }
  int last_day() const { return records_.back().day; }

  /// Days with at least one item bought, ascending.
  std::vector<int> purchase_days() const;

  bool operator==(const PlayerTimeSeries&) const = default;

 private:
  std::string player_id_;
  std::vector<DailyRecord> records_;
};

/// Items bought on a single day.
struct PurchaseDay {
  int day = 0;
  std::vector<std::size_t> items;

  bool operator==(const PurchaseDay&) const = default;
};

/// Records with day <= t. Throws Error when t precedes the first record.
PlayerTimeSeries truncate(const PlayerTimeSeries& series, int t);

/// Earliest purchase day strictly after t, with its item set.
std::optional<PurchaseDay> next_purchase_after(const PlayerTimeSeries& series, int t);

/// Parses the JSONL telemetry format. Players are returned in order of first
/// appearance. Errors name the offending line.
std::vector<PlayerTimeSeries> ingest_logs(std::istream& in, const ItemCatalog& catalog);
std::vector<PlayerTimeSeries> ingest_logs(const std::filesystem::path& path, const ItemCatalog& catalog);

/// Writes one JSON object per (player, day); zero purchases/sales are omitted.
void write_logs(std::ostream& out, std::span<const PlayerTimeSeries> players, const ItemCatalog& catalog);
void write_logs(const std::filesystem::path& path, std::span<const PlayerTimeSeries> players,
                const ItemCatalog& catalog);

}  // namespace itemrec
