#include "doctest.h"

#include <algorithm>
#include <sstream>

#include "itemrec/data_model.hpp"
#include "itemrec/error.hpp"
#include "itemrec/synth.hpp"
#include "oracles/oracles.hpp"

using namespace itemrec;

namespace {

ItemCatalog eight_items() {
  std::vector<std::string> ids;
  for (int i = 0; i < 8; ++i) ids.push_back("gacha_" + std::to_string(i));
  return ItemCatalog(ids);
}

DailyRecord rec(int day, std::size_t m, std::vector<std::pair<std::size_t, std::int64_t>> bought = {}) {
  DailyRecord r{day, {{"playtime", 100.0 + day}}, std::vector<std::int64_t>(m, 0), std::vector<double>(m, 0.0)};
  for (auto [i, n] : bought) {
    r.purchases[i] = n;
    r.sales[i] = 10.0 * static_cast<double>(n);
  }
  return r;
}

std::vector<int> days_of(const PlayerTimeSeries& s) {
  std::vector<int> d;
  for (const auto& r : s.records()) d.push_back(r.day);
  return d;
}

}  // namespace

TEST_CASE("catalog rejects empty and duplicate ids") {
  CHECK_THROWS_AS(ItemCatalog(std::vector<std::string>{}), FormatError);
  CHECK_THROWS_AS(ItemCatalog({"a", "b", "a"}), FormatError);
  ItemCatalog c({"x", "y"});
  CHECK(c.index_of("y") == 1);
  CHECK_FALSE(c.find("z"));
}

TEST_CASE("ingest two players with three rows each") {
  std::istringstream in(
      R"({"player_id":"a","day":0,"activity":{"playtime":5},"purchases":{},"sales":{}}
{"player_id":"b","day":0,"activity":{"playtime":1}}
{"player_id":"a","day":1,"activity":{"playtime":6},"purchases":{"gacha_2":1},"sales":{"gacha_2":120}}
{"player_id":"b","day":3,"activity":{"playtime":2}}
{"player_id":"a","day":4,"activity":{"playtime":7}}
{"player_id":"b","day":4,"activity":{"playtime":3},"purchases":{"gacha_7":2}}
)");
  auto players = ingest_logs(in, eight_items());
  REQUIRE(players.size() == 2);
  CHECK(players[0].player_id() == "a");
  CHECK(players[0].size() == 3);
  CHECK(players[1].size() == 3);
  CHECK(players[0].records()[1].purchases[2] == 1);
  CHECK(players[0].records()[1].sales[2] == 120.0);
  CHECK(players[1].records()[2].purchases[7] == 2);
  CHECK(players[1].records()[2].sales[7] == 0.0);
}

TEST_CASE("unknown item id is reported") {
  std::istringstream in(R"({"player_id":"a","day":0,"purchases":{"gacha_9":1}})");
  try {
    ingest_logs(in, eight_items());
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("gacha_9") != std::string::npos);
  }
}

TEST_CASE("malformed line names its line number") {
  std::istringstream in("{\"player_id\":\"a\",\"day\":0}\n{not json\n");
  try {
    ingest_logs(in, eight_items());
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("duplicate player day is rejected") {
  std::istringstream in("{\"player_id\":\"a\",\"day\":3}\n{\"player_id\":\"a\",\"day\":3}\n");
  CHECK_THROWS_AS(ingest_logs(in, eight_items()), Error);
}

TEST_CASE("rows out of day order come back sorted") {
  std::vector<int> raw{9, 2, 14, 0, 5};
  std::ostringstream text;
  for (int d : raw) text << "{\"player_id\":\"a\",\"day\":" << d << "}\n";
  std::istringstream in(text.str());
  auto players = ingest_logs(in, eight_items());
  auto expected = raw;
  std::sort(expected.begin(), expected.end());
  CHECK(days_of(players.at(0)) == expected);
}

TEST_CASE("series invariants") {
  CHECK_THROWS_AS(PlayerTimeSeries("a", {}), FormatError);
  CHECK_THROWS_AS(PlayerTimeSeries("a", {rec(1, 2), rec(1, 2)}), FormatError);
  auto bad = rec(0, 2);
  bad.activity["x"] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(PlayerTimeSeries("a", {bad}), FormatError);
  auto neg = rec(0, 2);
  neg.purchases[0] = -1;
  CHECK_THROWS_AS(PlayerTimeSeries("a", {neg}), FormatError);
  PlayerTimeSeries s("a", {rec(4, 2, {{1, 1}}), rec(0, 2), rec(2, 2, {{0, 3}})});
  CHECK(s.purchase_days() == std::vector<int>{2, 4});
}

TEST_CASE("truncate") {
  PlayerTimeSeries s("a", {rec(0, 2), rec(3, 2), rec(7, 2)});
  CHECK(days_of(truncate(s, 3)) == std::vector<int>{0, 3});
  CHECK(truncate(s, 7) == s);
  CHECK(days_of(truncate(s, 2)) == std::vector<int>{0});
  CHECK_THROWS_AS(truncate(PlayerTimeSeries("b", {rec(2, 2)}), 1), Error);
}

TEST_CASE("next_purchase_after") {
  PlayerTimeSeries s("a", {rec(0, 4), rec(5, 4, {{2, 1}}), rec(7, 4), rec(9, 4, {{1, 1}, {3, 2}})});
  auto a = next_purchase_after(s, 5);
  REQUIRE(a);
  CHECK(a->day == 9);
  CHECK(a->items == std::vector<std::size_t>{1, 3});
  CHECK_FALSE(next_purchase_after(s, 9));
  auto b = next_purchase_after(s, 4);
  REQUIRE(b);
  CHECK(b->day == 5);
  CHECK(b->items == std::vector<std::size_t>{2});
}

TEST_CASE("truncate and next purchase agree with brute force on synthetic players") {
  auto data = generate(default_synth_config(60, 8, 0.3, 11));
  for (const auto& s : data.players) {
    for (int t = s.first_day(); t <= s.last_day() + 1; t += 3) {
      auto cut = truncate(s, t);
      std::vector<int> expected;
      for (const auto& r : s.records()) {
        if (r.day <= t) expected.push_back(r.day);
      }
      CHECK(days_of(cut) == expected);
      auto got = next_purchase_after(s, t);
      auto want = oracle::next_purchase(s, t);
      REQUIRE(got.has_value() == want.has_value());
      if (got) {
        CHECK(got->day == want->first);
        CHECK(got->items == want->second);
      }
    }
  }
}

TEST_CASE("ingest and write round trip") {
  auto data = generate(default_synth_config(40, 8, 0.2, 3));
  std::ostringstream out;
  write_logs(out, data.players, data.catalog);
  std::istringstream in(out.str());
  auto back = ingest_logs(in, data.catalog);
  CHECK(back == data.players);
  std::ostringstream again;
  write_logs(again, back, data.catalog);
  CHECK(again.str() == out.str());
}
