#include "doctest.h"

#include <cstring>

#include "itemrec/error.hpp"
#include "itemrec/featurization.hpp"
#include "itemrec/synth.hpp"
#include "oracles/oracles.hpp"

using namespace itemrec;

namespace {

PlayerTimeSeries single_channel(const std::vector<int>& days, const std::vector<double>& values) {
  std::vector<DailyRecord> recs;
  for (std::size_t i = 0; i < days.size(); ++i) recs.push_back({days[i], {{"x", values[i]}}, {0}, {0.0}});
  return PlayerTimeSeries("p", recs);
}

const ItemCatalog one_item({"gacha_0"});

}  // namespace

TEST_CASE("derive") {
  CHECK(derive(std::vector<double>{5, 7, 10}, std::vector<int>{0, 1, 2}) == std::vector<double>{2, 3});
  CHECK(derive(std::vector<double>{10, 10}, std::vector<int>{0, 4}) == std::vector<double>{0});
  CHECK(derive(std::vector<double>{0, 6}, std::vector<int>{0, 3}) == std::vector<double>{(6.0 - 0.0) / (3 - 0)});
  CHECK(derive(std::vector<double>{4}, std::vector<int>{2}).empty());
  CHECK_THROWS_AS(derive(std::vector<double>{1, 2}, std::vector<int>{0}), Error);
}

TEST_CASE("summarize") {
  CHECK(summarize(std::vector<double>{3, 3, 3}) == Moments{3, 0, 0, 0, 3});
  CHECK(summarize(std::vector<double>{}) == Moments{});
  auto m = summarize(std::vector<double>{1, 2, 3, 4});
  auto o = oracle::naive_moments({1, 2, 3, 4});
  CHECK(m.mean == doctest::Approx(2.5));
  CHECK(m.variance == doctest::Approx(1.25));
  CHECK(m.skewness == doctest::Approx(0.0));
  CHECK(m.maximum == 4);
  CHECK(oracle::close(m.variance, o.var, 1e-12));
  CHECK(oracle::close(m.kurtosis, o.kurt, 1e-12));
  auto single = summarize(std::vector<double>{-2});
  CHECK(single == Moments{-2, 0, 0, 0, -2});
}

TEST_CASE("first_last_distance") {
  CHECK(first_last_distance(single_channel({0}, {5}), "x", 3, one_item) == 0.0);
  CHECK(first_last_distance(single_channel({0, 1, 2}, {2, 7, 10}), "x", 1, one_item) == 8.0);
  std::vector<double> v{1, 4, 2, 8, 5, 7, 3, 9, 6, 0};
  std::vector<int> days{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  double head = (v[0] + v[1] + v[2]) / 3, tail = (v[7] + v[8] + v[9]) / 3;
  CHECK(first_last_distance(single_channel(days, v), "x", 3, one_item) == doctest::Approx(tail - head));
  CHECK(first_last_distance(std::vector<double>{1, 2}, 5) == doctest::Approx(0.0));
}

TEST_CASE("layout length") {
  FeatureConfig c{{"x"}, 7, false};
  CHECK(feature_layout(c).size() == 11);
  auto f = vectorize(single_channel({0, 1}, {1, 2}), 1, c, one_item);
  CHECK(f.values.size() == 11);
  c.include_scalars = true;
  CHECK(feature_layout(c).size() == 11 + kScalarDescriptors);
}

TEST_CASE("constant series has zero spread slots") {
  FeatureConfig c{{"x"}, 3, false};
  auto f = vectorize(single_channel({0, 2, 5, 6}, {4, 4, 4, 4}), 6, c, one_item);
  const auto& names = *f.layout;
  for (std::size_t i = 0; i < names.size(); ++i) {
    const auto& n = names[i];
    if (n.ends_with("var") || n.ends_with("skew") || n.ends_with("kurt")) CHECK(f.values[static_cast<Eigen::Index>(i)] == 0.0);
  }
  CHECK(f.values[0] == 4.0);
}

TEST_CASE("unknown item channel is rejected") {
  CHECK_THROWS_AS(Featurizer(FeatureConfig{{"purchases:gacha_5"}, 7, true}, one_item), Error);
}

TEST_CASE("matches the straight-line oracle on synthetic players") {
  auto data = generate(default_synth_config(100, 8, 0.3, 17));
  auto config = default_feature_config(data.catalog, data.players);
  Featurizer fz(config, data.catalog);
  std::size_t checked = 0;
  for (const auto& s : data.players) {
    for (int t : {s.first_day(), s.first_day() + 9, s.last_day()}) {
      auto f = fz.vectorize(s, t);
      auto want = oracle::naive_features(s, t, config.channels, config.edge_window, true, data.catalog);
      REQUIRE(static_cast<std::size_t>(f.values.size()) == want.size());
      for (std::size_t i = 0; i < want.size(); ++i) {
        if (!oracle::close(f.values[static_cast<Eigen::Index>(i)], want[i], 1e-9)) {
          FAIL_CHECK(s.player_id() << " t=" << t << " " << (*f.layout)[i]);
        }
      }
      CHECK(f.values.allFinite());
      ++checked;
    }
  }
  CHECK(checked == 300);
}

TEST_CASE("length is the same for every player and cutoff") {
  auto data = generate(default_synth_config(20, 8, 0.1, 5));
  Featurizer fz(default_feature_config(data.catalog, data.players), data.catalog);
  for (const auto& s : data.players) {
    auto f = fz.vectorize(s, s.last_day());
    CHECK(f.values.size() == static_cast<Eigen::Index>(fz.dimension()));
    CHECK(f.layout == fz.layout());
  }
}

TEST_CASE("vectorize is bitwise deterministic") {
  auto data = generate(default_synth_config(5, 8, 0.1, 9));
  Featurizer fz(default_feature_config(data.catalog, data.players), data.catalog);
  for (const auto& s : data.players) {
    auto a = fz.vectorize(s, s.last_day());
    auto b = fz.vectorize(s, s.last_day());
    CHECK(std::memcmp(a.values.data(), b.values.data(), sizeof(double) * static_cast<std::size_t>(a.values.size())) == 0);
  }
}

TEST_CASE("adding a constant shifts only the raw mean") {
  std::vector<int> days{0, 1, 3, 4, 8, 9, 12};
  std::vector<double> v{3, 9, 4, 12, 7, 1, 6};
  std::vector<double> shifted;
  const double c = 250;
  for (double x : v) shifted.push_back(x + c);
  FeatureConfig config{{"x"}, 3, false};
  auto a = vectorize(single_channel(days, v), 12, config, one_item).values;
  auto b = vectorize(single_channel(days, shifted), 12, config, one_item).values;
  const auto names = feature_layout(config);
  for (std::size_t i = 0; i < names.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    if (names[i] == "x.mean") {
      CHECK(b[k] - a[k] == doctest::Approx(c));
    } else if (names[i] == "x.max") {
      CHECK(b[k] - a[k] == doctest::Approx(c));
    } else if (names[i].starts_with("x.d_") || names[i] == "x.first_last") {
      CHECK(b[k] == doctest::Approx(a[k]).epsilon(1e-9));
    }
  }
}

TEST_CASE("scalar descriptors") {
  std::vector<DailyRecord> recs{{2, {}, {0}, {0.0}}, {4, {}, {1}, {5.0}}, {9, {}, {0}, {0.0}}};
  PlayerTimeSeries s("p", recs);
  FeatureConfig c{{}, 7, true};
  auto f = vectorize(s, 10, c, one_item).values;
  CHECK(f[0] == 8);
  CHECK(f[1] == 3);
  CHECK(f[2] == 1);
  CHECK(f[3] == 6);
  CHECK(f[4] == 10);
  auto never = vectorize(PlayerTimeSeries("q", {recs[0]}), 5, c, one_item).values;
  CHECK(never[3] == 4);
}
