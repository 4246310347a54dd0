#include "doctest.h"

#include <filesystem>

#include "itemrec/error.hpp"
#include "itemrec/ert.hpp"
#include "itemrec/synth.hpp"
#include "oracles/oracles.hpp"

using namespace itemrec;

namespace {

std::vector<Eigen::Index> all_rows(Eigen::Index n) {
  std::vector<Eigen::Index> r(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) r[static_cast<std::size_t>(i)] = i;
  return r;
}

/// Random features in [0,1) and one-hot labels from a fixed rule on two columns.
void toy(Eigen::Index n, Eigen::Index f, std::uint64_t seed, Eigen::MatrixXd& X, Eigen::MatrixXd& Y) {
  Rng rng(seed);
  X.resize(n, f);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < f; ++j) X(i, j) = rng.uniform();
  }
  Y = Eigen::MatrixXd::Zero(n, 4);
  for (Eigen::Index i = 0; i < n; ++i) Y(i, (X(i, 0) > 0.5 ? 2 : 0) + (X(i, 1) > 0.5 ? 1 : 0)) = 1;
}

ErtEnsemble empty_ensemble(std::size_t items, ErtParams p = {}) {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < items; ++i) ids.push_back("i" + std::to_string(i));
  return ErtEnsemble(p, SamplerConfig{}, FeatureConfig{{"x"}, 7, false}, ItemCatalog(ids));
}

DecisionTree single_leaf(std::vector<double> v) {
  const int m = static_cast<int>(v.size());
  return DecisionTree({{-1, 0.0, 0, -1}}, std::move(v), m);
}

}  // namespace

TEST_CASE("equal labels make a leaf") {
  Eigen::MatrixXd X = Eigen::MatrixXd::Random(12, 3);
  Eigen::MatrixXd Y = Eigen::MatrixXd::Zero(12, 2);
  Y.col(1).setOnes();
  auto rows = all_rows(12);
  Rng rng(1);
  ErtParams p;
  p.min_samples_leaf = 1;
  CHECK(split_node(X, Y, rows, 0, rng, p).leaf);
}

TEST_CASE("two samples force a separating split") {
  Eigen::MatrixXd X(2, 1);
  X << 0, 1;
  Eigen::MatrixXd Y(2, 2);
  Y << 1, 0, 0, 1;
  ErtParams p;
  p.min_samples_leaf = 1;
  auto rows = all_rows(2);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    auto s = split_node(X, Y, rows, 0, rng, p);
    REQUIRE_FALSE(s.leaf);
    CHECK(s.feature == 0);
    CHECK(s.threshold > 0.0);
    CHECK(s.threshold <= 1.0);
    CHECK(s.gain == doctest::Approx(0.5));
  }
}

TEST_CASE("constant features and small nodes stay leaves") {
  Eigen::MatrixXd X = Eigen::MatrixXd::Ones(6, 3);
  Eigen::MatrixXd Y = Eigen::MatrixXd::Zero(6, 2);
  Y.block(0, 0, 3, 1).setOnes();
  Y.block(3, 1, 3, 1).setOnes();
  ErtParams p;
  p.min_samples_leaf = 1;
  Rng rng(0);
  auto rows = all_rows(6);
  CHECK(split_node(X, Y, rows, 0, rng, p).leaf);
  X.col(2) << 0, 1, 2, 3, 4, 5;
  p.min_samples_leaf = 4;
  CHECK(split_node(X, Y, rows, 0, rng, p).leaf);
  p.min_samples_leaf = 1;
  p.max_depth = 2;
  CHECK(split_node(X, Y, rows, 2, rng, p).leaf);
  CHECK_FALSE(split_node(X, Y, rows, 1, rng, p).leaf);
}

TEST_CASE("split choice replays the documented draws") {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    Eigen::MatrixXd X, Y;
    toy(10, 5, seed, X, Y);
    X.col(3).setConstant(0.25);
    ErtParams p;
    p.k_features = 2;
    p.min_samples_leaf = 1;
    auto rows = all_rows(10);
    Rng a(seed * 7 + 1), b(seed * 7 + 1);
    auto got = split_node(X, Y, rows, 0, a, p);
    auto want = oracle::replay_split(X, Y, rows, b, 2, 1);
    REQUIRE(got.leaf == want.leaf);
    CHECK(got.feature == want.feature);
    CHECK(got.threshold == want.threshold);
    CHECK(a.next() == b.next());
  }
}

TEST_CASE("whole tree replays the documented draws") {
  Eigen::MatrixXd X, Y;
  toy(40, 6, 3, X, Y);
  ErtParams p;
  p.k_features = 3;
  p.min_samples_leaf = 2;
  Rng a(99), b(99);
  auto tree = build_tree(X, Y, a, p);
  std::vector<oracle::ReplayedSplit> want;
  oracle::replay_tree(X, Y, all_rows(40), b, 3, 2, want);
  REQUIRE(tree.nodes().size() == want.size());
  for (std::size_t i = 0; i < want.size(); ++i) {
    CHECK(tree.nodes()[i].is_leaf() == want[i].leaf);
    CHECK(tree.nodes()[i].feature == want[i].feature);
    if (!want[i].leaf) CHECK(tree.nodes()[i].threshold == want[i].threshold);
  }
}

TEST_CASE("one sample gives a single leaf") {
  Eigen::MatrixXd X(1, 2);
  X << 3, 4;
  Eigen::MatrixXd Y(1, 3);
  Y << 0, 1, 1;
  Rng rng(0);
  auto t = build_tree(X, Y, rng, ErtParams{});
  CHECK(t.nodes().size() == 1);
  CHECK(t.leaf_values() == std::vector<double>{0, 1, 1});
}

TEST_CASE("separable toy set is fit exactly by one tree") {
  Eigen::MatrixXd X(8, 1);
  X << 0.1, 0.3, 0.2, 0.4, 0.6, 0.9, 0.7, 0.8;
  Eigen::MatrixXd Y(8, 2);
  for (Eigen::Index i = 0; i < 8; ++i) Y.row(i) << (X(i, 0) < 0.5 ? 1 : 0), (X(i, 0) < 0.5 ? 0 : 1);
  ErtParams p;
  p.min_samples_leaf = 1;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    auto t = build_tree(X, Y, rng, p);
    for (Eigen::Index i = 0; i < 8; ++i) {
      auto leaf = t.route(X.row(i).transpose());
      std::size_t pick = leaf[1] > leaf[0] ? 1 : 0;
      CHECK(Y(i, static_cast<Eigen::Index>(pick)) == 1);
    }
  }
}

TEST_CASE("same seed builds identical trees") {
  Eigen::MatrixXd X, Y;
  toy(60, 4, 8, X, Y);
  ErtParams p;
  Rng a(5), b(5), c(6);
  auto t1 = build_tree(X, Y, a, p);
  CHECK(t1 == build_tree(X, Y, b, p));
  CHECK_FALSE(t1 == build_tree(X, Y, c, p));
}

TEST_CASE("prediction examples") {
  auto e = empty_ensemble(2);
  e.append(single_leaf({0.2, 0.8}));
  Eigen::VectorXd x = Eigen::VectorXd::Zero(11);
  CHECK(e.predict_row(x) == Eigen::Vector2d(0.2, 0.8));
  auto f = empty_ensemble(2);
  f.append(single_leaf({1, 0}));
  f.append(single_leaf({0, 1}));
  CHECK(f.predict_row(x) == Eigen::Vector2d(0.5, 0.5));
  FeatureVector wrong{x, std::make_shared<const FeatureLayout>(FeatureLayout(11, "y"))};
  CHECK_THROWS_AS(f.predict(wrong), MismatchError);
  CHECK_THROWS_AS(f.predict_row(Eigen::VectorXd::Zero(3)), MismatchError);
  CHECK_THROWS_AS(empty_ensemble(2).predict_row(x), Error);
  CHECK_THROWS_AS(f.append(single_leaf({1, 0, 0})), MismatchError);
}

TEST_CASE("predictions equal per-tree traversal averages and stay in bounds") {
  Eigen::MatrixXd X, Y;
  toy(30, 11, 4, X, Y);
  ErtParams p;
  p.min_samples_leaf = 1;
  auto e = empty_ensemble(4, p);
  for (std::uint64_t t = 0; t < 15; ++t) {
    Rng rng(t);
    e.append(build_tree(X, Y, rng, p));
  }
  Rng probe(123);
  for (int i = 0; i < 200; ++i) {
    Eigen::VectorXd x(11);
    for (Eigen::Index j = 0; j < 11; ++j) x[j] = probe.uniform(-0.2, 1.2);
    auto got = e.predict_row(x);
    CHECK(got == oracle::traverse(e, x));
    CHECK((got.array() >= 0).all());
    CHECK((got.array() <= 1).all());
  }
}

TEST_CASE("many trees fit a deterministic rule") {
  Eigen::MatrixXd X, Y;
  toy(50, 11, 12, X, Y);
  ErtParams p;
  p.min_samples_leaf = 1;
  auto e = empty_ensemble(4, p);
  for (std::uint64_t t = 0; t < 100; ++t) {
    Rng rng(derive_seed(7, t));
    e.append(build_tree(X, Y, rng, p));
  }
  int hits = 0;
  for (Eigen::Index i = 0; i < 50; ++i) {
    Eigen::Index best;
    e.predict_row(X.row(i).transpose()).maxCoeff(&best);
    hits += Y(i, best) == 1;
  }
  CHECK(hits >= 48);
}

TEST_CASE("increments add twenty trees each") {
  auto data = generate(default_synth_config(90, 8, 0.2, 2));
  auto config = default_feature_config(data.catalog, data.players);
  ErtParams p;
  p.batch_users = 30;
  p.iterations = 1;
  ErtEnsemble e(p, SamplerConfig{}, config, data.catalog);
  auto one = train_ert(e, data.players);
  CHECK(one.trees().size() == 20);
  CHECK(one.increments() == 1);

  p.iterations = 30;
  auto full = train_ert(ErtEnsemble(p, SamplerConfig{}, config, data.catalog), data.players);
  CHECK(full.trees().size() == 600);
  CHECK(full.increments() == 30);

  auto resumed = train_ert(one, data.players);
  CHECK(resumed.trees().size() == 40);
}

TEST_CASE("growth mixes old prediction with the new trees") {
  auto data = generate(default_synth_config(60, 8, 0.3, 6));
  Featurizer fz(default_feature_config(data.catalog, data.players), data.catalog);
  ErtParams p;
  p.batch_users = 60;
  p.iterations = 2;
  auto e = train_ert(ErtEnsemble(p, SamplerConfig{}, fz.config(), data.catalog), data.players);
  std::vector<std::size_t> batch{0, 5, 9, 14, 22, 31, 40, 51};
  auto grown = train_increment(e, data.players, batch);
  const double n = static_cast<double>(e.trees().size());
  for (const auto& s : data.players) {
    auto x = fz.vectorize(s, s.last_day()).values;
    Eigen::VectorXd fresh = Eigen::VectorXd::Zero(8);
    for (std::size_t t = e.trees().size(); t < grown.trees().size(); ++t) {
      auto leaf = grown.trees()[t].route(x);
      for (std::size_t m = 0; m < 8; ++m) fresh[static_cast<Eigen::Index>(m)] += leaf[m];
    }
    fresh /= 20.0;
    Eigen::VectorXd expected = (n * e.predict_row(x) + 20.0 * fresh) / (n + 20.0);
    CHECK((grown.predict_row(x) - expected).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("threads do not change the ensemble") {
  auto data = generate(default_synth_config(120, 8, 0.3, 13));
  ErtParams p;
  p.batch_users = 40;
  p.iterations = 3;
  ErtEnsemble e(p, SamplerConfig{4, 9}, default_feature_config(data.catalog, data.players), data.catalog);
  auto serial = train_ert(e, data.players, 1);
  auto parallel = train_ert(e, data.players, 4);
  CHECK(serial.trees() == parallel.trees());
  CHECK(serial.to_json().dump() == parallel.to_json().dump());
}

TEST_CASE("zero samples is an error") {
  std::vector<DailyRecord> recs{{0, {}, std::vector<std::int64_t>(2, 0), std::vector<double>(2, 0.0)}};
  std::vector<PlayerTimeSeries> players{PlayerTimeSeries("p", recs)};
  std::vector<std::size_t> batch{0};
  CHECK_THROWS_AS(train_increment(empty_ensemble(2), players, batch), Error);
}

TEST_CASE("json round trip") {
  auto data = generate(default_synth_config(60, 8, 0.3, 1));
  ErtParams p;
  p.batch_users = 30;
  p.iterations = 2;
  auto e = train_ert(ErtEnsemble(p, SamplerConfig{}, default_feature_config(data.catalog, data.players), data.catalog),
                     data.players);
  auto path = std::filesystem::temp_directory_path() / "itemrec_test_ert.json";
  e.save(path);
  auto back = ErtEnsemble::load(path);
  std::filesystem::remove(path);
  CHECK(back.trees() == e.trees());
  CHECK(back.params() == e.params());
  CHECK(back.increments() == e.increments());
  CHECK(back.to_json() == e.to_json());

  auto j = e.to_json();
  j["schema_version"] = 99;
  CHECK_THROWS_AS(ErtEnsemble::from_json(j), MismatchError);
  j = e.to_json();
  j["kind"] = "mlp";
  CHECK_THROWS_AS(ErtEnsemble::from_json(j), MismatchError);
  j = e.to_json();
  j["trees"][0]["left"][0] = 100000;
  CHECK_THROWS_AS(ErtEnsemble::from_json(j), FormatError);
}
