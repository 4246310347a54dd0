#include "itemrec/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <iostream>
#include <optional>
#include <set>
#include <variant>

#include "CLI11.hpp"
#include "itemrec/error.hpp"
#include "itemrec/ert.hpp"
#include "itemrec/evaluation.hpp"
#include "itemrec/mlp.hpp"
#include "itemrec/model_io.hpp"
#include "itemrec/synth.hpp"

namespace itemrec::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

/// Options shared by every stage.
struct Common {
  std::uint64_t seed = 0;
  std::string out = ".";
  unsigned threads = 1;
};

struct Data {
  std::string telemetry = "telemetry.jsonl";
  std::string catalog = "catalog.txt";
};

struct Split {
  double holdout_fraction = 0.0;
  std::string split = "all";
};

struct Options {
  Common common;
  Data data;
  Split split;
  int cutoff_day = 0;

  // simulate
  std::size_t players = 2000;
  std::size_t items = 8;
  double epsilon = 0.0;
  bool full_scale = false;
  std::optional<int> lifetime_min, lifetime_max;
  std::optional<double> purchase_rate, login_rate;

  // featurize / sampling
  int edge_window = 7;
  bool no_scalars = false;
  bool sampled = false;
  int samples_per_player = 4;
  std::string cutoff_pool = "login_days";
  std::string label_mode = "next_purchase_day";

  // train
  std::string model_kind = "ert";
  std::string resume;
  ErtParams ert;
  MlpParams mlp = desk_mlp_params();

  // predict / evaluate
  std::string model_path = "model.json";
  bool heatmap = false;
  std::size_t heatmap_players = 100;
  int window = 50;
  std::vector<int> top_ks{1, 2, 3};
  std::string no_purchase = "exclude";
};

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("--config", "TOML file with option defaults (top level or a [<stage>] section)");
  sub->add_option("--seed", o.common.seed, "Global random seed")->capture_default_str();
  sub->add_option("--out", o.common.out, "Output directory")->capture_default_str();
  sub->add_option("--threads", o.common.threads, "Worker threads (0 = all cores)")->capture_default_str();
}

void add_data(CLI::App* sub, Options& o) {
  sub->add_option("--telemetry", o.data.telemetry, "JSONL telemetry file")->capture_default_str();
  sub->add_option("--catalog", o.data.catalog, "Item catalog file")->capture_default_str();
  sub->add_option("--cutoff-day", o.cutoff_day, "Last day of history visible to the model")->required();
}

void add_split(CLI::App* sub, Options& o, const std::string& default_split) {
  o.split.split = default_split;
  sub->add_option("--holdout-fraction", o.split.holdout_fraction, "Share of players held out for testing")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  sub->add_option("--split", o.split.split, "Players to use: all, train or test")
      ->check(CLI::IsMember({"all", "train", "test"}))
      ->capture_default_str();
}

void add_features(CLI::App* sub, Options& o) {
  sub->add_option("--edge-window", o.edge_window, "Days averaged for the first/last distance")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sub->add_flag("--no-scalars", o.no_scalars, "Omit the lifetime descriptors");
}

void add_sampler(CLI::App* sub, Options& o) {
  sub->add_option("--samples-per-player", o.samples_per_player, "Cutoffs drawn per player")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sub->add_option("--cutoff-pool", o.cutoff_pool, "login_days or all_days")
      ->check(CLI::IsMember({"login_days", "all_days"}))
      ->capture_default_str();
  sub->add_option("--label-mode", o.label_mode, "next_purchase_day or single_item")
      ->check(CLI::IsMember({"next_purchase_day", "single_item"}))
      ->capture_default_str();
}

SamplerConfig sampler_from(const Options& o) {
  SamplerConfig s;
  s.max_samples_per_player = o.samples_per_player;
  s.seed = o.common.seed;
  s.cutoff_pool = o.cutoff_pool == "all_days" ? CutoffPool::AllDays : CutoffPool::LoginDays;
  s.label_mode = o.label_mode == "single_item" ? LabelMode::SingleItem : LabelMode::NextPurchaseDay;
  return s;
}

/// Deterministic per-player bucket in [0, 1).
double split_bucket(const std::string& player_id) {
  return static_cast<double>(mix64(hash_string(player_id)) >> 11) * 0x1.0p-53;
}

std::vector<PlayerTimeSeries> select_split(std::vector<PlayerTimeSeries> players, const Split& split) {
  if (split.split == "all") return players;
  std::vector<PlayerTimeSeries> kept;
  const bool want_test = split.split == "test";
  for (auto& p : players) {
    if ((split_bucket(p.player_id()) < split.holdout_fraction) == want_test) kept.push_back(std::move(p));
  }
  return kept;
}

std::vector<PlayerTimeSeries> load_players(const Options& o, const ItemCatalog& catalog) {
  return select_split(ingest_logs(fs::path(o.data.telemetry), catalog), o.split);
}

/// Histories cut at the cutoff; players who start later are dropped.
std::vector<PlayerTimeSeries> truncate_all(const std::vector<PlayerTimeSeries>& players, int cutoff) {
  std::vector<PlayerTimeSeries> out;
  for (const auto& p : players) {
    if (p.first_day() <= cutoff) out.push_back(truncate(p, cutoff));
  }
  return out;
}

void write_manifest(const fs::path& dir, const std::string& stage, const CLI::App& sub, const Options& o,
                    const std::vector<std::string>& outputs) {
  json options = json::object();
  for (const CLI::Option* opt : sub.get_options()) {
    if (opt->get_name() == "--help" || opt->get_name() == "--config") continue;
    std::string value;
    const auto results = opt->results();
    if (results.empty()) {
      value = opt->get_default_str();
    } else {
      for (std::size_t i = 0; i < results.size(); ++i) value += (i ? "," : "") + results[i];
    }
    options[opt->get_name()] = value;
  }
  json manifest = {{"schema_version", kSchemaVersion},
                   {"kind", "manifest"},
                   {"stage", stage},
                   {"seed", o.common.seed},
                   {"options", options},
                   {"schema_versions",
                    {{"telemetry", "jsonl"}, {"model", kSchemaVersion}, {"report", kSchemaVersion},
                     {"ground_truth", kSchemaVersion}}},
                   {"outputs", outputs}};
  write_json_file(dir / ("manifest_" + stage + ".json"), manifest, 2);
}

fs::path ensure_dir(const std::string& out) {
  fs::path dir(out);
  fs::create_directories(dir);
  return dir;
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// A trained model of either kind behind one prediction interface.
struct LoadedModel {
  std::variant<ErtEnsemble, MlpModel<float>> model;

  const Featurizer& featurizer() const {
    return std::visit([](const auto& m) -> const Featurizer& { return m.featurizer(); }, model);
  }
  std::string kind() const { return model.index() == 0 ? "ert" : "mlp"; }
  Eigen::VectorXd predict(const FeatureVector& f) const {
    return std::visit([&](const auto& m) { return m.predict(f); }, model);
  }
};

LoadedModel load_model(const std::string& path) {
  const json j = read_json_file(path);
  check_header(j, "", "model file " + path);
  const auto kind = j.value("kind", std::string{});
  if (kind == "ert") return {ErtEnsemble::from_json(j)};
  if (kind == "mlp") return {MlpModel<float>::from_json(j)};
  throw MismatchError("model file " + path + ": unknown model kind '" + kind + "'");
}

void require_same_catalog(const ItemCatalog& model, const ItemCatalog& data, const std::string& path) {
  if (!(model == data)) {
    throw MismatchError("catalog " + path + " does not match the model's item catalog (version mismatch)");
  }
}

int cmd_simulate(const CLI::App& sub, Options& o, std::ostream& out) {
  SynthConfig config = o.full_scale ? full_scale_synth_config(o.epsilon, o.common.seed)
                                     : default_synth_config(o.players, o.items, o.epsilon, o.common.seed);
  if (o.full_scale && sub.count("--players") > 0) config.n_players = o.players;
  for (auto& a : config.archetypes) {
    if (o.lifetime_min) a.lifetime_min = *o.lifetime_min;
    if (o.lifetime_max) a.lifetime_max = *o.lifetime_max;
    if (o.purchase_rate) a.purchase_rate = *o.purchase_rate;
    if (o.login_rate) a.login_rate = *o.login_rate;
  }
  const SynthDataset data = generate(config, o.common.threads);
  const fs::path dir = ensure_dir(o.common.out);
  write_logs(dir / "telemetry.jsonl", data.players, data.catalog);
  data.catalog.save(dir / "catalog.txt");
  write_json_file(dir / "ground_truth.json", ground_truth_json(data, config), 2);
  write_manifest(dir, "simulate", sub, o, {"telemetry.jsonl", "catalog.txt", "ground_truth.json"});
  out << "simulated " << data.players.size() << " players, " << data.catalog.size()
      << " items; Bayes top-1 bound " << data.bayes_top1 << '\n';
  return 0;
}

int cmd_featurize(const CLI::App& sub, Options& o, std::ostream& out) {
  const ItemCatalog catalog = ItemCatalog::load(o.data.catalog);
  const auto players = truncate_all(load_players(o, catalog), o.cutoff_day);
  FeatureConfig fc = default_feature_config(catalog, players);
  fc.edge_window = o.edge_window;
  fc.include_scalars = !o.no_scalars;
  const Featurizer featurizer(fc, catalog);
  const fs::path dir = ensure_dir(o.common.out);
  std::ofstream csv(dir / "features.csv");
  if (!csv) throw Error("cannot write features.csv");
  csv << "player_id,cutoff_day";
  for (const auto& name : *featurizer.layout()) csv << ',' << name;
  if (o.sampled) {
    for (const auto& item : catalog.items()) csv << ",label:" << item;
  }
  csv << '\n';
  std::size_t rows = 0;
  auto write_row = [&](const std::string& id, int cutoff, const Eigen::VectorXd& values, const Eigen::VectorXd* label) {
    csv << id << ',' << cutoff;
    for (Eigen::Index i = 0; i < values.size(); ++i) csv << ',' << fmt_double(values[i]);
    if (label) {
      for (Eigen::Index i = 0; i < label->size(); ++i) csv << ',' << static_cast<int>((*label)[i]);
    }
    csv << '\n';
    ++rows;
  };
  if (o.sampled) {
    std::vector<std::size_t> all(players.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    const SampleSet set = build_sample_set(players, all, sampler_from(o), featurizer, 0, o.common.threads);
    for (Eigen::Index r = 0; r < set.rows(); ++r) {
      const Eigen::VectorXd f = set.features.row(r).transpose();
      const Eigen::VectorXd l = set.labels.row(r).transpose();
      write_row(set.player_ids[static_cast<std::size_t>(r)], set.cutoffs[static_cast<std::size_t>(r)], f, &l);
    }
  } else {
    for (const auto& p : players) write_row(p.player_id(), o.cutoff_day, featurizer.vectorize(p, o.cutoff_day).values, nullptr);
  }
  write_manifest(dir, "featurize", sub, o, {"features.csv"});
  out << "wrote " << rows << " feature rows of width " << featurizer.dimension() << '\n';
  return 0;
}

int cmd_train(const CLI::App& sub, Options& o, std::ostream& out) {
  const ItemCatalog catalog = ItemCatalog::load(o.data.catalog);
  std::optional<LoadedModel> resumed;
  if (!o.resume.empty()) {
    resumed = load_model(o.resume);
    if (resumed->kind() != o.model_kind) {
      throw MismatchError("resume file " + o.resume + " holds a '" + resumed->kind() + "' model, not '" +
                          o.model_kind + "'");
    }
    require_same_catalog(resumed->featurizer().catalog(), catalog, o.data.catalog);
  }
  const auto players = truncate_all(load_players(o, catalog), o.cutoff_day);
  if (players.empty()) throw Error("no players with history before the cutoff day");
  FeatureConfig fc = default_feature_config(catalog, players);
  fc.edge_window = o.edge_window;
  fc.include_scalars = !o.no_scalars;
  const SamplerConfig sampler = sampler_from(o);
  const fs::path dir = ensure_dir(o.common.out);

  if (o.model_kind == "ert") {
    ErtParams params = o.ert;
    params.seed = o.common.seed;
    ErtEnsemble ensemble = resumed ? std::get<ErtEnsemble>(resumed->model) : ErtEnsemble(params, sampler, fc, catalog);
    ensemble = train_ert(std::move(ensemble), players, o.common.threads, [&](std::size_t it, std::size_t total) {
      out << "ert increment " << it << "/" << total << '\n';
    });
    ensemble.save(dir / "model.json");
    out << "trained ERT with " << ensemble.trees().size() << " trees\n";
  } else {
    MlpParams params = o.mlp;
    params.seed = o.common.seed;
    MlpModel<float> model = resumed ? std::get<MlpModel<float>>(resumed->model) : MlpModel<float>(params, sampler, fc, catalog);
    model = train_mlp(std::move(model), players, o.common.threads, [&](std::size_t it, double loss) {
      out << "mlp iteration " << it << " loss " << loss << '\n';
    });
    model.save(dir / "model.json");
    out << "trained MLP for " << model.iterations_done() << " iterations\n";
  }
  write_manifest(dir, "train", sub, o, {"model.json"});
  return 0;
}

void write_heatmap(const fs::path& path, const std::vector<Eigen::VectorXd>& rows, std::size_t items) {
  constexpr std::size_t cell_w = 16, cell_h = 4;
  const std::size_t width = items * cell_w, height = rows.size() * cell_h;
  std::ofstream pgm(path, std::ios::binary);
  if (!pgm) throw Error("cannot write " + path.string());
  pgm << "P5\n" << width << ' ' << height << "\n255\n";
  std::vector<unsigned char> line(width);
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < items; ++i) {
      const double p = std::clamp(row[static_cast<Eigen::Index>(i)], 0.0, 1.0);
      const auto shade = static_cast<unsigned char>(std::lround(255.0 * (1.0 - p)));
      std::fill_n(line.begin() + static_cast<std::ptrdiff_t>(i * cell_w), cell_w, shade);
    }
    for (std::size_t y = 0; y < cell_h; ++y) pgm.write(reinterpret_cast<const char*>(line.data()), static_cast<std::streamsize>(width));
  }
}

int cmd_predict(const CLI::App& sub, Options& o, std::ostream& out) {
  const LoadedModel model = load_model(o.model_path);
  const ItemCatalog catalog = ItemCatalog::load(o.data.catalog);
  require_same_catalog(model.featurizer().catalog(), catalog, o.data.catalog);
  const auto players = load_players(o, catalog);
  const fs::path dir = ensure_dir(o.common.out);
  std::ofstream csv(dir / "predictions.csv");
  if (!csv) throw Error("cannot write predictions.csv");
  csv << "player_id";
  for (const auto& item : catalog.items()) csv << ',' << item;
  csv << '\n';
  std::vector<Eigen::VectorXd> shown;
  std::size_t rows = 0;
  for (const auto& p : players) {
    if (p.first_day() > o.cutoff_day) continue;
    const Eigen::VectorXd probs = model.predict(model.featurizer().vectorize(p, o.cutoff_day));
    csv << p.player_id();
    for (Eigen::Index i = 0; i < probs.size(); ++i) csv << ',' << fmt_double(probs[i]);
    csv << '\n';
    if (shown.size() < o.heatmap_players) shown.push_back(probs);
    ++rows;
  }
  std::vector<std::string> outputs{"predictions.csv"};
  if (o.heatmap) {
    write_heatmap(dir / "heatmap.pgm", shown, catalog.size());
    outputs.push_back("heatmap.pgm");
  }
  write_manifest(dir, "predict", sub, o, outputs);
  out << "wrote predictions for " << rows << " players\n";
  return 0;
}

int cmd_evaluate(const CLI::App& sub, Options& o, std::ostream& out) {
  const LoadedModel model = load_model(o.model_path);
  const ItemCatalog catalog = ItemCatalog::load(o.data.catalog);
  require_same_catalog(model.featurizer().catalog(), catalog, o.data.catalog);
  const auto players = load_players(o, catalog);
  EvalConfig config;
  config.cutoff = o.cutoff_day;
  config.window = o.window;
  config.top_ks = o.top_ks;
  config.no_purchase = o.no_purchase == "miss" ? NoPurchasePolicy::CountAsMiss : NoPurchasePolicy::Exclude;
  const auto report = evaluate([&](const FeatureVector& f) { return model.predict(f); }, players,
                               model.featurizer(), config, model.kind() == "ert" ? "ERT" : "DNN", o.common.threads);
  const fs::path dir = ensure_dir(o.common.out);
  {
    std::ofstream txt(dir / "report.txt");
    if (!txt) throw Error("cannot write report.txt");
    txt << report.to_text();
  }
  write_json_file(dir / "report.json", report.to_json(), 2);
  write_manifest(dir, "evaluate", sub, o, {"report.txt", "report.json"});
  out << report.to_text();
  return 0;
}

/// Prepends `--key value` for each config entry the subcommand knows and the
/// command line does not already set. Unknown keys are ignored.
std::vector<std::string> expand_config(const CLI::App& app, const std::vector<std::string>& args) {
  if (args.empty()) return args;
  const CLI::App* sub = app.get_subcommand_no_throw(args[0]);
  if (sub == nullptr) return args;
  std::string file;
  std::set<std::string> given;
  for (std::size_t i = 1; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (!a.starts_with("--")) continue;
    const auto eq = a.find('=');
    const std::string name = a.substr(0, eq);
    given.insert(name);
    if (name == "--config") file = eq != std::string::npos ? a.substr(eq + 1) : (i + 1 < args.size() ? args[i + 1] : "");
  }
  if (file.empty()) return args;
  if (!fs::exists(file)) throw CLI::FileError::Missing(file);
  std::vector<std::string> out{args[0]};
  for (const auto& item : CLI::ConfigTOML().from_file(file)) {
    if (!item.parents.empty() && item.parents != std::vector<std::string>{args[0]}) continue;
    const std::string name = "--" + item.name;
    const CLI::Option* opt = sub->get_option_no_throw(name);
    if (opt == nullptr || name == "--config" || given.count(name) > 0) continue;
    if (opt->get_expected_max() == 0) {
      if (item.inputs.size() == 1) out.push_back(name + "=" + item.inputs[0]);
      continue;
    }
    out.push_back(name);
    out.insert(out.end(), item.inputs.begin(), item.inputs.end());
  }
  out.insert(out.end(), args.begin() + 1, args.end());
  return out;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Next-purchase item recommendation pipeline", "itemrec"};
  app.require_subcommand(1);

  auto* simulate = app.add_subcommand("simulate", "Generate synthetic telemetry with planted structure");
  add_common(simulate, o);
  simulate->add_option("--players", o.players, "Number of players")->check(CLI::PositiveNumber)->capture_default_str();
  simulate->add_option("--items", o.items, "Number of items")->check(CLI::PositiveNumber)->capture_default_str();
  simulate->add_option("--epsilon", o.epsilon, "Probability a purchase ignores the archetype")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  simulate->add_flag("--full-scale", o.full_scale, "33,488 players with ~900-day lifetimes");
  simulate->add_option("--lifetime-min", o.lifetime_min, "Minimum lifetime in days");
  simulate->add_option("--lifetime-max", o.lifetime_max, "Maximum lifetime in days");
  simulate->add_option("--purchase-rate", o.purchase_rate, "Purchase probability per login day");
  simulate->add_option("--login-rate", o.login_rate, "Login probability per day");

  auto* featurize = app.add_subcommand("featurize", "Write feature vectors as CSV");
  add_common(featurize, o);
  add_data(featurize, o);
  add_split(featurize, o, "all");
  add_features(featurize, o);
  add_sampler(featurize, o);
  featurize->add_flag("--sampled", o.sampled, "Emit sampled training rows with labels instead of one row per player");

  auto* train = app.add_subcommand("train", "Train an ERT or MLP model on history up to the cutoff day");
  add_common(train, o);
  add_data(train, o);
  add_split(train, o, "train");
  add_features(train, o);
  add_sampler(train, o);
  train->add_option("--model", o.model_kind, "ert or mlp")->check(CLI::IsMember({"ert", "mlp"}))->capture_default_str();
  train->add_option("--resume", o.resume, "Continue training an existing model file");
  train->add_option("--batch-users", o.ert.batch_users, "Players per minibatch")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train->add_option("--iterations", o.ert.iterations, "Minibatch iterations")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train->add_option("--trees-per-iter", o.ert.trees_per_iteration, "Trees added per iteration (ert)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train->add_option("--k-features", o.ert.k_features, "Candidate features per node, 0 = ceil(sqrt(F)) (ert)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  train->add_option("--min-samples-leaf", o.ert.min_samples_leaf, "Minimum samples per leaf (ert)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train->add_option("--max-depth", o.ert.max_depth, "Depth limit, 0 = unbounded (ert)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  train->add_option("--hidden", o.mlp.hidden_sizes, "Hidden layer widths (mlp)")->capture_default_str();
  train->add_flag("--full-scale", o.full_scale, "Full-scale network: 2 x 2048 units, lr 0.01 (mlp)");
  train->add_option("--input-clip", o.mlp.input_clip, "Clamp for standardized inputs, 0 = off (mlp)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  train->add_option("--dropout-hidden", o.mlp.dropout_hidden, "Hidden-layer dropout rate (mlp)")->capture_default_str();
  train->add_option("--dropout-input", o.mlp.dropout_input, "Input dropout rate (mlp)")->capture_default_str();
  train->add_option("--learning-rate", o.mlp.learning_rate, "SGD learning rate (mlp)")->capture_default_str();
  train->add_option("--repeats", o.mlp.repeats_per_iteration, "Sweeps per iteration (mlp)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train->add_option("--sgd-batch", o.mlp.sgd_batch, "SGD minibatch size (mlp)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  auto* predict = app.add_subcommand("predict", "Write per-player, per-item probabilities");
  add_common(predict, o);
  add_data(predict, o);
  add_split(predict, o, "all");
  predict->add_option("--model", o.model_path, "Model file")->capture_default_str();
  predict->add_flag("--heatmap", o.heatmap, "Also write a grayscale PGM heatmap (darker = more likely)");
  predict->add_option("--heatmap-players", o.heatmap_players, "Players shown in the heatmap")->capture_default_str();

  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score a model over the window after the cutoff day");
  add_common(evaluate_cmd, o);
  add_data(evaluate_cmd, o);
  add_split(evaluate_cmd, o, "test");
  evaluate_cmd->add_option("--model", o.model_path, "Model file")->capture_default_str();
  evaluate_cmd->add_option("--window", o.window, "Evaluation window in days")->check(CLI::PositiveNumber)->capture_default_str();
  evaluate_cmd->add_option("--top-k", o.top_ks, "Top-k cut-offs")->capture_default_str();
  evaluate_cmd->add_option("--no-purchase", o.no_purchase, "exclude or miss")
      ->check(CLI::IsMember({"exclude", "miss"}))
      ->capture_default_str();

  try {
    const auto expanded = expand_config(app, args);
    app.parse(std::vector<std::string>(expanded.rbegin(), expanded.rend()));
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  CLI::App* chosen = app.get_subcommands().front();
  const std::string stage = chosen->get_name();
  // With no holdout every player is in both the train and the test split.
  if (o.split.holdout_fraction == 0.0) o.split.split = "all";
  if (stage == "train" && o.full_scale) {
    const MlpParams full;
    if (chosen->count("--hidden") == 0) o.mlp.hidden_sizes = full.hidden_sizes;
    if (chosen->count("--learning-rate") == 0) o.mlp.learning_rate = full.learning_rate;
  }
  o.mlp.batch_users = o.ert.batch_users;
  o.mlp.iterations = o.ert.iterations;
  try {
    if (stage == "simulate") return cmd_simulate(*chosen, o, out);
    if (stage == "featurize") return cmd_featurize(*chosen, o, out);
    if (stage == "train") return cmd_train(*chosen, o, out);
    if (stage == "predict") return cmd_predict(*chosen, o, out);
    return cmd_evaluate(*chosen, o, out);
  } catch (const std::exception& e) {
    err << "itemrec " << stage << ": error: " << e.what() << '\n';
    return 1;
  }
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

int run(int argc, char** argv) { return run(argc, const_cast<const char* const*>(argv)); }

}  // namespace itemrec::cli
