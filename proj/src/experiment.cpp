#include "idslab/experiment.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "idslab/error.hpp"
#include "idslab/synth_eval.hpp"

namespace idslab {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kToolVersion = "0.1.0";

// Offsets from the experiment seed, one per random stream.
struct Seeds {
  std::uint64_t gan, subset, holdout, unconditional, conditional, detection, ppo, env, baselines;

  explicit Seeds(std::uint64_t s)
      : gan(s), subset(s + 1), holdout(s + 2), unconditional(s + 3), conditional(s + 4), detection(s + 5),
        ppo(s + 6), env(s + 7), baselines(s + 8) {}

  json to_json() const {
    return {{"gan", gan},
            {"gan_subset", subset},
            {"fidelity_holdout", holdout},
            {"sample_unconditional", unconditional},
            {"sample_conditional", conditional},
            {"detection", detection},
            {"ppo", ppo},
            {"env", env},
            {"baselines", baselines}};
  }
};

void log(const std::string& msg) { std::cerr << "[idslab] " << msg << '\n'; }

fs::path out_path(const ExperimentConfig& c, std::string_view rel) { return c.output_dir / fs::path(rel); }

fs::path require(const ExperimentConfig& c, std::string_view rel, std::string_view producer) {
  auto p = out_path(c, rel);
  if (!fs::exists(p))
    throw DependencyError("missing " + p.string() + " (run '" + std::string(producer) + "' first)");
  return p;
}

std::ofstream open_out(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  return out;
}

void write_json(const fs::path& p, const json& j) {
  auto out = open_out(p);
  out << j.dump(2) << '\n';
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw std::runtime_error("cannot open " + p.string());
  return json::parse(in);
}

AttackMap attack_map(const ExperimentConfig& c) {
  return c.attack_map.empty() ? AttackMap::load_default() : AttackMap::load(c.attack_map);
}

struct Labeled {
  std::vector<RawRecord> records;
  std::vector<ClassLabel> labels;
};

Labeled load_raw(const ExperimentConfig& c, const std::string& file) {
  if (c.data_dir.empty()) throw ValidationError("data_dir is not set (use --set data_dir=... or IDSLAB_DATA_DIR)");
  auto p = c.data_dir / file;
  if (!fs::exists(p)) throw ValidationError("dataset file not found: " + p.string());
  Labeled l;
  l.records = parse_kdd_file(p);
  l.labels = map_labels(attack_map(c), l.records);
  return l;
}

Labeled subset(const Labeled& l, std::span<const std::size_t> idx) {
  Labeled out;
  for (auto i : idx) {
    out.records.push_back(l.records[i]);
    out.labels.push_back(l.labels[i]);
  }
  return out;
}

std::vector<std::size_t> gan_training_rows(const ExperimentConfig& c, const Labeled& train) {
  return stratified_subset(train.labels, c.gan_subset_fraction, Seeds(c.seed).subset);
}

/// Real rows not used for GAN training, subsampled to the GAN subset's size.
std::vector<std::size_t> holdout_rows(const ExperimentConfig& c, const Labeled& train) {
  auto used = gan_training_rows(c, train);
  std::vector<char> taken(train.labels.size(), 0);
  for (auto i : used) taken[i] = 1;
  std::vector<std::size_t> rest;
  std::vector<ClassLabel> rest_labels;
  for (std::size_t i = 0; i < taken.size(); ++i)
    if (!taken[i]) {
      rest.push_back(i);
      rest_labels.push_back(train.labels[i]);
    }
  if (rest.empty()) throw ValidationError("gan_subset_fraction leaves no held-out rows");
  const double f = std::min(1.0, c.gan_subset_fraction / (1.0 - c.gan_subset_fraction));
  std::vector<std::size_t> out;
  for (auto j : stratified_subset(rest_labels, f, Seeds(c.seed).holdout)) out.push_back(rest[j]);
  return out;
}

Labeled load_synthetic(const fs::path& p) {
  Labeled l;
  l.records = parse_kdd_file(p);
  l.labels = map_labels(AttackMap::load_default().with_class_symbols(), l.records);
  return l;
}

fs::path synthetic_file(const ExperimentConfig& c) {
  return c.source == TrainingSource::synthetic_unconditional ? require(c, artifacts::kUnconditional, "gan-sample")
                                                              : require(c, artifacts::kConditional, "gan-sample");
}

EncodedDataset training_set(const ExperimentConfig& c) {
  if (c.source == TrainingSource::real) return load_encoded(require(c, artifacts::kTrainEncoded, "preprocess"));
  auto t = load_transformer(require(c, artifacts::kTransformer, "preprocess"));
  auto syn = load_synthetic(synthetic_file(c));
  return encode_dataset(t, syn.records, syn.labels);
}

std::vector<int> targets(const EncodedDataset& d, IdsMode mode) {
  std::vector<int> y;
  y.reserve(d.size());
  for (auto l : d.labels) y.push_back(target_for(l, mode));
  return y;
}

void write_result(const ExperimentConfig& c, std::string_view model, const ConfusionMatrix& cm) {
  auto s = summarize(cm);
  json j = {{"dataset", dataset_label(c.source)},
            {"mode", to_string(c.mode)},
            {"model", model},
            {"accuracy", s.accuracy},
            {"f1_macro", s.f1_macro},
            {"f1_weighted", s.f1_weighted},
            {"f1_per_class", s.f1_per_class}};
  write_json(out_path(c, "results/" + cell_name(c) + "__" + std::string(model) + ".json"), j);
  log(std::string(model) + " accuracy " + format_metric(s.accuracy) + ", weighted F1 " + format_metric(s.f1_weighted));
}

// ---------------------------------------------------------------------------

void preprocess(const ExperimentConfig& c) {
  auto train = load_raw(c, c.train_file);
  auto test = load_raw(c, c.test_file);
  std::vector<Row> rows;
  rows.reserve(train.records.size());
  for (const auto& r : train.records) rows.push_back(r.features);
  auto t = Transformer::fit(nslkdd_schema(), rows);
  fs::create_directories(out_path(c, "prep"));
  save_transformer(t, out_path(c, artifacts::kTransformer));
  auto enc_train = encode_dataset(t, train.records, train.labels);
  auto enc_test = encode_dataset(t, test.records, test.labels);
  save_encoded(enc_train, out_path(c, artifacts::kTrainEncoded));
  save_encoded(enc_test, out_path(c, artifacts::kTestEncoded));
  log("preprocess: " + std::to_string(train.records.size()) + " train / " + std::to_string(test.records.size()) +
      " test records, " + std::to_string(t.total_dim()) + " encoded dims");
}

void gan_train(const ExperimentConfig& c) {
  auto train = load_raw(c, c.train_file);
  auto sub = subset(train, gan_training_rows(c, train));
  auto table = labeled_table(sub.records, sub.labels);
  GanConfig g = c.gan;
  g.seed = Seeds(c.seed).gan;
  fs::create_directories(out_path(c, "gan"));
  log("gan-train: " + std::to_string(table.size()) + " rows, " + std::to_string(g.epochs) + " epochs");
  auto result = train_gan(table, g);
  save_gan(result.model, out_path(c, artifacts::kGanModel));
  auto out = open_out(out_path(c, artifacts::kGanLosses));
  out << "step,critic_loss,generator_loss\n";
  for (const auto& p : result.losses) {
    std::ostringstream line;
    line.precision(9);
    line << p.step << ',' << p.critic_loss << ',' << p.generator_loss << '\n';
    out << line.str();
  }
}

void gan_sample(const ExperimentConfig& c) {
  auto model = load_gan(require(c, artifacts::kGanModel, "gan-train"));
  const Seeds seeds(c.seed);
  auto unconditional = sample_unconditional(model, c.unconditional_rows, seeds.unconditional);
  fs::create_directories(out_path(c, "synthetic"));
  export_synthetic(unconditional, out_path(c, artifacts::kUnconditional));

  std::vector<LabeledRow> conditional;
  for (auto cls : kAllClasses) {
    for (auto& row : sample_conditional(model, cls, c.conditional_rows_per_class, seeds.conditional + class_id(cls)))
      conditional.push_back({std::move(row), cls});
  }
  export_synthetic(conditional, out_path(c, artifacts::kConditional));
  log("gan-sample: " + std::to_string(unconditional.size()) + " unconditional, " +
      std::to_string(conditional.size()) + " conditional rows");
}

void gan_eval(const ExperimentConfig& c) {
  auto unconditional_path = require(c, artifacts::kUnconditional, "gan-sample");
  auto conditional_path = require(c, artifacts::kConditional, "gan-sample");
  auto train = load_raw(c, c.train_file);
  auto holdout = subset(train, holdout_rows(c, train));
  auto real = labeled_table(holdout.records, holdout.labels);
  DetectionOptions opts;
  opts.seed = Seeds(c.seed).detection;

  auto out = open_out(out_path(c, artifacts::kFidelity));
  out << "dataset,cstest,kstest,kstest_extended,detection\n";
  for (const auto& [name, path] : {std::pair{dataset_label(TrainingSource::synthetic_unconditional), unconditional_path},
                                   std::pair{dataset_label(TrainingSource::synthetic_conditional), conditional_path}}) {
    auto syn = load_synthetic(path);
    auto report = evaluate_fidelity(real, labeled_table(syn.records, syn.labels), opts);
    out << name << ',' << format_metric(report.cstest) << ',' << format_metric(report.kstest) << ','
        << format_metric(report.kstest_extended) << ',' << format_metric(report.detection) << '\n';
    log("gan-eval " + std::string(name) + ": CSTest " + format_metric(report.cstest) + ", KSTest " +
        format_metric(report.kstest) + ", detection " + format_metric(report.detection));
  }
}

void drl_train(const ExperimentConfig& c) {
  auto test = load_encoded(require(c, artifacts::kTestEncoded, "preprocess"));
  auto data = std::make_shared<const EncodedDataset>(training_set(c));
  const Seeds seeds(c.seed);
  IdsEnv env(data, {c.mode, c.episode_cap, seeds.env});
  auto policy = make_policy(env.observation_size(), action_count(c.mode),
                            nn::activation_from_string(c.policy_activation), seeds.ppo);
  PpoConfig ppo = c.ppo;
  ppo.seed = seeds.ppo;
  log("drl-train " + cell_name(c) + ": " + std::to_string(data->size()) + " training rows, " +
      std::to_string(ppo.total_timesteps) + " timesteps");
  auto tlog = train(env, policy, ppo, &test);
  write_json(out_path(c, "drl/" + cell_name(c) + "/policy.json"), policy.to_json());
  auto out = open_out(out_path(c, "curves/" + cell_name(c) + ".csv"));
  tlog.write_csv(out);
}

void drl_eval(const ExperimentConfig& c) {
  auto policy = PolicyNet::from_json(read_json(require(c, "drl/" + cell_name(c) + "/policy.json", "drl-train")));
  auto test = load_encoded(require(c, artifacts::kTestEncoded, "preprocess"));
  write_result(c, "drl", evaluate(policy, test, c.mode));
}

void run_baselines(const ExperimentConfig& c) {
  auto test = load_encoded(require(c, artifacts::kTestEncoded, "preprocess"));
  auto data = training_set(c);
  const auto y = targets(data, c.mode);
  const auto truth = targets(test, c.mode);
  const int k = action_count(c.mode);
  const auto seed = Seeds(c.seed).baselines;
  for (auto kind : c.baselines) {
    log("baselines: training " + std::string(to_string(kind)));
    std::optional<Classifier> model;
    switch (kind) {
      case ClassifierKind::logreg: model = train_logreg(data.features, y, {.seed = seed, .num_classes = k}); break;
      case ClassifierKind::tree: model = train_tree(data.features, y, {.seed = seed, .num_classes = k}); break;
      case ClassifierKind::mlp: model = train_mlp(data.features, y, {.seed = seed, .num_classes = k}); break;
    }
    write_result(c, to_string(kind), confusion(model->predict(test.features), truth, k));
  }
}

std::vector<fs::path> sorted_files(const fs::path& root, const fs::path& dir) {
  std::vector<fs::path> out;
  if (!fs::exists(dir)) return out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) out.push_back(fs::relative(e.path(), root));
  std::sort(out.begin(), out.end());
  return out;
}

void report(const ExperimentConfig& c) {
  auto results = sorted_files(c.output_dir, out_path(c, "results"));
  if (results.empty()) throw DependencyError("no results under " + out_path(c, "results").string() +
                                             " (run 'drl-eval' or 'baselines' first)");
  auto perf = open_out(out_path(c, artifacts::kPerformance));
  auto per_class = open_out(out_path(c, artifacts::kPerClass));
  perf << "dataset,mode,model,accuracy,f1_macro,f1_weighted\n";
  per_class << "dataset,mode,model,f1_class0,f1_class1,f1_class2,f1_class3,f1_class4\n";
  for (const auto& rel : results) {
    auto j = read_json(c.output_dir / rel);
    const std::string head = j.at("dataset").get<std::string>() + ',' + j.at("mode").get<std::string>() + ',' +
                             j.at("model").get<std::string>();
    perf << head << ',' << format_metric(j.at("accuracy").get<double>()) << ','
         << format_metric(j.at("f1_macro").get<double>()) << ',' << format_metric(j.at("f1_weighted").get<double>())
         << '\n';
    auto f1 = j.at("f1_per_class").get<std::vector<double>>();
    per_class << head;
    for (int k = 0; k < kClassCount; ++k) {
      per_class << ',';
      if (k < static_cast<int>(f1.size())) per_class << format_metric(f1[k]);
    }
    per_class << '\n';
  }
  perf.close();
  per_class.close();

  json cfg = c.to_json();
  cfg.erase("output_dir");
  json files = json::array();
  for (const auto& f : sorted_files(c.output_dir, c.output_dir))
    if (f != fs::path(artifacts::kManifest)) files.push_back(f.generic_string());
  write_json(out_path(c, artifacts::kManifest),
             {{"tool", "idslab"},
              {"manifest_version", 1},
              {"versions", {{"idslab", kToolVersion}, {"idsm", 1}, {"transformer", 1}, {"gan", 1}, {"policy", 1},
                            {"classifier", 1}, {"densenet", 1}}},
              {"config", cfg},
              {"seeds", Seeds(c.seed).to_json()},
              {"files", files}});
  log("report: " + std::to_string(results.size()) + " result rows");
}

/// Recursively rejects keys absent from `reference`.
void check_keys(const json& given, const json& reference, const std::string& prefix, std::vector<std::string>& bad) {
  for (const auto& [key, value] : given.items()) {
    if (!reference.contains(key)) {
      bad.push_back(prefix + key);
      continue;
    }
    if (value.is_object() && reference.at(key).is_object()) check_keys(value, reference.at(key), prefix + key + ".", bad);
  }
}

bool seeded(const fs::path& config_file, std::span<const std::string> assignments) {
  for (const auto& a : assignments)
    if (a.rfind("seed=", 0) == 0) return true;
  if (config_file.empty()) return false;
  std::ifstream in(config_file);
  return json::parse(in, nullptr, false).contains("seed");
}

}  // namespace

// ---------------------------------------------------------------------------

std::string_view to_string(TrainingSource s) {
  switch (s) {
    case TrainingSource::real: return "real";
    case TrainingSource::synthetic_unconditional: return "synthetic-unconditional";
    case TrainingSource::synthetic_conditional: return "synthetic-conditional";
  }
  return "real";
}

TrainingSource training_source_from_string(std::string_view s) {
  for (auto v : {TrainingSource::real, TrainingSource::synthetic_unconditional, TrainingSource::synthetic_conditional})
    if (to_string(v) == s) return v;
  throw ArgumentError("unknown training source '" + std::string(s) + "'");
}

GanConfig ExperimentConfig::desk_gan() {
  GanConfig g;
  g.epochs = 30;
  return g;
}

void ExperimentConfig::validate() const {
  std::vector<std::string> problems;
  if (output_dir.empty()) problems.push_back("output_dir: must be set");
  if (!(gan_subset_fraction > 0.0 && gan_subset_fraction < 1.0)) problems.push_back("gan_subset_fraction: must lie in (0,1)");
  if (episode_cap < 1) problems.push_back("episode_cap: must be >= 1");
  if (policy_activation != "relu" && policy_activation != "sigmoid")
    problems.push_back("policy_activation: must be relu or sigmoid");
  if (!attack_map.empty() && !fs::exists(attack_map)) problems.push_back("attack_map: file not found");
  try {
    gan.validate();
  } catch (const std::exception& e) {
    problems.push_back(std::string("gan: ") + e.what());
  }
  try {
    ppo.validate();
  } catch (const std::exception& e) {
    problems.push_back(std::string("ppo: ") + e.what());
  }
  if (problems.empty()) return;
  std::string msg = "invalid configuration:";
  for (const auto& p : problems) msg += "\n  " + p;
  throw ValidationError(msg);
}

json ExperimentConfig::to_json() const {
  json g = gan.to_json();
  g.erase("seed");
  json p = ppo.to_json();
  p.erase("seed");
  json kinds = json::array();
  for (auto k : baselines) kinds.push_back(to_string(k));
  return {{"data_dir", data_dir.string()},
          {"train_file", train_file},
          {"test_file", test_file},
          {"attack_map", attack_map.string()},
          {"output_dir", output_dir.string()},
          {"mode", to_string(mode)},
          {"source", to_string(source)},
          {"seed", seed},
          {"gan_subset_fraction", gan_subset_fraction},
          {"unconditional_rows", unconditional_rows},
          {"conditional_rows_per_class", conditional_rows_per_class},
          {"gan", g},
          {"ppo", p},
          {"episode_cap", episode_cap},
          {"policy_activation", policy_activation},
          {"baselines", kinds}};
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("configuration must be a JSON object");
  ExperimentConfig c;
  std::vector<std::string> bad;
  check_keys(j, c.to_json(), "", bad);
  if (!bad.empty()) {
    std::string msg = "unknown configuration keys:";
    for (const auto& k : bad) msg += " " + k;
    throw ValidationError(msg);
  }
  try {
    c.data_dir = j.value("data_dir", c.data_dir.string());
    c.train_file = j.value("train_file", c.train_file);
    c.test_file = j.value("test_file", c.test_file);
    c.attack_map = j.value("attack_map", c.attack_map.string());
    c.output_dir = j.value("output_dir", c.output_dir.string());
    if (j.contains("mode")) c.mode = ids_mode_from_string(j.at("mode").get<std::string>());
    if (j.contains("source")) c.source = training_source_from_string(j.at("source").get<std::string>());
    c.seed = j.value("seed", c.seed);
    c.gan_subset_fraction = j.value("gan_subset_fraction", c.gan_subset_fraction);
    c.unconditional_rows = j.value("unconditional_rows", c.unconditional_rows);
    c.conditional_rows_per_class = j.value("conditional_rows_per_class", c.conditional_rows_per_class);
    if (j.contains("gan")) {
      json g = c.gan.to_json();
      g.merge_patch(j.at("gan"));
      c.gan = GanConfig::from_json(g);
    }
    if (j.contains("ppo")) {
      json p = c.ppo.to_json();
      p.merge_patch(j.at("ppo"));
      c.ppo = PpoConfig::from_json(p);
    }
    c.episode_cap = j.value("episode_cap", c.episode_cap);
    c.policy_activation = j.value("policy_activation", c.policy_activation);
    if (j.contains("baselines")) {
      c.baselines.clear();
      for (const auto& k : j.at("baselines")) c.baselines.push_back(classifier_kind_from_string(k.get<std::string>()));
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("configuration type error: ") + e.what());
  } catch (const ArgumentError& e) {
    throw ValidationError(std::string("invalid configuration: ") + e.what());
  }
  c.validate();
  return c;
}

void apply_paper_scale(json& config) {
  config["gan"]["epochs"] = 100;
  config["unconditional_rows"] = 200000;
  config["conditional_rows_per_class"] = 20000;
  config["ppo"]["total_timesteps"] = 2000000;
}

void apply_overrides(json& config, std::span<const std::string> assignments) {
  for (const auto& a : assignments) {
    const auto eq = a.find('=');
    if (eq == std::string::npos || eq == 0) throw ValidationError("--set expects key=value, got '" + a + "'");
    const std::string key = a.substr(0, eq);
    const std::string raw = a.substr(eq + 1);
    json value = json::parse(raw, nullptr, false);
    if (value.is_discarded()) value = raw;
    json* node = &config;
    std::size_t start = 0;
    while (true) {
      const auto dot = key.find('.', start);
      const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
      if (part.empty()) throw ValidationError("--set: malformed key '" + key + "'");
      if (dot == std::string::npos) {
        (*node)[part] = value;
        break;
      }
      node = &(*node)[part];
      if (!node->is_object() && !node->is_null()) throw ValidationError("--set: '" + key + "' descends into a scalar");
      start = dot + 1;
    }
  }
}

ExperimentConfig resolve_config(const fs::path& config_file, bool paper_scale, std::span<const std::string> assignments) {
  ExperimentConfig defaults;
  if (const char* env = std::getenv("IDSLAB_DATA_DIR"); env && *env) defaults.data_dir = env;
  json j = defaults.to_json();
  if (!config_file.empty()) {
    if (!fs::exists(config_file)) throw ValidationError("config file not found: " + config_file.string());
    std::ifstream in(config_file);
    json file = json::parse(in, nullptr, false);
    if (file.is_discarded() || !file.is_object())
      throw ValidationError("config file is not a JSON object: " + config_file.string());
    std::vector<std::string> bad;
    check_keys(file, j, "", bad);
    if (!bad.empty()) {
      std::string msg = "unknown configuration keys in " + config_file.string() + ":";
      for (const auto& k : bad) msg += " " + k;
      throw ValidationError(msg);
    }
    j.merge_patch(file);
  }
  if (paper_scale) apply_paper_scale(j);
  apply_overrides(j, assignments);
  if (!seeded(config_file, assignments))
    throw ValidationError("seed: required (set \"seed\" in the config file or pass --set seed=N)");
  return ExperimentConfig::from_json(j);
}

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::preprocess: return "preprocess";
    case Stage::gan_train: return "gan-train";
    case Stage::gan_sample: return "gan-sample";
    case Stage::gan_eval: return "gan-eval";
    case Stage::drl_train: return "drl-train";
    case Stage::drl_eval: return "drl-eval";
    case Stage::baselines: return "baselines";
    case Stage::report: return "report";
    case Stage::run_all: return "run-all";
  }
  return "run-all";
}

Stage stage_from_string(std::string_view s) {
  for (auto v : {Stage::preprocess, Stage::gan_train, Stage::gan_sample, Stage::gan_eval, Stage::drl_train,
                 Stage::drl_eval, Stage::baselines, Stage::report, Stage::run_all})
    if (to_string(v) == s) return v;
  throw ArgumentError("unknown stage '" + std::string(s) + "'");
}

std::string_view dataset_label(TrainingSource s) {
  switch (s) {
    case TrainingSource::real: return "real";
    case TrainingSource::synthetic_unconditional: return "wgan";
    case TrainingSource::synthetic_conditional: return "wgan-conditional";
  }
  return "real";
}

std::string cell_name(const ExperimentConfig& c) {
  return std::string(to_string(c.source)) + "-" + std::string(to_string(c.mode));
}

void run_stage(Stage stage, const ExperimentConfig& c) {
  c.validate();
  switch (stage) {
    case Stage::preprocess: preprocess(c); break;
    case Stage::gan_train: gan_train(c); break;
    case Stage::gan_sample: gan_sample(c); break;
    case Stage::gan_eval: gan_eval(c); break;
    case Stage::drl_train: drl_train(c); break;
    case Stage::drl_eval: drl_eval(c); break;
    case Stage::baselines: run_baselines(c); break;
    case Stage::report: report(c); break;
    case Stage::run_all:
      preprocess(c);
      if (c.source != TrainingSource::real) {
        gan_train(c);
        gan_sample(c);
        gan_eval(c);
      }
      drl_train(c);
      drl_eval(c);
      run_baselines(c);
      report(c);
      break;
  }
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ValidationError*>(&e) || dynamic_cast<const ArgumentError*>(&e)) return 2;
  if (dynamic_cast<const DependencyError*>(&e)) return 3;
  return 4;
}

}  // namespace idslab
