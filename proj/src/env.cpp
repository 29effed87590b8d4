#include "idslab/env.hpp"

#include "idslab/error.hpp"

namespace idslab {

std::string_view to_string(IdsMode mode) { return mode == IdsMode::binary ? "binary" : "multiclass"; }

IdsMode ids_mode_from_string(std::string_view s) {
  if (s == "binary") return IdsMode::binary;
  if (s == "multiclass") return IdsMode::multiclass;
  throw ArgumentError("unknown mode '" + std::string(s) + "'");
}

nlohmann::json EnvConfig::to_json() const {
  return {{"mode", to_string(mode)}, {"episode_cap", episode_cap}, {"seed", seed}};
}

EnvConfig EnvConfig::from_json(const nlohmann::json& j) {
  EnvConfig c;
  if (j.contains("mode")) c.mode = ids_mode_from_string(j.at("mode").get<std::string>());
  if (j.contains("episode_cap")) c.episode_cap = j.at("episode_cap").get<int>();
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  if (c.episode_cap < 1) throw ArgumentError("episode_cap must be >= 1");
  return c;
}

int reward(ClassLabel true_class, int action, IdsMode mode) {
  if (action < 0 || action >= action_count(mode))
    throw ArgumentError("action " + std::to_string(action) + " out of range for " + std::string(to_string(mode)));
  const bool attack = true_class != ClassLabel::normal;
  if (!attack) return action == 0 ? 0 : -1;
  if (action == 0) return -1;
  if (mode == IdsMode::binary) return 1;
  return action == class_id(true_class) ? 1 : -1;
}

IdsEnv::IdsEnv(std::shared_ptr<const EncodedDataset> data, EnvConfig config)
    : data_(std::move(data)), config_(config), rng_(config.seed) {
  if (!data_ || data_->size() == 0) throw ArgumentError("environment needs a nonempty dataset");
  if (static_cast<std::size_t>(data_->features.rows()) != data_->labels.size())
    throw ArgumentError("dataset features/labels length mismatch");
  if (config_.episode_cap < 1) throw ArgumentError("episode_cap must be >= 1");
  pick_ = std::uniform_int_distribution<Eigen::Index>(0, static_cast<Eigen::Index>(data_->size()) - 1);
}

Eigen::Index IdsEnv::draw() { return pick_(rng_); }

ClassLabel IdsEnv::current_label() const { return data_->labels[current_]; }

Eigen::VectorXd IdsEnv::reset() {
  steps_ = 0;
  done_ = false;
  active_ = true;
  current_ = draw();
  return data_->features.row(current_).transpose();
}

StepResult IdsEnv::step(int action) {
  if (!active_) throw StateError("step() before reset()");
  if (done_) throw StateError("step() after episode end; call reset()");
  StepResult res;
  res.info = current_label();
  res.reward = reward(res.info, action, config_.mode);
  ++steps_;
  const bool missed_attack = res.info != ClassLabel::normal && action == 0;
  res.done = steps_ >= config_.episode_cap || missed_attack;
  done_ = res.done;
  current_ = draw();
  res.next_state = data_->features.row(current_).transpose();
  return res;
}

IdsEnv make_env(const std::filesystem::path& encoded_path, const nlohmann::json& config) {
  auto data = std::make_shared<const EncodedDataset>(load_encoded(encoded_path));
  return IdsEnv(std::move(data), EnvConfig::from_json(config));
}

}  // namespace idslab
