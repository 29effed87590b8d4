#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <random>

#include <Eigen/Core>

#include "idslab/dataset.hpp"
#include "json.hpp"

namespace idslab {

enum class IdsMode { binary, multiclass };

constexpr int action_count(IdsMode mode) { return mode == IdsMode::binary ? 2 : 5; }
std::string_view to_string(IdsMode mode);
IdsMode ids_mode_from_string(std::string_view s);

/// Target index an evaluator compares predictions against.
constexpr int target_for(ClassLabel c, IdsMode mode) {
  return mode == IdsMode::binary ? to_binary(c) : class_id(c);
}

struct EnvConfig {
  IdsMode mode = IdsMode::binary;
  int episode_cap = 1000;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
  static EnvConfig from_json(const nlohmann::json& j);
};

struct StepResult {
  Eigen::VectorXd next_state;
  int reward = 0;
  bool done = false;
  ClassLabel info = ClassLabel::normal;  // true label of the record just scored
};

/// Alert reward. Binary actions: 0 no alert, 1 alert. Multiclass actions:
/// 0 no alert, otherwise the class id being alerted.
int reward(ClassLabel true_class, int action, IdsMode mode);

/// Episodic IDS environment over an encoded dataset. Each step scores the
/// current record, then draws the next record uniformly with replacement.
/// An episode ends at episode_cap steps or on a missed attack.
class IdsEnv {
 public:
  IdsEnv(std::shared_ptr<const EncodedDataset> data, EnvConfig config);

  Eigen::VectorXd reset();
  StepResult step(int action);

  const EnvConfig& config() const { return config_; }
  int action_count() const { return idslab::action_count(config_.mode); }
  Eigen::Index observation_size() const { return data_->features.cols(); }
  int steps_taken() const { return steps_; }
  bool done() const { return done_; }
  bool active() const { return active_; }
  ClassLabel current_label() const;
  const EncodedDataset& data() const { return *data_; }

 private:
  Eigen::Index draw();

  std::shared_ptr<const EncodedDataset> data_;
  EnvConfig config_;
  std::mt19937_64 rng_;
  std::uniform_int_distribution<Eigen::Index> pick_;
  Eigen::Index current_ = 0;
  int steps_ = 0;
  bool done_ = false;
  bool active_ = false;
};

/// Builds an environment from an encoded-dataset file and a JSON config
/// ({"mode": "binary"|"multiclass", "episode_cap": n, "seed": s}).
IdsEnv make_env(const std::filesystem::path& encoded_path, const nlohmann::json& config);

}  // namespace idslab
