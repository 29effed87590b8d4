#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "idslab/env.hpp"
#include "idslab/metrics.hpp"
#include "idslab/nn.hpp"
#include "json.hpp"

namespace idslab {

/// Actor-critic: shared trunk, softmax policy head, linear value head. The
/// policy head net emits logits; policy_forward() normalizes them.
struct PolicyNet {
  nn::DenseNet<double> trunk;
  nn::DenseNet<double> policy_head;
  nn::DenseNet<double> value_head;

  int action_count() const { return static_cast<int>(policy_head.output_size()); }
  Eigen::Index observation_size() const { return trunk.input_size(); }

  nlohmann::json to_json() const;
  static PolicyNet from_json(const nlohmann::json& j);
};

PolicyNet make_policy(Eigen::Index observation_size, int actions, nn::Activation trunk_activation,
                      std::uint64_t seed, std::span<const Eigen::Index> hidden = {});

struct PolicyOutput {
  Eigen::MatrixXd logits;
  Eigen::MatrixXd log_probs;
  Eigen::MatrixXd probs;
  Eigen::VectorXd values;
};

PolicyOutput policy_forward(const PolicyNet& policy, const Eigen::MatrixXd& states);

struct PpoConfig {
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double clip_epsilon = 0.2;
  double learning_rate = 2.5e-4;
  int rollout_length = 2048;
  int minibatch = 64;
  int update_epochs = 4;
  double entropy_coef = 0.01;
  double value_coef = 0.5;
  double max_grad_norm = 0.5;
  std::int64_t total_timesteps = 100000;
  std::int64_t eval_every = 10000;
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
  static PpoConfig from_json(const nlohmann::json& j);
};

struct RolloutBuffer {
  Eigen::MatrixXd states;  // T x obs
  std::vector<int> actions;
  Eigen::VectorXd log_probs;
  Eigen::VectorXd rewards;
  std::vector<char> dones;
  Eigen::VectorXd values;
  Eigen::VectorXd advantages;
  Eigen::VectorXd returns;
  double last_value = 0.0;  // V(s_T), used unless dones[T-1]

  Eigen::Index size() const { return rewards.size(); }
  void resize(Eigen::Index length, Eigen::Index observation_size);
};

/// delta_t = r_t + gamma V_{t+1} (1-done_t) - V_t,
/// A_t = delta_t + gamma lambda (1-done_t) A_{t+1},  returns = A + V.
void compute_gae(RolloutBuffer& buffer, double gamma, double lambda);

/// min(r A, clip(r, 1-eps, 1+eps) A)
double clipped_surrogate(double ratio, double advantage, double epsilon);

struct PpoLoss {
  double total = 0.0;
  double policy = 0.0;   // -mean surrogate
  double value = 0.0;    // mean (V - R)^2, before value_coef
  double entropy = 0.0;  // mean entropy, before entropy_coef
  double clip_fraction = 0.0;
};

struct PolicyGradients {
  nn::Gradients<double> trunk;
  nn::Gradients<double> policy_head;
  nn::Gradients<double> value_head;

  double squared_norm() const {
    return trunk.squared_norm() + policy_head.squared_norm() + value_head.squared_norm();
  }
  void scale(double f) {
    trunk.scale(f);
    policy_head.scale(f);
    value_head.scale(f);
  }
};

struct PpoBatch {
  Eigen::MatrixXd states;
  std::vector<int> actions;
  Eigen::VectorXd old_log_probs;
  Eigen::VectorXd advantages;
  Eigen::VectorXd returns;
};

/// Full clipped-surrogate loss on one minibatch; gradients are written when
/// `grads` is non-null.
PpoLoss ppo_loss(const PolicyNet& policy, const PpoBatch& batch, const PpoConfig& config,
                 PolicyGradients* grads = nullptr);

struct PolicyOptimizer {
  nn::OptState<double> trunk;
  nn::OptState<double> policy_head;
  nn::OptState<double> value_head;
};

PolicyOptimizer make_policy_optimizer(const PolicyNet& policy, double learning_rate);

struct UpdateStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  int minibatches = 0;
};

/// update_epochs passes of shuffled minibatches over `buffer`. Advantages are
/// normalized to zero mean / unit variance within the buffer first.
UpdateStats ppo_update(PolicyNet& policy, PolicyOptimizer& optimizer, const RolloutBuffer& buffer,
                       const PpoConfig& config, std::mt19937_64& rng);

struct EvalPoint {
  std::int64_t timestep = 0;
  PerformanceSummary summary;
};

struct TrainLog {
  std::vector<EvalPoint> points;
  std::vector<UpdateStats> updates;

  /// timestep,accuracy,f1_macro,f1_weighted,f1_class0..f1_class4
  void write_csv(std::ostream& out) const;
};

/// Rollout/update loop until config.total_timesteps. When `test_set` is
/// given, the policy is evaluated every eval_every steps and once at the end.
TrainLog train(IdsEnv& env, PolicyNet& policy, const PpoConfig& config, const EncodedDataset* test_set = nullptr);

/// Deterministic argmax action per record, one prediction per record.
ConfusionMatrix evaluate(const PolicyNet& policy, const EncodedDataset& data, IdsMode mode);

}  // namespace idslab
