#include "idslab/agent.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "idslab/error.hpp"

namespace idslab {

namespace {

constexpr std::array<Eigen::Index, 3> kDefaultHidden = {128, 64, 32};
constexpr Eigen::Index kEvalChunk = 4096;

Eigen::MatrixXd log_softmax_rows(const Eigen::MatrixXd& z) {
  Eigen::MatrixXd out(z.rows(), z.cols());
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    const double m = z.row(r).maxCoeff();
    const double lse = m + std::log((z.row(r).array() - m).exp().sum());
    out.row(r) = z.row(r).array() - lse;
  }
  return out;
}

int sample_action(const Eigen::RowVectorXd& probs, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double x = u(rng);
  double acc = 0.0;
  for (Eigen::Index a = 0; a < probs.size(); ++a) {
    acc += probs[a];
    if (x < acc) return static_cast<int>(a);
  }
  return static_cast<int>(probs.size()) - 1;
}

}  // namespace

// ---------------------------------------------------------------------------

nlohmann::json PolicyNet::to_json() const {
  return {{"format", "idslab-policy"},
          {"version", 1},
          {"trunk", nn::to_json(trunk)},
          {"policy_head", nn::to_json(policy_head)},
          {"value_head", nn::to_json(value_head)}};
}

PolicyNet PolicyNet::from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "idslab-policy" || j.value("version", 0) != 1)
    throw ArgumentError("not an idslab-policy v1 document");
  PolicyNet p{nn::from_json(j.at("trunk")), nn::from_json(j.at("policy_head")), nn::from_json(j.at("value_head"))};
  if (p.policy_head.input_size() != p.trunk.output_size() || p.value_head.input_size() != p.trunk.output_size())
    throw ArgumentError("policy checkpoint: heads do not match trunk");
  return p;
}

PolicyNet make_policy(Eigen::Index observation_size, int actions, nn::Activation trunk_activation,
                      std::uint64_t seed, std::span<const Eigen::Index> hidden) {
  if (actions < 2) throw ArgumentError("policy needs at least two actions");
  if (trunk_activation != nn::Activation::relu && trunk_activation != nn::Activation::sigmoid)
    throw ArgumentError("trunk activation must be relu or sigmoid");
  if (hidden.empty()) hidden = kDefaultHidden;
  std::vector<Eigen::Index> sizes{observation_size};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  std::vector<nn::Activation> acts(hidden.size(), trunk_activation);
  PolicyNet p;
  p.trunk = nn::init_net<double>(std::span<const Eigen::Index>(sizes), std::span<const nn::Activation>(acts), seed);
  p.policy_head = nn::init_net<double>({hidden.back(), actions}, {nn::Activation::linear}, seed + 1);
  p.value_head = nn::init_net<double>({hidden.back(), 1}, {nn::Activation::linear}, seed + 2);
  // Small policy logits start the agent near the uniform distribution.
  p.policy_head.layers[0].weights *= 0.01;
  return p;
}

PolicyOutput policy_forward(const PolicyNet& policy, const Eigen::MatrixXd& states) {
  Eigen::MatrixXd h = nn::predict(policy.trunk, states);
  PolicyOutput out;
  out.logits = nn::predict(policy.policy_head, h);
  out.log_probs = log_softmax_rows(out.logits);
  out.probs = out.log_probs.array().exp();
  out.values = nn::predict(policy.value_head, h).col(0);
  return out;
}

// ---------------------------------------------------------------------------

void PpoConfig::validate() const {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ArgumentError("gamma must lie in (0,1]");
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) throw ArgumentError("gae_lambda must lie in [0,1]");
  if (!(clip_epsilon > 0.0)) throw ArgumentError("clip_epsilon must be positive");
  if (rollout_length < 1 || minibatch < 1 || update_epochs < 0) throw ArgumentError("invalid rollout sizes");
  if (total_timesteps < 0 || eval_every < 1) throw ArgumentError("invalid timestep budget");
}

nlohmann::json PpoConfig::to_json() const {
  return {{"gamma", gamma},
          {"gae_lambda", gae_lambda},
          {"clip_epsilon", clip_epsilon},
          {"learning_rate", learning_rate},
          {"rollout_length", rollout_length},
          {"minibatch", minibatch},
          {"update_epochs", update_epochs},
          {"entropy_coef", entropy_coef},
          {"value_coef", value_coef},
          {"max_grad_norm", max_grad_norm},
          {"total_timesteps", total_timesteps},
          {"eval_every", eval_every},
          {"seed", seed}};
}

PpoConfig PpoConfig::from_json(const nlohmann::json& j) {
  PpoConfig c;
  c.gamma = j.value("gamma", c.gamma);
  c.gae_lambda = j.value("gae_lambda", c.gae_lambda);
  c.clip_epsilon = j.value("clip_epsilon", c.clip_epsilon);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.rollout_length = j.value("rollout_length", c.rollout_length);
  c.minibatch = j.value("minibatch", c.minibatch);
  c.update_epochs = j.value("update_epochs", c.update_epochs);
  c.entropy_coef = j.value("entropy_coef", c.entropy_coef);
  c.value_coef = j.value("value_coef", c.value_coef);
  c.max_grad_norm = j.value("max_grad_norm", c.max_grad_norm);
  c.total_timesteps = j.value("total_timesteps", c.total_timesteps);
  c.eval_every = j.value("eval_every", c.eval_every);
  c.seed = j.value("seed", c.seed);
  c.validate();
  return c;
}

void RolloutBuffer::resize(Eigen::Index length, Eigen::Index observation_size) {
  states.resize(length, observation_size);
  actions.assign(length, 0);
  log_probs.resize(length);
  rewards.resize(length);
  dones.assign(length, 0);
  values.resize(length);
  advantages.resize(length);
  returns.resize(length);
  last_value = 0.0;
}

void compute_gae(RolloutBuffer& buffer, double gamma, double lambda) {
  const Eigen::Index t_max = buffer.size();
  buffer.advantages.resize(t_max);
  double next_adv = 0.0;
  double next_value = buffer.last_value;
  for (Eigen::Index t = t_max; t-- > 0;) {
    const double not_done = buffer.dones[t] ? 0.0 : 1.0;
    const double delta = buffer.rewards[t] + gamma * next_value * not_done - buffer.values[t];
    next_adv = delta + gamma * lambda * not_done * next_adv;
    buffer.advantages[t] = next_adv;
    next_value = buffer.values[t];
  }
  buffer.returns = buffer.advantages + buffer.values;
}

double clipped_surrogate(double ratio, double advantage, double epsilon) {
  return std::min(ratio * advantage, std::clamp(ratio, 1.0 - epsilon, 1.0 + epsilon) * advantage);
}

// ---------------------------------------------------------------------------

PpoLoss ppo_loss(const PolicyNet& policy, const PpoBatch& batch, const PpoConfig& config, PolicyGradients* grads) {
  const Eigen::Index n = batch.states.rows();
  if (n == 0) throw ArgumentError("ppo_loss: empty batch");
  if (static_cast<Eigen::Index>(batch.actions.size()) != n || batch.old_log_probs.size() != n ||
      batch.advantages.size() != n || batch.returns.size() != n)
    throw ArgumentError("ppo_loss: batch field lengths differ");

  auto trunk = nn::forward(policy.trunk, batch.states);
  auto head = nn::forward(policy.policy_head, trunk.output);
  auto value = nn::forward(policy.value_head, trunk.output);
  const Eigen::MatrixXd logp = log_softmax_rows(head.output);
  const Eigen::MatrixXd p = logp.array().exp();
  const double inv_n = 1.0 / static_cast<double>(n);
  const double eps = config.clip_epsilon;

  PpoLoss loss;
  Eigen::MatrixXd d_logits = Eigen::MatrixXd::Zero(n, logp.cols());
  Eigen::MatrixXd d_value(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int a = batch.actions[i];
    if (a < 0 || a >= logp.cols()) throw ArgumentError("ppo_loss: action out of range");
    const double adv = batch.advantages[i];
    const double ratio = std::exp(logp(i, a) - batch.old_log_probs[i]);
    const double unclipped = ratio * adv;
    const double clipped = std::clamp(ratio, 1.0 - eps, 1.0 + eps) * adv;
    loss.policy -= std::min(unclipped, clipped) * inv_n;
    if (ratio < 1.0 - eps || ratio > 1.0 + eps) loss.clip_fraction += inv_n;

    double entropy = 0.0;
    for (Eigen::Index j = 0; j < logp.cols(); ++j) entropy -= p(i, j) * logp(i, j);
    loss.entropy += entropy * inv_n;

    const double verr = value.output(i, 0) - batch.returns[i];
    loss.value += verr * verr * inv_n;

    // d(-surrogate)/d logp_a, zero where the clipped branch is the minimum.
    const double g_logp = unclipped <= clipped ? -unclipped : 0.0;
    for (Eigen::Index j = 0; j < logp.cols(); ++j) {
      const double indicator = j == a ? 1.0 : 0.0;
      double g = g_logp * (indicator - p(i, j));
      g += config.entropy_coef * p(i, j) * (logp(i, j) + entropy);
      d_logits(i, j) = g * inv_n;
    }
    d_value(i, 0) = 2.0 * config.value_coef * verr * inv_n;
  }
  loss.total = loss.policy + config.value_coef * loss.value - config.entropy_coef * loss.entropy;

  if (grads) {
    grads->policy_head = nn::backward(policy.policy_head, head.tape, d_logits);
    grads->value_head = nn::backward(policy.value_head, value.tape, d_value);
    Eigen::MatrixXd d_trunk = grads->policy_head.input + grads->value_head.input;
    grads->trunk = nn::backward(policy.trunk, trunk.tape, d_trunk);
  }
  return loss;
}

PolicyOptimizer make_policy_optimizer(const PolicyNet& policy, double learning_rate) {
  return {nn::make_optimizer(policy.trunk, nn::Optimizer::adam, learning_rate),
          nn::make_optimizer(policy.policy_head, nn::Optimizer::adam, learning_rate),
          nn::make_optimizer(policy.value_head, nn::Optimizer::adam, learning_rate)};
}

UpdateStats ppo_update(PolicyNet& policy, PolicyOptimizer& optimizer, const RolloutBuffer& buffer,
                       const PpoConfig& config, std::mt19937_64& rng) {
  const Eigen::Index n = buffer.size();
  UpdateStats stats;
  if (n == 0) return stats;
  if (!buffer.advantages.allFinite()) throw ArgumentError("ppo_update: non-finite advantages");

  const double mean = buffer.advantages.mean();
  const double var = (buffer.advantages.array() - mean).square().mean();
  const Eigen::VectorXd adv = (buffer.advantages.array() - mean) / (std::sqrt(var) + 1e-8);

  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < config.update_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (Eigen::Index start = 0; start < n; start += config.minibatch) {
      const Eigen::Index end = std::min(n, start + config.minibatch);
      std::vector<Eigen::Index> idx(order.begin() + start, order.begin() + end);
      PpoBatch mb;
      mb.states = buffer.states(idx, Eigen::all);
      mb.old_log_probs = buffer.log_probs(idx);
      mb.advantages = adv(idx);
      mb.returns = buffer.returns(idx);
      for (auto i : idx) mb.actions.push_back(buffer.actions[i]);

      PolicyGradients g;
      auto loss = ppo_loss(policy, mb, config, &g);
      const double norm = std::sqrt(g.squared_norm());
      if (config.max_grad_norm > 0 && norm > config.max_grad_norm) g.scale(config.max_grad_norm / (norm + 1e-6));
      nn::opt_step(policy.trunk, g.trunk, optimizer.trunk);
      nn::opt_step(policy.policy_head, g.policy_head, optimizer.policy_head);
      nn::opt_step(policy.value_head, g.value_head, optimizer.value_head);

      stats.policy_loss += loss.policy;
      stats.value_loss += loss.value;
      stats.entropy += loss.entropy;
      stats.clip_fraction += loss.clip_fraction;
      ++stats.minibatches;
    }
  }
  if (stats.minibatches > 0) {
    const double k = 1.0 / stats.minibatches;
    stats.policy_loss *= k;
    stats.value_loss *= k;
    stats.entropy *= k;
    stats.clip_fraction *= k;
  }
  return stats;
}

// ---------------------------------------------------------------------------

void TrainLog::write_csv(std::ostream& out) const {
  out << "timestep,accuracy,f1_macro,f1_weighted,f1_class0,f1_class1,f1_class2,f1_class3,f1_class4\n";
  for (const auto& p : points) {
    out << p.timestep << ',' << format_metric(p.summary.accuracy) << ',' << format_metric(p.summary.f1_macro) << ','
        << format_metric(p.summary.f1_weighted);
    for (int c = 0; c < kClassCount; ++c) {
      out << ',';
      if (c < static_cast<int>(p.summary.f1_per_class.size())) out << format_metric(p.summary.f1_per_class[c]);
    }
    out << '\n';
  }
}

TrainLog train(IdsEnv& env, PolicyNet& policy, const PpoConfig& config, const EncodedDataset* test_set) {
  config.validate();
  if (env.action_count() != policy.action_count())
    throw ArgumentError("environment mode does not match policy action count");
  if (env.observation_size() != policy.observation_size())
    throw ArgumentError("environment observation size does not match policy");

  TrainLog log;
  if (config.total_timesteps == 0) return log;

  std::mt19937_64 action_rng(config.seed);
  std::mt19937_64 shuffle_rng(config.seed ^ 0xa5a5a5a5a5a5a5a5ULL);
  auto optimizer = make_policy_optimizer(policy, config.learning_rate);
  const IdsMode mode = env.config().mode;

  auto record_eval = [&](std::int64_t timestep) {
    if (!test_set) return;
    log.points.push_back({timestep, summarize(evaluate(policy, *test_set, mode))});
  };

  Eigen::VectorXd obs = env.reset();
  std::int64_t timestep = 0;
  std::int64_t next_eval = config.eval_every;
  RolloutBuffer buffer;
  while (timestep < config.total_timesteps) {
    const auto length =
        static_cast<Eigen::Index>(std::min<std::int64_t>(config.rollout_length, config.total_timesteps - timestep));
    buffer.resize(length, env.observation_size());
    for (Eigen::Index t = 0; t < length; ++t) {
      auto out = policy_forward(policy, obs.transpose());
      const int action = sample_action(out.probs.row(0), action_rng);
      auto res = env.step(action);
      buffer.states.row(t) = obs.transpose();
      buffer.actions[t] = action;
      buffer.log_probs[t] = out.log_probs(0, action);
      buffer.values[t] = out.values[0];
      buffer.rewards[t] = res.reward;
      buffer.dones[t] = res.done ? 1 : 0;
      obs = res.done ? env.reset() : res.next_state;
    }
    timestep += length;
    buffer.last_value = buffer.dones[length - 1] ? 0.0 : policy_forward(policy, obs.transpose()).values[0];
    compute_gae(buffer, config.gamma, config.gae_lambda);
    log.updates.push_back(ppo_update(policy, optimizer, buffer, config, shuffle_rng));

    if (timestep >= next_eval) {
      record_eval(timestep);
      while (next_eval <= timestep) next_eval += config.eval_every;
    }
  }
  if (test_set && (log.points.empty() || log.points.back().timestep != timestep)) record_eval(timestep);
  return log;
}

ConfusionMatrix evaluate(const PolicyNet& policy, const EncodedDataset& data, IdsMode mode) {
  if (data.features.cols() != policy.observation_size())
    throw ArgumentError("evaluate: test set dimension does not match policy input");
  if (policy.action_count() != action_count(mode)) throw ArgumentError("evaluate: policy/mode mismatch");
  const int k = action_count(mode);
  ConfusionMatrix cm;
  cm.counts.setZero(k, k);
  for (Eigen::Index start = 0; start < data.features.rows(); start += kEvalChunk) {
    const Eigen::Index len = std::min(kEvalChunk, data.features.rows() - start);
    Eigen::MatrixXd h = nn::predict(policy.trunk, data.features.middleRows(start, len));
    Eigen::MatrixXd logits = nn::predict(policy.policy_head, h);
    for (Eigen::Index r = 0; r < len; ++r) {
      Eigen::Index best = 0;
      for (Eigen::Index c = 1; c < logits.cols(); ++c)
        if (logits(r, c) > logits(r, best)) best = c;
      ++cm.counts(target_for(data.labels[start + r], mode), best);
    }
  }
  return cm;
}

}  // namespace idslab
