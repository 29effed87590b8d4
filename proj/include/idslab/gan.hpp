#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "idslab/dataset.hpp"
#include "idslab/nn.hpp"
#include "json.hpp"

namespace idslab {

struct GanConfig {
  int epochs = 100;
  int batch_size = 500;
  int critic_steps = 5;
  Eigen::Index noise_dim = 128;
  std::vector<Eigen::Index> hidden = {256, 256};
  double weight_clip = 0.01;
  double learning_rate = 5e-5;
  double gumbel_temperature = 0.2;
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
  static GanConfig from_json(const nlohmann::json& j);
};

/// Conditional WGAN over a labeled table. The class column is both a
/// condition input (one-hot, kClassCount slots) and a generated column.
struct GanModel {
  nn::DenseNet<double> generator;  // noise + condition -> pre-activation record
  nn::DenseNet<double> critic;     // encoded record + condition -> score
  Transformer transformer;         // includes the class column
  ClassCounts class_counts{};      // training distribution used by sample_unconditional
  GanConfig config;

  nlohmann::json to_json() const;
  static GanModel from_json(const nlohmann::json& j);
};

struct GanLossPoint {
  std::int64_t step = 0;
  double critic_loss = 0.0;  // -(mean real score - mean fake score)
  double generator_loss = 0.0;
};

struct GanTrainResult {
  GanModel model;
  std::vector<GanLossPoint> losses;  // one per generator step
};

struct GanHooks {
  /// Called after every critic update (post-clipping).
  std::function<void(const nn::DenseNet<double>& critic)> after_critic_step;
};

/// `table` must carry the categorical class column (see with_class_column)
/// and every class must occur in it.
GanTrainResult train_gan(const Table& table, const GanConfig& config, const GanHooks& hooks = {});

/// Raw generator output for `conditions` (one class per row) after the
/// per-block output activations: sigmoid for continuous slots, hard
/// Gumbel-max one-hot for categorical groups.
Eigen::MatrixXd generate_encoded(const GanModel& model, std::span<const ClassLabel> conditions, std::uint64_t seed);

struct LabeledRow {
  Row features;  // without the class column
  ClassLabel label = ClassLabel::normal;
};

/// Conditions drawn from the training class distribution; the label of each
/// row is its condition.
std::vector<LabeledRow> sample_unconditional(const GanModel& model, std::size_t n, std::uint64_t seed);

/// Rejection sampling: rows whose generated class column disagrees with
/// `target` are discarded. Throws SamplingStarvationError after 50 n
/// attempts.
std::vector<Row> sample_conditional(const GanModel& model, ClassLabel target, std::size_t n, std::uint64_t seed);

/// NSL-KDD formatted rows (41 features, num_outbound_cmds written as 0),
/// labeled by class symbol. Requires the NSL-KDD schema.
void export_synthetic(std::span<const LabeledRow> rows, const std::filesystem::path& path);

void save_gan(const GanModel& model, const std::filesystem::path& path);
GanModel load_gan(const std::filesystem::path& path);

}  // namespace idslab
