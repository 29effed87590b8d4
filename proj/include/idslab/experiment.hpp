#pragma once

// Experiment runner: preprocess -> GAN train/sample/eval -> DRL and baseline
// training -> report bundle. One configuration describes one (mode, source)
// cell; several cells may share an output directory and report together.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "idslab/agent.hpp"
#include "idslab/baselines.hpp"
#include "idslab/env.hpp"
#include "idslab/gan.hpp"
#include "json.hpp"

namespace idslab {

enum class TrainingSource { real, synthetic_unconditional, synthetic_conditional };

std::string_view to_string(TrainingSource s);
TrainingSource training_source_from_string(std::string_view s);
/// Name used in the dataset column of reports: "real", "wgan", "wgan-conditional".
std::string_view dataset_label(TrainingSource s);

struct ExperimentConfig {
  std::filesystem::path data_dir;  // defaults to $IDSLAB_DATA_DIR
  std::string train_file = "KDDTrain+.txt";
  std::string test_file = "KDDTest+.txt";
  std::filesystem::path attack_map;  // empty: bundled mapping
  std::filesystem::path output_dir = "idslab-out";

  IdsMode mode = IdsMode::binary;
  TrainingSource source = TrainingSource::real;
  std::uint64_t seed = 0;

  double gan_subset_fraction = 0.1;
  std::size_t unconditional_rows = 20000;
  std::size_t conditional_rows_per_class = 2000;

  GanConfig gan = desk_gan();
  PpoConfig ppo;
  int episode_cap = 1000;
  std::string policy_activation = "relu";
  std::vector<ClassifierKind> baselines = {ClassifierKind::logreg, ClassifierKind::tree, ClassifierKind::mlp};

  static GanConfig desk_gan();

  /// Throws ValidationError naming every offending field.
  void validate() const;
  nlohmann::json to_json() const;
  /// Unknown keys are rejected.
  static ExperimentConfig from_json(const nlohmann::json& j);
};

/// 100 GAN epochs, 200k unconditional rows, 20k rows per class, 2M PPO steps.
void apply_paper_scale(nlohmann::json& config);

/// Applies "a.b.c=value" assignments. Values parse as JSON when possible and
/// fall back to plain strings.
void apply_overrides(nlohmann::json& config, std::span<const std::string> assignments);

/// Defaults + optional file + paper scale + overrides, in that order. The
/// seed must be given explicitly by the file or an override.
ExperimentConfig resolve_config(const std::filesystem::path& config_file, bool paper_scale,
                                std::span<const std::string> assignments);

enum class Stage { preprocess, gan_train, gan_sample, gan_eval, drl_train, drl_eval, baselines, report, run_all };

std::string_view to_string(Stage s);
Stage stage_from_string(std::string_view s);

/// Artifacts written by each stage, relative to output_dir.
namespace artifacts {
inline constexpr std::string_view kTransformer = "prep/transformer.json";
inline constexpr std::string_view kTrainEncoded = "prep/train.idsm";
inline constexpr std::string_view kTestEncoded = "prep/test.idsm";
inline constexpr std::string_view kGanModel = "gan/model.json";
inline constexpr std::string_view kGanLosses = "curves/gan_losses.csv";
inline constexpr std::string_view kUnconditional = "synthetic/unconditional.txt";
inline constexpr std::string_view kConditional = "synthetic/conditional.txt";
inline constexpr std::string_view kFidelity = "fidelity.csv";
inline constexpr std::string_view kPerformance = "performance.csv";
inline constexpr std::string_view kPerClass = "per_class_f1.csv";
inline constexpr std::string_view kManifest = "manifest.json";
}  // namespace artifacts

/// Cell name used in file names and the dataset column: "<source>-<mode>".
std::string cell_name(const ExperimentConfig& config);

void run_stage(Stage stage, const ExperimentConfig& config);

/// 0 success, 2 validation, 3 dependency, 4 anything else.
int exit_code_for(const std::exception& e);

}  // namespace idslab
