#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "idslab/nn.hpp"
#include "json.hpp"

namespace idslab {

enum class ClassifierKind { logreg, tree, mlp };

std::string_view to_string(ClassifierKind kind);
ClassifierKind classifier_kind_from_string(std::string_view s);

/// Softmax regression; the net is a single linear layer.
struct LogRegModel {
  nn::DenseNet<double> net;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  int label = 0;
};

/// CART tree; x[feature] <= threshold goes left.
struct TreeModel {
  std::vector<TreeNode> nodes;
  int depth = 0;
};

/// ReLU trunk with a linear logit head; softmax applied at prediction.
struct MlpModel {
  nn::DenseNet<double> net;
};

class Classifier {
 public:
  using Model = std::variant<LogRegModel, TreeModel, MlpModel>;

  Classifier(Model model, int num_classes, Eigen::Index input_size)
      : model_(std::move(model)), num_classes_(num_classes), input_size_(input_size) {}

  ClassifierKind kind() const;
  int num_classes() const { return num_classes_; }
  Eigen::Index input_size() const { return input_size_; }
  const Model& model() const { return model_; }

  /// Rows are samples. Ties between class scores go to the lowest class id.
  std::vector<int> predict(const Eigen::MatrixXd& x) const;
  /// Class probabilities (one-hot leaf distribution for trees).
  Eigen::MatrixXd predict_proba(const Eigen::MatrixXd& x) const;

  nlohmann::json to_json() const;
  static Classifier from_json(const nlohmann::json& j);

 private:
  Model model_;
  int num_classes_;
  Eigen::Index input_size_;
};

struct LogRegOptions {
  double l2 = 1e-4;
  int epochs = 300;
  double learning_rate = 1e-2;
  std::uint64_t seed = 0;
  int num_classes = 0;  // 0: max(y) + 1
};

struct TreeOptions {
  int max_depth = 20;
  int min_split = 2;
  std::uint64_t seed = 0;
  int num_classes = 0;
};

struct MlpOptions {
  std::vector<Eigen::Index> hidden = {128, 64, 32};
  int epochs = 20;
  int batch_size = 256;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  int num_classes = 0;
};

/// Full-batch adaptive-moment training of mean cross-entropy + (l2/2)|W|^2.
Classifier train_logreg(const Eigen::MatrixXd& x, std::span<const int> y, const LogRegOptions& opts = {});

/// CART with Gini impurity over midpoints of sorted unique feature values.
/// Ties: lowest feature index, then lowest threshold.
Classifier train_tree(const Eigen::MatrixXd& x, std::span<const int> y, const TreeOptions& opts = {});

Classifier train_mlp(const Eigen::MatrixXd& x, std::span<const int> y, const MlpOptions& opts = {});

/// Row-wise argmax with lowest-index tie breaking.
std::vector<int> argmax_rows(const Eigen::MatrixXd& scores);

}  // namespace idslab
