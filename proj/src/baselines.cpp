#include "idslab/baselines.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "idslab/error.hpp"

namespace idslab {

namespace {

int infer_classes(std::span<const int> y, int requested) {
  int k = requested;
  for (int label : y) {
    if (label < 0) throw ArgumentError("negative class label");
    if (requested > 0 && label >= requested) throw ArgumentError("class label exceeds num_classes");
    k = std::max(k, label + 1);
  }
  return k;
}

void check_training_data(const Eigen::MatrixXd& x, std::span<const int> y) {
  if (x.rows() == 0 || y.empty()) throw ArgumentError("empty training data");
  if (static_cast<std::size_t>(x.rows()) != y.size()) throw ArgumentError("x rows != y length");
}

/// d(mean cross-entropy)/d logits for a softmax head.
Eigen::MatrixXd softmax_xent_grad(const Eigen::MatrixXd& logits, std::span<const int> y,
                                  std::span<const Eigen::Index> rows) {
  Eigen::MatrixXd grad = nn::softmax_rows(logits);
  for (Eigen::Index r = 0; r < grad.rows(); ++r) grad(r, y[rows.empty() ? r : rows[r]]) -= 1.0;
  grad /= static_cast<double>(grad.rows());
  return grad;
}

// ---------------------------------------------------------------------------
// CART

struct TreeBuilder {
  const Eigen::MatrixXd& x;
  std::span<const int> y;
  int k;
  TreeOptions opts;
  std::vector<TreeNode> nodes;
  std::vector<char> goes_left;
  int max_reached = 0;

  static double weighted_impurity(const std::vector<std::int64_t>& counts, std::int64_t n) {
    if (n == 0) return 0.0;
    std::int64_t sq = 0;
    for (auto c : counts) sq += c * c;
    return static_cast<double>(n) - static_cast<double>(sq) / static_cast<double>(n);
  }

  static int majority(const std::vector<std::int64_t>& counts) {
    return static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
  }

  /// `sorted[f]` holds this node's sample indices ordered by x(., f).
  int build(std::vector<std::vector<int>> sorted, int depth) {
    const auto n = static_cast<std::int64_t>(sorted.front().size());
    std::vector<std::int64_t> counts(k, 0);
    for (int i : sorted.front()) ++counts[y[i]];

    int id = static_cast<int>(nodes.size());
    nodes.push_back({});
    nodes[id].label = majority(counts);
    max_reached = std::max(max_reached, depth);

    bool pure = std::count_if(counts.begin(), counts.end(), [](auto c) { return c > 0; }) <= 1;
    if (pure || depth >= opts.max_depth || n < opts.min_split) return id;

    int best_feature = -1;
    double best_threshold = 0.0;
    double best_score = std::numeric_limits<double>::infinity();
    std::vector<std::int64_t> left(k);
    std::vector<std::int64_t> right(k);
    for (std::size_t f = 0; f < sorted.size(); ++f) {
      const auto& idx = sorted[f];
      std::fill(left.begin(), left.end(), 0);
      right = counts;
      for (std::int64_t pos = 0; pos + 1 < n; ++pos) {
        int s = idx[pos];
        ++left[y[s]];
        --right[y[s]];
        double a = x(s, f);
        double b = x(idx[pos + 1], f);
        if (!(a < b)) continue;
        double score = weighted_impurity(left, pos + 1) + weighted_impurity(right, n - pos - 1);
        if (score < best_score) {
          best_score = score;
          best_feature = static_cast<int>(f);
          best_threshold = a + (b - a) / 2.0;
        }
      }
    }
    if (best_feature < 0) return id;

    for (int i : sorted.front()) goes_left[i] = x(i, best_feature) <= best_threshold;
    std::vector<std::vector<int>> lsorted(sorted.size());
    std::vector<std::vector<int>> rsorted(sorted.size());
    for (std::size_t f = 0; f < sorted.size(); ++f) {
      for (int i : sorted[f]) (goes_left[i] ? lsorted[f] : rsorted[f]).push_back(i);
      std::vector<int>().swap(sorted[f]);
    }
    nodes[id].feature = best_feature;
    nodes[id].threshold = best_threshold;
    int l = build(std::move(lsorted), depth + 1);
    nodes[id].left = l;
    int r = build(std::move(rsorted), depth + 1);
    nodes[id].right = r;
    return id;
  }
};

int tree_predict(const TreeModel& tree, const Eigen::MatrixXd& x, Eigen::Index row) {
  int node = 0;
  while (tree.nodes[node].feature >= 0) {
    const auto& n = tree.nodes[node];
    node = x(row, n.feature) <= n.threshold ? n.left : n.right;
  }
  return tree.nodes[node].label;
}

}  // namespace

std::string_view to_string(ClassifierKind kind) {
  switch (kind) {
    case ClassifierKind::logreg: return "logreg";
    case ClassifierKind::tree: return "tree";
    case ClassifierKind::mlp: return "mlp";
  }
  return "logreg";
}

ClassifierKind classifier_kind_from_string(std::string_view s) {
  for (auto k : {ClassifierKind::logreg, ClassifierKind::tree, ClassifierKind::mlp})
    if (to_string(k) == s) return k;
  throw ArgumentError("unknown classifier kind '" + std::string(s) + "'");
}

std::vector<int> argmax_rows(const Eigen::MatrixXd& scores) {
  std::vector<int> out(scores.rows());
  for (Eigen::Index r = 0; r < scores.rows(); ++r) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < scores.cols(); ++c)
      if (scores(r, c) > scores(r, best)) best = c;
    out[r] = static_cast<int>(best);
  }
  return out;
}

ClassifierKind Classifier::kind() const { return static_cast<ClassifierKind>(model_.index()); }

Eigen::MatrixXd Classifier::predict_proba(const Eigen::MatrixXd& x) const {
  if (x.cols() != input_size_) throw ArgumentError("classifier input dimension mismatch");
  if (const auto* lr = std::get_if<LogRegModel>(&model_)) return nn::softmax_rows(nn::predict(lr->net, x));
  if (const auto* mlp = std::get_if<MlpModel>(&model_)) return nn::softmax_rows(nn::predict(mlp->net, x));
  const auto& tree = std::get<TreeModel>(model_);
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(x.rows(), num_classes_);
  for (Eigen::Index r = 0; r < x.rows(); ++r) p(r, tree_predict(tree, x, r)) = 1.0;
  return p;
}

std::vector<int> Classifier::predict(const Eigen::MatrixXd& x) const {
  if (x.cols() != input_size_) throw ArgumentError("classifier input dimension mismatch");
  if (const auto* tree = std::get_if<TreeModel>(&model_)) {
    std::vector<int> out(x.rows());
    for (Eigen::Index r = 0; r < x.rows(); ++r) out[r] = tree_predict(*tree, x, r);
    return out;
  }
  // Logits and probabilities share the argmax.
  const auto& net = std::holds_alternative<LogRegModel>(model_) ? std::get<LogRegModel>(model_).net
                                                                : std::get<MlpModel>(model_).net;
  return argmax_rows(nn::predict(net, x));
}

nlohmann::json Classifier::to_json() const {
  nlohmann::json j{{"format", "idslab-classifier"},
                   {"version", 1},
                   {"kind", to_string(kind())},
                   {"num_classes", num_classes_},
                   {"input_size", input_size_}};
  if (const auto* tree = std::get_if<TreeModel>(&model_)) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : tree->nodes) nodes.push_back({n.feature, n.threshold, n.left, n.right, n.label});
    j["depth"] = tree->depth;
    j["nodes"] = std::move(nodes);
  } else if (const auto* lr = std::get_if<LogRegModel>(&model_)) {
    j["net"] = nn::to_json(lr->net);
  } else {
    j["net"] = nn::to_json(std::get<MlpModel>(model_).net);
  }
  return j;
}

Classifier Classifier::from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "idslab-classifier" || j.value("version", 0) != 1)
    throw ArgumentError("not an idslab-classifier v1 document");
  auto kind = classifier_kind_from_string(j.at("kind").get<std::string>());
  int k = j.at("num_classes").get<int>();
  auto in = j.at("input_size").get<Eigen::Index>();
  switch (kind) {
    case ClassifierKind::logreg: return Classifier(LogRegModel{nn::from_json(j.at("net"))}, k, in);
    case ClassifierKind::mlp: return Classifier(MlpModel{nn::from_json(j.at("net"))}, k, in);
    case ClassifierKind::tree: {
      TreeModel tree;
      tree.depth = j.at("depth").get<int>();
      for (const auto& n : j.at("nodes"))
        tree.nodes.push_back({n[0].get<int>(), n[1].get<double>(), n[2].get<int>(), n[3].get<int>(),
                              n[4].get<int>()});
      return Classifier(std::move(tree), k, in);
    }
  }
  throw ArgumentError("unreachable classifier kind");
}

// ---------------------------------------------------------------------------

Classifier train_logreg(const Eigen::MatrixXd& x, std::span<const int> y, const LogRegOptions& opts) {
  check_training_data(x, y);
  const int k = infer_classes(y, opts.num_classes);
  auto net = nn::init_net<double>({x.cols(), k}, {nn::Activation::linear}, opts.seed);
  net.layers[0].weights.setZero();
  auto opt = nn::make_optimizer(net, nn::Optimizer::adam, opts.learning_rate);
  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    auto fwd = nn::forward(net, x);
    auto grads = nn::backward(net, fwd.tape, softmax_xent_grad(fwd.output, y, {}));
    grads.weights[0] += opts.l2 * net.layers[0].weights;
    nn::opt_step(net, grads, opt);
  }
  return Classifier(LogRegModel{std::move(net)}, k, x.cols());
}

Classifier train_tree(const Eigen::MatrixXd& x, std::span<const int> y, const TreeOptions& opts) {
  check_training_data(x, y);
  if (opts.max_depth < 0 || opts.min_split < 2) throw ArgumentError("invalid tree options");
  const int k = infer_classes(y, opts.num_classes);
  const auto n = static_cast<int>(x.rows());
  std::vector<std::vector<int>> sorted(x.cols());
  for (Eigen::Index f = 0; f < x.cols(); ++f) {
    auto& idx = sorted[f];
    idx.resize(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return x(a, f) < x(b, f); });
  }
  TreeBuilder builder{x, y, k, opts, {}, std::vector<char>(n, 0)};
  if (x.cols() == 0) {
    // No features to split on: a single majority leaf.
    std::vector<std::int64_t> counts(k, 0);
    for (int label : y) ++counts[label];
    TreeModel tree;
    tree.nodes.push_back({-1, 0.0, -1, -1, TreeBuilder::majority(counts)});
    return Classifier(std::move(tree), k, 0);
  }
  builder.build(std::move(sorted), 0);
  TreeModel tree{std::move(builder.nodes), builder.max_reached};
  return Classifier(std::move(tree), k, x.cols());
}

Classifier train_mlp(const Eigen::MatrixXd& x, std::span<const int> y, const MlpOptions& opts) {
  check_training_data(x, y);
  if (opts.batch_size <= 0) throw ArgumentError("batch_size must be positive");
  const int k = infer_classes(y, opts.num_classes);
  std::vector<Eigen::Index> sizes{x.cols()};
  std::vector<nn::Activation> acts;
  for (auto h : opts.hidden) {
    sizes.push_back(h);
    acts.push_back(nn::Activation::relu);
  }
  sizes.push_back(k);
  acts.push_back(nn::Activation::linear);
  auto net = nn::init_net<double>(std::span<const Eigen::Index>(sizes), std::span<const nn::Activation>(acts),
                                  opts.seed);
  auto opt = nn::make_optimizer(net, nn::Optimizer::adam, opts.learning_rate);

  std::mt19937_64 rng(opts.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<Eigen::Index> order(x.rows());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += opts.batch_size) {
      std::size_t end = std::min(order.size(), start + opts.batch_size);
      std::span<const Eigen::Index> rows(order.data() + start, end - start);
      Eigen::MatrixXd batch = x(std::vector<Eigen::Index>(rows.begin(), rows.end()), Eigen::all);
      auto fwd = nn::forward(net, batch);
      auto grads = nn::backward(net, fwd.tape, softmax_xent_grad(fwd.output, y, rows));
      nn::opt_step(net, grads, opt);
    }
  }
  return Classifier(MlpModel{std::move(net)}, k, x.cols());
}

}  // namespace idslab
