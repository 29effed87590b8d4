#include "idslab/gan.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "idslab/error.hpp"

namespace idslab {

namespace {

constexpr std::size_t kSampleChunk = 1000;

using Matrix = Eigen::MatrixXd;

std::size_t class_slot_of(const Schema& schema) {
  auto f = schema.find(kClassColumn);
  if (!f || schema[*f].kind != FeatureKind::categorical) throw ArgumentError("table lacks a categorical class column");
  if (schema.slot(*f) + 1 != schema.categorical_count())
    throw ArgumentError("class column must be the last categorical column");
  const auto& cats = schema[*f].categories;
  if (cats.size() != kClassCount) throw ArgumentError("class column must declare the five class symbols");
  for (auto c : kAllClasses)
    if (cats[class_id(c)] != std::string(1, class_symbol(c)))
      throw ArgumentError("class column categories must be N,D,P,R,U in id order");
  return *f;
}

const Transformer::Block& class_block(const Transformer& t) {
  auto f = t.schema().find(kClassColumn);
  return t.blocks()[*f];
}

double gumbel(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double x = u(rng);
  while (x <= 0.0) x = u(rng);
  return -std::log(-std::log(x));
}

Matrix noise_with_condition(Eigen::Index rows, Eigen::Index noise_dim, std::span<const ClassLabel> cond,
                            std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix z = Matrix::Zero(rows, noise_dim + kClassCount);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < noise_dim; ++c) z(r, c) = normal(rng);
    z(r, noise_dim + class_id(cond[r])) = 1.0;
  }
  return z;
}

Matrix with_condition(const Matrix& x, std::span<const ClassLabel> cond) {
  Matrix out = Matrix::Zero(x.rows(), x.cols() + kClassCount);
  out.leftCols(x.cols()) = x;
  for (Eigen::Index r = 0; r < x.rows(); ++r) out(r, x.cols() + class_id(cond[r])) = 1.0;
  return out;
}

/// Soft output activations for training: sigmoid per continuous slot,
/// Gumbel-softmax per categorical group.
Matrix soft_outputs(const Transformer& t, const Matrix& logits, double tau, std::mt19937_64& rng) {
  Matrix y(logits.rows(), logits.cols());
  for (const auto& b : t.blocks()) {
    if (t.schema()[b.feature].kind == FeatureKind::continuous) {
      y.col(b.offset) = logits.col(b.offset).unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
      continue;
    }
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
      Eigen::RowVectorXd g(b.width);
      for (std::size_t k = 0; k < b.width; ++k) g[k] = (logits(r, b.offset + k) + gumbel(rng)) / tau;
      g.array() -= g.maxCoeff();
      g = g.array().exp();
      y.block(r, b.offset, 1, b.width) = g / g.sum();
    }
  }
  return y;
}

Matrix soft_outputs_backward(const Transformer& t, const Matrix& y, const Matrix& dy, double tau) {
  Matrix dz(y.rows(), y.cols());
  for (const auto& b : t.blocks()) {
    if (t.schema()[b.feature].kind == FeatureKind::continuous) {
      dz.col(b.offset) = dy.col(b.offset).cwiseProduct(y.col(b.offset).cwiseProduct((1.0 - y.col(b.offset).array()).matrix()));
      continue;
    }
    auto yb = y.middleCols(b.offset, b.width);
    auto db = dy.middleCols(b.offset, b.width);
    Eigen::VectorXd dot = yb.cwiseProduct(db).rowwise().sum();
    dz.middleCols(b.offset, b.width) = (yb.array() * (db.colwise() - dot).array()) / tau;
  }
  return dz;
}

template <typename Grads>
void add_into(Grads& acc, const Grads& g) {
  for (std::size_t i = 0; i < acc.weights.size(); ++i) {
    acc.weights[i] += g.weights[i];
    acc.bias[i] += g.bias[i];
  }
}

nn::DenseNet<double> build_net(Eigen::Index in, const std::vector<Eigen::Index>& hidden, Eigen::Index out,
                               nn::Activation hidden_act, std::uint64_t seed) {
  std::vector<Eigen::Index> sizes{in};
  std::vector<nn::Activation> acts;
  for (auto h : hidden) {
    sizes.push_back(h);
    acts.push_back(hidden_act);
  }
  sizes.push_back(out);
  acts.push_back(nn::Activation::linear);
  return nn::init_net<double>(std::span<const Eigen::Index>(sizes), std::span<const nn::Activation>(acts), seed);
}

}  // namespace

// ---------------------------------------------------------------------------

void GanConfig::validate() const {
  if (epochs < 0 || batch_size < 1 || critic_steps < 1 || noise_dim < 1)
    throw ArgumentError("GAN config: sizes must be positive and critic_steps >= 1");
  if (!(weight_clip > 0) || !(learning_rate > 0) || !(gumbel_temperature > 0))
    throw ArgumentError("GAN config: weight_clip, learning_rate, gumbel_temperature must be positive");
  for (auto h : hidden)
    if (h < 1) throw ArgumentError("GAN config: hidden sizes must be positive");
}

nlohmann::json GanConfig::to_json() const {
  return {{"epochs", epochs},
          {"batch_size", batch_size},
          {"critic_steps", critic_steps},
          {"noise_dim", noise_dim},
          {"hidden", hidden},
          {"weight_clip", weight_clip},
          {"learning_rate", learning_rate},
          {"gumbel_temperature", gumbel_temperature},
          {"seed", seed}};
}

GanConfig GanConfig::from_json(const nlohmann::json& j) {
  GanConfig c;
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.critic_steps = j.value("critic_steps", c.critic_steps);
  c.noise_dim = j.value("noise_dim", c.noise_dim);
  c.hidden = j.value("hidden", c.hidden);
  c.weight_clip = j.value("weight_clip", c.weight_clip);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.gumbel_temperature = j.value("gumbel_temperature", c.gumbel_temperature);
  c.seed = j.value("seed", c.seed);
  c.validate();
  return c;
}

nlohmann::json GanModel::to_json() const {
  return {{"format", "idslab-gan"},
          {"version", 1},
          {"config", config.to_json()},
          {"class_counts", class_counts},
          {"transformer", transformer.to_json()},
          {"generator", nn::to_json(generator)},
          {"critic", nn::to_json(critic)}};
}

GanModel GanModel::from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "idslab-gan" || j.value("version", 0) != 1)
    throw ArgumentError("not an idslab-gan v1 document");
  GanModel m;
  m.config = GanConfig::from_json(j.at("config"));
  m.class_counts = j.at("class_counts").get<ClassCounts>();
  m.transformer = Transformer::from_json(j.at("transformer"));
  m.generator = nn::from_json(j.at("generator"));
  m.critic = nn::from_json(j.at("critic"));
  class_slot_of(m.transformer.schema());
  if (m.generator.output_size() != static_cast<Eigen::Index>(m.transformer.total_dim()))
    throw ArgumentError("GAN checkpoint: generator output does not match transformer");
  return m;
}

// ---------------------------------------------------------------------------

GanTrainResult train_gan(const Table& table, const GanConfig& config, const GanHooks& hooks) {
  config.validate();
  if (table.rows.empty()) throw ArgumentError("train_gan: empty table");
  const std::size_t class_feature = class_slot_of(table.schema);
  const std::size_t class_slot = table.schema.slot(class_feature);

  std::array<std::vector<Eigen::Index>, kClassCount> by_class;
  GanTrainResult result;
  GanModel& model = result.model;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    auto c = class_from_symbol(table.rows[i].categorical.at(class_slot));
    by_class[class_id(c)].push_back(static_cast<Eigen::Index>(i));
    ++model.class_counts[class_id(c)];
  }
  for (auto c : kAllClasses)
    if (by_class[class_id(c)].empty())
      throw ArgumentError("train_gan: class " + std::string(class_name(c)) + " absent from training data");

  model.config = config;
  model.transformer = Transformer::fit(table.schema, table.rows);
  const Matrix data = model.transformer.encode_all(table.rows);
  const auto dim = static_cast<Eigen::Index>(model.transformer.total_dim());

  model.generator = build_net(config.noise_dim + kClassCount, config.hidden, dim, nn::Activation::relu, config.seed);
  model.critic = build_net(dim + kClassCount, config.hidden, 1, nn::Activation::leaky_relu, config.seed + 1);
  nn::clip_parameters(model.critic, config.weight_clip);

  auto g_opt = nn::make_optimizer(model.generator, nn::Optimizer::rmsprop, config.learning_rate);
  auto c_opt = nn::make_optimizer(model.critic, nn::Optimizer::rmsprop, config.learning_rate);
  std::mt19937_64 rng(config.seed ^ 0x5851f42d4c957f2dULL);
  std::uniform_int_distribution<int> pick_class(0, kClassCount - 1);

  const Eigen::Index batch = config.batch_size;
  const auto steps_per_epoch = std::max<std::size_t>(1, table.rows.size() / static_cast<std::size_t>(batch));
  const double inv_b = 1.0 / static_cast<double>(batch);
  const double tau = config.gumbel_temperature;
  std::vector<ClassLabel> cond(batch);
  std::vector<Eigen::Index> real_rows(batch);

  auto fake_batch = [&](ClassLabel c, nn::ForwardResult<double>& gen, Matrix& soft) {
    std::fill(cond.begin(), cond.end(), c);
    gen = nn::forward(model.generator, noise_with_condition(batch, config.noise_dim, cond, rng));
    soft = soft_outputs(model.transformer, gen.output, tau, rng);
  };

  std::int64_t step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t s = 0; s < steps_per_epoch; ++s) {
      double critic_loss = 0.0;
      for (int k = 0; k < config.critic_steps; ++k) {
        const auto c = class_from_id(pick_class(rng));
        const auto& pool = by_class[class_id(c)];
        std::uniform_int_distribution<std::size_t> pick_row(0, pool.size() - 1);
        for (auto& r : real_rows) r = pool[pick_row(rng)];

        nn::ForwardResult<double> gen;
        Matrix soft;
        fake_batch(c, gen, soft);
        auto real_out = nn::forward(model.critic, with_condition(data(real_rows, Eigen::all), cond));
        auto fake_out = nn::forward(model.critic, with_condition(soft, cond));
        critic_loss = -(real_out.output.mean() - fake_out.output.mean());

        auto grads = nn::backward(model.critic, real_out.tape, Matrix::Constant(batch, 1, -inv_b));
        add_into(grads, nn::backward(model.critic, fake_out.tape, Matrix::Constant(batch, 1, inv_b)));
        nn::opt_step(model.critic, grads, c_opt);
        nn::clip_parameters(model.critic, config.weight_clip);
        if (hooks.after_critic_step) hooks.after_critic_step(model.critic);
      }

      const auto c = class_from_id(pick_class(rng));
      nn::ForwardResult<double> gen;
      Matrix soft;
      fake_batch(c, gen, soft);
      auto fake_out = nn::forward(model.critic, with_condition(soft, cond));
      const double generator_loss = -fake_out.output.mean();
      auto critic_grads = nn::backward(model.critic, fake_out.tape, Matrix::Constant(batch, 1, -inv_b));
      Matrix d_soft = critic_grads.input.leftCols(dim);
      Matrix d_logits = soft_outputs_backward(model.transformer, soft, d_soft, tau);
      auto g_grads = nn::backward(model.generator, gen.tape, d_logits);
      nn::opt_step(model.generator, g_grads, g_opt);

      result.losses.push_back({step++, critic_loss, generator_loss});
    }
  }
  return result;
}

Eigen::MatrixXd generate_encoded(const GanModel& model, std::span<const ClassLabel> conditions, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const auto rows = static_cast<Eigen::Index>(conditions.size());
  Matrix logits = nn::predict(model.generator, noise_with_condition(rows, model.config.noise_dim, conditions, rng));
  Matrix out = Matrix::Zero(rows, logits.cols());
  const auto& t = model.transformer;
  for (const auto& b : t.blocks()) {
    if (t.schema()[b.feature].kind == FeatureKind::continuous) {
      out.col(b.offset) = logits.col(b.offset).unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
      continue;
    }
    for (Eigen::Index r = 0; r < rows; ++r) {
      std::size_t best = 0;
      double best_v = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < b.width; ++k) {
        double v = logits(r, b.offset + k) + gumbel(rng);
        if (v > best_v) {
          best_v = v;
          best = k;
        }
      }
      out(r, b.offset + best) = 1.0;
    }
  }
  return out;
}

std::vector<LabeledRow> sample_unconditional(const GanModel& model, std::size_t n, std::uint64_t seed) {
  std::vector<LabeledRow> out;
  if (n == 0) return out;
  out.reserve(n);
  std::mt19937_64 rng(seed);
  std::discrete_distribution<int> pick(model.class_counts.begin(), model.class_counts.end());
  while (out.size() < n) {
    const std::size_t len = std::min(kSampleChunk, n - out.size());
    std::vector<ClassLabel> cond(len);
    for (auto& c : cond) c = class_from_id(pick(rng));
    Matrix enc = generate_encoded(model, cond, rng());
    for (std::size_t r = 0; r < len; ++r) {
      Row row = model.transformer.decode(enc.row(r).transpose());
      row.categorical.pop_back();  // class column is the last categorical slot
      out.push_back({std::move(row), cond[r]});
    }
  }
  return out;
}

std::vector<Row> sample_conditional(const GanModel& model, ClassLabel target, std::size_t n, std::uint64_t seed) {
  std::vector<Row> out;
  if (n == 0) return out;
  out.reserve(n);
  std::mt19937_64 rng(seed);
  const auto& label_block = class_block(model.transformer);
  const std::size_t cap = 50 * n;
  std::size_t attempts = 0;
  while (out.size() < n) {
    if (attempts >= cap)
      throw SamplingStarvationError("conditional sampling for class " + std::string(class_name(target)) + " kept " +
                                    std::to_string(out.size()) + " of " + std::to_string(n) + " rows after " +
                                    std::to_string(attempts) + " attempts");
    const std::size_t len = std::min(kSampleChunk, cap - attempts);
    std::vector<ClassLabel> cond(len, target);
    Matrix enc = generate_encoded(model, cond, rng());
    attempts += len;
    for (std::size_t r = 0; r < len && out.size() < n; ++r) {
      if (enc(r, label_block.offset + class_id(target)) != 1.0) continue;
      Row row = model.transformer.decode(enc.row(r).transpose());
      row.categorical.pop_back();
      out.push_back(std::move(row));
    }
  }
  return out;
}

void export_synthetic(std::span<const LabeledRow> rows, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& r : rows) out << format_kdd_line(r.features, std::string(1, class_symbol(r.label))) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

void save_gan(const GanModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << model.to_json().dump() << '\n';
}

GanModel load_gan(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return GanModel::from_json(nlohmann::json::parse(in));
}

}  // namespace idslab
