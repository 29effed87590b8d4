#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

namespace idslab {

// ---------------------------------------------------------------------------
// Class taxonomy
// ---------------------------------------------------------------------------

enum class ClassLabel : std::uint8_t { normal = 0, dos = 1, probe = 2, r2l = 3, u2r = 4 };

inline constexpr int kClassCount = 5;
inline constexpr std::array<ClassLabel, kClassCount> kAllClasses = {
    ClassLabel::normal, ClassLabel::dos, ClassLabel::probe, ClassLabel::r2l, ClassLabel::u2r};

/// Combined KDDTrain+ / KDDTest+ record count per class after mapping.
inline constexpr std::array<std::size_t, kClassCount> kReferenceClassCounts = {77054, 53387, 14077,
                                                                               3880, 119};
inline constexpr std::size_t kTrainRecordCount = 125973;
inline constexpr std::size_t kTestRecordCount = 22544;

constexpr int class_id(ClassLabel c) { return static_cast<int>(c); }
ClassLabel class_from_id(int id);
char class_symbol(ClassLabel c);
ClassLabel class_from_symbol(std::string_view symbol);
std::string_view class_name(ClassLabel c);

/// Normal -> 0, every attack class -> 1.
constexpr int to_binary(ClassLabel c) { return c == ClassLabel::normal ? 0 : 1; }

// ---------------------------------------------------------------------------
// Schema and records
// ---------------------------------------------------------------------------

enum class FeatureKind { continuous, categorical };

struct FeatureSpec {
  std::string name;
  FeatureKind kind = FeatureKind::continuous;
  /// Categorical only. Empty before fit means "learn the vocabulary"; a
  /// non-empty list is kept as-is by Transformer::fit.
  std::vector<std::string> categories;
  bool log_scaled = false;      // continuous only: log1p before min-max
  bool integer_valued = false;  // continuous only: rounded on decode
};

/// Ordered feature list. Continuous values and categorical values of a Row
/// are stored in separate arrays; slot() maps a feature index into the
/// array matching its kind.
class Schema {
 public:
  Schema() = default;
  explicit Schema(std::vector<FeatureSpec> features);

  const std::vector<FeatureSpec>& features() const { return features_; }
  const FeatureSpec& operator[](std::size_t i) const { return features_[i]; }
  std::size_t size() const { return features_.size(); }
  std::size_t continuous_count() const { return n_continuous_; }
  std::size_t categorical_count() const { return features_.size() - n_continuous_; }
  std::size_t slot(std::size_t feature) const { return slots_[feature]; }
  std::optional<std::size_t> find(std::string_view name) const;

  bool same_columns(const Schema& other) const;

 private:
  std::vector<FeatureSpec> features_;
  std::vector<std::size_t> slots_;
  std::size_t n_continuous_ = 0;
};

struct Row {
  std::vector<double> numeric;
  std::vector<std::string> categorical;

  friend bool operator==(const Row&, const Row&) = default;
};

/// One NSL-KDD record with num_outbound_cmds already dropped.
struct RawRecord {
  Row features;
  std::string attack_name;
  int difficulty = -1;  // -1 when the file has no difficulty column
};

/// The 40 NSL-KDD input features (num_outbound_cmds removed), in file order.
const Schema& nslkdd_schema();

/// Column index of num_outbound_cmds in a raw NSL-KDD line.
inline constexpr std::size_t kDroppedColumn = 19;
inline constexpr std::size_t kRawFeatureColumns = 41;

/// Parses NSL-KDD text. Lines carry 41 features + label (+ difficulty).
/// Blank lines are skipped; anything else malformed throws ParseError.
std::vector<RawRecord> parse_kdd(std::istream& in);
std::vector<RawRecord> parse_kdd_file(const std::filesystem::path& path);

/// One NSL-KDD CSV line (41 features with num_outbound_cmds=0, then label).
std::string format_kdd_line(const Row& features, std::string_view label);

// ---------------------------------------------------------------------------
// Attack name -> class mapping
// ---------------------------------------------------------------------------

class AttackMap {
 public:
  /// Reads `attack_name,class_symbol` lines; a header line is allowed.
  static AttackMap parse(std::istream& in);
  static AttackMap load(const std::filesystem::path& path);
  static AttackMap load_default();

  /// Throws UnknownAttackError for names absent from the map.
  ClassLabel classify(std::string_view attack_name) const;
  bool contains(std::string_view attack_name) const;
  std::size_t size() const { return map_.size(); }

  /// Also accept the bare class symbols N/D/P/R/U, which is how exported
  /// synthetic rows are labeled.
  AttackMap with_class_symbols() const;

 private:
  std::unordered_map<std::string, ClassLabel> map_;
};

ClassLabel map_attack_to_class(const AttackMap& map, std::string_view attack_name);
std::vector<ClassLabel> map_labels(const AttackMap& map, std::span<const RawRecord> records);

using ClassCounts = std::array<std::size_t, kClassCount>;
ClassCounts class_histogram(std::span<const ClassLabel> labels);

// ---------------------------------------------------------------------------
// Encoding
// ---------------------------------------------------------------------------

/// Reversible record <-> [0,1]^d encoding: min-max for continuous features
/// (after log1p where flagged), one-hot for categorical ones. Immutable
/// after fit.
class Transformer {
 public:
  struct Block {
    std::size_t feature;
    std::size_t offset;
    std::size_t width;
  };

  Transformer() = default;

  static Transformer fit(const Schema& schema, std::span<const Row> rows);

  Eigen::VectorXd encode(const Row& row) const;
  void encode_into(const Row& row, Eigen::Ref<Eigen::VectorXd> out) const;
  Eigen::MatrixXd encode_all(std::span<const Row> rows) const;

  /// Inverse of encode. One-hot groups decode by argmax (lowest index on
  /// ties); a group with no positive entry throws DecodeError.
  Row decode(const Eigen::Ref<const Eigen::VectorXd>& vec, bool round_integers = true) const;

  const Schema& schema() const { return schema_; }
  std::size_t total_dim() const { return total_dim_; }
  const std::vector<Block>& blocks() const { return blocks_; }
  const std::vector<double>& mins() const { return mins_; }
  const std::vector<double>& maxs() const { return maxs_; }

  nlohmann::json to_json() const;
  static Transformer from_json(const nlohmann::json& j);

 private:
  void layout();

  Schema schema_;
  std::vector<double> mins_;  // per continuous slot, post-log1p
  std::vector<double> maxs_;
  std::vector<Block> blocks_;
  std::size_t total_dim_ = 0;
};

struct EncodedDataset {
  Eigen::MatrixXd features;  // n x total_dim, entries in [0,1]
  std::vector<ClassLabel> labels;

  std::size_t size() const { return labels.size(); }
};

EncodedDataset encode_dataset(const Transformer& t, std::span<const RawRecord> records,
                              std::span<const ClassLabel> labels);

/// Binary layout documented in docs/formats.md ("IDSM", version 1).
void save_encoded(const EncodedDataset& data, const std::filesystem::path& path);
EncodedDataset load_encoded(const std::filesystem::path& path);

void save_transformer(const Transformer& t, const std::filesystem::path& path);
Transformer load_transformer(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Row tables (used by the fidelity metrics and the GAN)
// ---------------------------------------------------------------------------

struct Table {
  Schema schema;
  std::vector<Row> rows;

  std::size_t size() const { return rows.size(); }
};

inline constexpr std::string_view kClassColumn = "class";

/// Appends a categorical "class" column with fixed categories N,D,P,R,U.
Schema with_class_column(const Schema& schema);
Row with_class(Row row, ClassLabel label);
Table labeled_table(std::span<const RawRecord> records, std::span<const ClassLabel> labels);

/// Stratified subset: keeps ceil(fraction * count) rows of every class,
/// chosen by a seeded shuffle. Row order of the result follows the input.
std::vector<std::size_t> stratified_subset(std::span<const ClassLabel> labels, double fraction,
                                           std::uint64_t seed);

}  // namespace idslab
