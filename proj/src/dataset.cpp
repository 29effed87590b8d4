#include "idslab/dataset.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "idslab/error.hpp"

namespace idslab {

namespace {

constexpr std::array<char, kClassCount> kSymbols = {'N', 'D', 'P', 'R', 'U'};
constexpr std::array<std::string_view, kClassCount> kNames = {"Normal", "DoS", "Probe", "R2L",
                                                             "U2R"};

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      return out;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
}

bool parse_double(std::string_view s, double& out) {
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

FeatureSpec cont(std::string name, bool integer = true, bool log = false) {
  FeatureSpec f;
  f.name = std::move(name);
  f.kind = FeatureKind::continuous;
  f.integer_valued = integer;
  f.log_scaled = log;
  return f;
}

FeatureSpec cat(std::string name) {
  FeatureSpec f;
  f.name = std::move(name);
  f.kind = FeatureKind::categorical;
  return f;
}

std::string format_number(double v) {
  if (v == std::floor(v) && std::abs(v) < 1e15) {
    std::ostringstream os;
    os << static_cast<long long>(v);
    return os.str();
  }
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

ClassLabel class_from_id(int id) {
  if (id < 0 || id >= kClassCount) throw ArgumentError("class id out of range: " + std::to_string(id));
  return static_cast<ClassLabel>(id);
}

char class_symbol(ClassLabel c) { return kSymbols[class_id(c)]; }

ClassLabel class_from_symbol(std::string_view symbol) {
  symbol = trim(symbol);
  for (int i = 0; i < kClassCount; ++i) {
    if (symbol.size() == 1 && symbol[0] == kSymbols[i]) return static_cast<ClassLabel>(i);
  }
  throw ArgumentError("unknown class symbol '" + std::string(symbol) + "'");
}

std::string_view class_name(ClassLabel c) { return kNames[class_id(c)]; }

// ---------------------------------------------------------------------------

Schema::Schema(std::vector<FeatureSpec> features) : features_(std::move(features)) {
  std::set<std::string> names;
  std::size_t n_cat = 0;
  slots_.reserve(features_.size());
  for (const auto& f : features_) {
    if (!names.insert(f.name).second) throw ArgumentError("duplicate feature name: " + f.name);
    if (f.kind == FeatureKind::continuous) {
      slots_.push_back(n_continuous_++);
    } else {
      std::set<std::string> seen(f.categories.begin(), f.categories.end());
      if (seen.size() != f.categories.size())
        throw ArgumentError("duplicate category in feature " + f.name);
      slots_.push_back(n_cat++);
    }
  }
}

std::optional<std::size_t> Schema::find(std::string_view name) const {
  for (std::size_t i = 0; i < features_.size(); ++i)
    if (features_[i].name == name) return i;
  return std::nullopt;
}

bool Schema::same_columns(const Schema& other) const {
  if (size() != other.size()) return false;
  for (std::size_t i = 0; i < size(); ++i) {
    if (features_[i].name != other.features_[i].name || features_[i].kind != other.features_[i].kind)
      return false;
  }
  return true;
}

const Schema& nslkdd_schema() {
  static const Schema schema({
      cont("duration", true, true),
      cat("protocol_type"),
      cat("service"),
      cat("flag"),
      cont("src_bytes", true, true),
      cont("dst_bytes", true, true),
      cont("land"),
      cont("wrong_fragment"),
      cont("urgent"),
      cont("hot"),
      cont("num_failed_logins"),
      cont("logged_in"),
      cont("num_compromised"),
      cont("root_shell"),
      cont("su_attempted"),
      cont("num_root"),
      cont("num_file_creations"),
      cont("num_shells"),
      cont("num_access_files"),
      cont("is_host_login"),
      cont("is_guest_login"),
      cont("count"),
      cont("srv_count"),
      cont("serror_rate", false),
      cont("srv_serror_rate", false),
      cont("rerror_rate", false),
      cont("srv_rerror_rate", false),
      cont("same_srv_rate", false),
      cont("diff_srv_rate", false),
      cont("srv_diff_host_rate", false),
      cont("dst_host_count"),
      cont("dst_host_srv_count"),
      cont("dst_host_same_srv_rate", false),
      cont("dst_host_diff_srv_rate", false),
      cont("dst_host_same_src_port_rate", false),
      cont("dst_host_srv_diff_host_rate", false),
      cont("dst_host_serror_rate", false),
      cont("dst_host_srv_serror_rate", false),
      cont("dst_host_rerror_rate", false),
      cont("dst_host_srv_rerror_rate", false),
  });
  return schema;
}

// ---------------------------------------------------------------------------

std::vector<RawRecord> parse_kdd(std::istream& in) {
  const Schema& schema = nslkdd_schema();
  std::vector<RawRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = trim(line);
    if (view.empty()) continue;
    auto fields = split_commas(view);
    if (fields.size() != kRawFeatureColumns + 1 && fields.size() != kRawFeatureColumns + 2) {
      throw ParseError(line_no, "expected 42 or 43 fields, got " + std::to_string(fields.size()));
    }
    RawRecord rec;
    rec.features.numeric.reserve(schema.continuous_count());
    rec.features.categorical.reserve(schema.categorical_count());
    std::size_t feature = 0;
    for (std::size_t col = 0; col < kRawFeatureColumns; ++col) {
      if (col == kDroppedColumn) {
        double ignored;
        if (!parse_double(fields[col], ignored))
          throw ParseError(line_no, "non-numeric value in column " + std::to_string(col + 1));
        continue;
      }
      const auto& spec = schema[feature++];
      if (spec.kind == FeatureKind::categorical) {
        if (fields[col].empty()) throw ParseError(line_no, "empty value for " + spec.name);
        rec.features.categorical.emplace_back(fields[col]);
      } else {
        double v;
        if (!parse_double(fields[col], v))
          throw ParseError(line_no, "non-numeric value '" + std::string(fields[col]) + "' for " +
                                        spec.name);
        rec.features.numeric.push_back(v);
      }
    }
    rec.attack_name = std::string(fields[kRawFeatureColumns]);
    if (rec.attack_name.empty()) throw ParseError(line_no, "empty label");
    if (fields.size() == kRawFeatureColumns + 2) {
      double d;
      if (!parse_double(fields[kRawFeatureColumns + 1], d))
        throw ParseError(line_no, "non-numeric difficulty");
      rec.difficulty = static_cast<int>(d);
    }
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<RawRecord> parse_kdd_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return parse_kdd(in);
}

std::string format_kdd_line(const Row& features, std::string_view label) {
  const Schema& schema = nslkdd_schema();
  std::string line;
  std::size_t feature = 0;
  for (std::size_t col = 0; col < kRawFeatureColumns; ++col) {
    if (col > 0) line += ',';
    if (col == kDroppedColumn) {
      line += '0';
      continue;
    }
    const auto& spec = schema[feature];
    std::size_t slot = schema.slot(feature);
    ++feature;
    if (spec.kind == FeatureKind::categorical) {
      line += features.categorical.at(slot);
    } else {
      line += format_number(features.numeric.at(slot));
    }
  }
  line += ',';
  line += label;
  return line;
}

// ---------------------------------------------------------------------------

AttackMap AttackMap::parse(std::istream& in) {
  AttackMap m;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto view = trim(line);
    if (view.empty() || view.front() == '#') continue;
    auto fields = split_commas(view);
    if (fields.size() != 2) throw ParseError(line_no, "expected attack_name,class_symbol");
    if (line_no == 1 && fields[0] == "attack_name") continue;
    ClassLabel c;
    try {
      c = class_from_symbol(fields[1]);
    } catch (const ArgumentError& e) {
      throw ParseError(line_no, e.what());
    }
    if (!m.map_.emplace(std::string(fields[0]), c).second)
      throw ParseError(line_no, "duplicate attack name " + std::string(fields[0]));
  }
  return m;
}

AttackMap AttackMap::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open attack map " + path.string());
  return parse(in);
}

AttackMap AttackMap::load_default() { return load(IDSLAB_DEFAULT_ATTACK_MAP); }

ClassLabel AttackMap::classify(std::string_view attack_name) const {
  auto it = map_.find(std::string(attack_name));
  if (it == map_.end()) throw UnknownAttackError(std::string(attack_name));
  return it->second;
}

bool AttackMap::contains(std::string_view attack_name) const {
  return map_.count(std::string(attack_name)) > 0;
}

AttackMap AttackMap::with_class_symbols() const {
  AttackMap m = *this;
  for (auto c : kAllClasses) m.map_.emplace(std::string(1, class_symbol(c)), c);
  return m;
}

ClassLabel map_attack_to_class(const AttackMap& map, std::string_view attack_name) {
  return map.classify(attack_name);
}

std::vector<ClassLabel> map_labels(const AttackMap& map, std::span<const RawRecord> records) {
  std::vector<ClassLabel> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(map.classify(r.attack_name));
  return out;
}

ClassCounts class_histogram(std::span<const ClassLabel> labels) {
  ClassCounts counts{};
  for (auto c : labels) ++counts[class_id(c)];
  return counts;
}

// ---------------------------------------------------------------------------

Transformer Transformer::fit(const Schema& schema, std::span<const Row> rows) {
  if (rows.empty()) throw ArgumentError("cannot fit a transformer on zero rows");
  std::vector<FeatureSpec> specs = schema.features();
  Transformer t;
  t.mins_.assign(schema.continuous_count(), 0.0);
  t.maxs_.assign(schema.continuous_count(), 0.0);
  for (std::size_t f = 0; f < specs.size(); ++f) {
    auto& spec = specs[f];
    std::size_t slot = schema.slot(f);
    if (spec.kind == FeatureKind::categorical) {
      if (!spec.categories.empty()) continue;
      std::set<std::string> vocab;
      for (const auto& r : rows) vocab.insert(r.categorical.at(slot));
      spec.categories.assign(vocab.begin(), vocab.end());
    } else {
      double lo = std::numeric_limits<double>::infinity();
      double hi = -lo;
      for (const auto& r : rows) {
        double v = r.numeric.at(slot);
        if (spec.log_scaled) v = std::log1p(std::max(v, 0.0));
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      t.mins_[slot] = lo;
      t.maxs_[slot] = hi;
    }
  }
  t.schema_ = Schema(std::move(specs));
  t.layout();
  return t;
}

void Transformer::layout() {
  blocks_.clear();
  std::size_t offset = 0;
  for (std::size_t f = 0; f < schema_.size(); ++f) {
    const auto& spec = schema_[f];
    std::size_t width = spec.kind == FeatureKind::categorical ? spec.categories.size() : 1;
    blocks_.push_back({f, offset, width});
    offset += width;
  }
  total_dim_ = offset;
}

Eigen::VectorXd Transformer::encode(const Row& row) const {
  Eigen::VectorXd out(total_dim_);
  encode_into(row, out);
  return out;
}

void Transformer::encode_into(const Row& row, Eigen::Ref<Eigen::VectorXd> out) const {
  if (static_cast<std::size_t>(out.size()) != total_dim_)
    throw ArgumentError("encode: output length mismatch");
  out.setZero();
  for (const auto& b : blocks_) {
    const auto& spec = schema_[b.feature];
    std::size_t slot = schema_.slot(b.feature);
    if (spec.kind == FeatureKind::categorical) {
      const auto& value = row.categorical.at(slot);
      auto it = std::find(spec.categories.begin(), spec.categories.end(), value);
      if (it != spec.categories.end()) out[b.offset + (it - spec.categories.begin())] = 1.0;
    } else {
      double v = row.numeric.at(slot);
      if (spec.log_scaled) v = std::log1p(std::max(v, 0.0));
      double lo = mins_[slot], hi = maxs_[slot];
      v = std::clamp(v, lo, hi);
      out[b.offset] = hi > lo ? (v - lo) / (hi - lo) : 0.0;
    }
  }
}

Eigen::MatrixXd Transformer::encode_all(std::span<const Row> rows) const {
  Eigen::MatrixXd m(rows.size(), total_dim_);
  Eigen::VectorXd buf(total_dim_);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    encode_into(rows[i], buf);
    m.row(i) = buf.transpose();
  }
  return m;
}

Row Transformer::decode(const Eigen::Ref<const Eigen::VectorXd>& vec, bool round_integers) const {
  if (static_cast<std::size_t>(vec.size()) != total_dim_)
    throw ArgumentError("decode: expected length " + std::to_string(total_dim_) + ", got " +
                        std::to_string(vec.size()));
  Row row;
  row.numeric.resize(schema_.continuous_count());
  row.categorical.resize(schema_.categorical_count());
  for (const auto& b : blocks_) {
    const auto& spec = schema_[b.feature];
    std::size_t slot = schema_.slot(b.feature);
    if (spec.kind == FeatureKind::categorical) {
      std::size_t best = 0;
      for (std::size_t k = 1; k < b.width; ++k)
        if (vec[b.offset + k] > vec[b.offset + best]) best = k;
      if (b.width == 0 || !(vec[b.offset + best] > 0.0))
        throw DecodeError("all-zero one-hot group for " + spec.name);
      row.categorical[slot] = spec.categories[best];
    } else {
      double lo = mins_[slot], hi = maxs_[slot];
      double v = lo + std::clamp(vec[b.offset], 0.0, 1.0) * (hi - lo);
      if (spec.log_scaled) v = std::expm1(v);
      if (round_integers && spec.integer_valued) v = std::round(v);
      row.numeric[slot] = v;
    }
  }
  return row;
}

nlohmann::json Transformer::to_json() const {
  nlohmann::json features = nlohmann::json::array();
  for (std::size_t f = 0; f < schema_.size(); ++f) {
    const auto& spec = schema_[f];
    nlohmann::json j{{"name", spec.name}};
    if (spec.kind == FeatureKind::categorical) {
      j["kind"] = "categorical";
      j["categories"] = spec.categories;
    } else {
      j["kind"] = "continuous";
      j["log_scaled"] = spec.log_scaled;
      j["integer_valued"] = spec.integer_valued;
      j["min"] = mins_[schema_.slot(f)];
      j["max"] = maxs_[schema_.slot(f)];
    }
    features.push_back(std::move(j));
  }
  return {{"format", "idslab-transformer"}, {"version", 1}, {"features", std::move(features)}};
}

Transformer Transformer::from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "idslab-transformer" || j.value("version", 0) != 1)
    throw ArgumentError("not an idslab-transformer v1 document");
  std::vector<FeatureSpec> specs;
  std::vector<double> mins, maxs;
  for (const auto& jf : j.at("features")) {
    FeatureSpec spec;
    spec.name = jf.at("name").get<std::string>();
    if (jf.at("kind") == "categorical") {
      spec.kind = FeatureKind::categorical;
      spec.categories = jf.at("categories").get<std::vector<std::string>>();
    } else {
      spec.kind = FeatureKind::continuous;
      spec.log_scaled = jf.at("log_scaled").get<bool>();
      spec.integer_valued = jf.at("integer_valued").get<bool>();
      mins.push_back(jf.at("min").get<double>());
      maxs.push_back(jf.at("max").get<double>());
    }
    specs.push_back(std::move(spec));
  }
  Transformer t;
  t.schema_ = Schema(std::move(specs));
  t.mins_ = std::move(mins);
  t.maxs_ = std::move(maxs);
  t.layout();
  return t;
}

// ---------------------------------------------------------------------------

EncodedDataset encode_dataset(const Transformer& t, std::span<const RawRecord> records,
                              std::span<const ClassLabel> labels) {
  if (records.size() != labels.size()) throw ArgumentError("records/labels length mismatch");
  EncodedDataset out;
  out.features.resize(records.size(), t.total_dim());
  Eigen::VectorXd buf(t.total_dim());
  for (std::size_t i = 0; i < records.size(); ++i) {
    t.encode_into(records[i].features, buf);
    out.features.row(i) = buf.transpose();
  }
  out.labels.assign(labels.begin(), labels.end());
  return out;
}

namespace {

constexpr char kMagic[4] = {'I', 'D', 'S', 'M'};
constexpr std::uint32_t kEncodedVersion = 1;

template <typename T>
void write_le(std::ostream& out, T value) {
  static_assert(std::endian::native == std::endian::little, "little-endian host required");
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_le(std::istream& in) {
  T value;
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T)))
    throw std::runtime_error("truncated encoded dataset");
  return value;
}

}  // namespace

void save_encoded(const EncodedDataset& data, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(kMagic, 4);
  write_le<std::uint32_t>(out, kEncodedVersion);
  write_le<std::uint64_t>(out, data.features.rows());
  write_le<std::uint64_t>(out, data.features.cols());
  for (Eigen::Index i = 0; i < data.features.rows(); ++i)
    for (Eigen::Index j = 0; j < data.features.cols(); ++j) write_le<double>(out, data.features(i, j));
  for (auto c : data.labels) write_le<std::uint8_t>(out, static_cast<std::uint8_t>(c));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

EncodedDataset load_encoded(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) throw std::runtime_error("bad magic in " + path.string());
  if (read_le<std::uint32_t>(in) != kEncodedVersion)
    throw std::runtime_error("unsupported encoded dataset version");
  auto rows = read_le<std::uint64_t>(in);
  auto cols = read_le<std::uint64_t>(in);
  EncodedDataset data;
  data.features.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::uint64_t i = 0; i < rows; ++i)
    for (std::uint64_t j = 0; j < cols; ++j) data.features(i, j) = read_le<double>(in);
  data.labels.reserve(rows);
  for (std::uint64_t i = 0; i < rows; ++i) data.labels.push_back(class_from_id(read_le<std::uint8_t>(in)));
  return data;
}

void save_transformer(const Transformer& t, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << t.to_json().dump(1) << '\n';
}

Transformer load_transformer(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return Transformer::from_json(nlohmann::json::parse(in));
}

// ---------------------------------------------------------------------------

Schema with_class_column(const Schema& schema) {
  auto specs = schema.features();
  FeatureSpec label;
  label.name = std::string(kClassColumn);
  label.kind = FeatureKind::categorical;
  for (auto c : kAllClasses) label.categories.emplace_back(1, class_symbol(c));
  specs.push_back(std::move(label));
  return Schema(std::move(specs));
}

Row with_class(Row row, ClassLabel label) {
  row.categorical.emplace_back(1, class_symbol(label));
  return row;
}

Table labeled_table(std::span<const RawRecord> records, std::span<const ClassLabel> labels) {
  if (records.size() != labels.size()) throw ArgumentError("records/labels length mismatch");
  Table t;
  t.schema = with_class_column(nslkdd_schema());
  t.rows.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) t.rows.push_back(with_class(records[i].features, labels[i]));
  return t;
}

std::vector<std::size_t> stratified_subset(std::span<const ClassLabel> labels, double fraction,
                                           std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ArgumentError("fraction must lie in (0,1]");
  std::array<std::vector<std::size_t>, kClassCount> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[class_id(labels[i])].push_back(i);
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> keep;
  for (auto& idx : by_class) {
    std::shuffle(idx.begin(), idx.end(), rng);
    auto n = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(idx.size())));
    keep.insert(keep.end(), idx.begin(), idx.begin() + std::min(n, idx.size()));
  }
  std::sort(keep.begin(), keep.end());
  return keep;
}

}  // namespace idslab
