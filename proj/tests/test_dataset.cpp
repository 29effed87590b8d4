#include <cmath>
#include <filesystem>
#include <random>
#include <set>
#include <sstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "idslab/dataset.hpp"
#include "idslab/error.hpp"

using namespace idslab;

namespace {

std::vector<RawRecord> fixture_records(std::size_t n, std::uint64_t seed = 7) {
  std::istringstream in(testing::make_kdd_text(n, seed));
  return parse_kdd(in);
}

std::vector<Row> rows_of(const std::vector<RawRecord>& recs) {
  std::vector<Row> rows;
  for (const auto& r : recs) rows.push_back(r.features);
  return rows;
}

}  // namespace

TEST_CASE("class taxonomy ids and symbols") {
  CHECK(class_symbol(ClassLabel::normal) == 'N');
  CHECK(class_symbol(ClassLabel::dos) == 'D');
  CHECK(class_symbol(ClassLabel::probe) == 'P');
  CHECK(class_symbol(ClassLabel::r2l) == 'R');
  CHECK(class_symbol(ClassLabel::u2r) == 'U');
  for (auto c : kAllClasses) {
    CHECK(class_from_symbol(std::string(1, class_symbol(c))) == c);
    CHECK(class_from_id(class_id(c)) == c);
  }
  CHECK_THROWS_AS(class_from_symbol("X"), ArgumentError);
  CHECK_THROWS_AS(class_from_id(5), ArgumentError);
}

TEST_CASE("to_binary") {
  CHECK(to_binary(ClassLabel::normal) == 0);
  CHECK(to_binary(ClassLabel::dos) == 1);
  CHECK(to_binary(ClassLabel::u2r) == 1);
}

TEST_CASE("NSL-KDD schema has 40 input features") {
  const auto& s = nslkdd_schema();
  CHECK(s.size() == 40);
  CHECK(s.categorical_count() == 3);
  CHECK(s.continuous_count() == 37);
  CHECK_FALSE(s.find("num_outbound_cmds").has_value());
  CHECK(s[*s.find("src_bytes")].log_scaled);
  CHECK_FALSE(s[*s.find("serror_rate")].integer_valued);
}

TEST_CASE("parse_kdd") {
  SUBCASE("empty stream") {
    std::istringstream in("");
    CHECK(parse_kdd(in).empty());
  }
  SUBCASE("drops num_outbound_cmds and keeps every record") {
    auto recs = fixture_records(200);
    CHECK(recs.size() == 200);
    for (const auto& r : recs) {
      CHECK(r.features.numeric.size() == 37);
      CHECK(r.features.categorical.size() == 3);
      CHECK(r.difficulty >= 10);
    }
  }
  SUBCASE("42-field lines have no difficulty") {
    std::istringstream in(testing::make_kdd_text(3, 1, false));
    auto recs = parse_kdd(in);
    REQUIRE(recs.size() == 3);
    CHECK(recs[0].difficulty == -1);
  }
  SUBCASE("wrong field count names the line") {
    std::istringstream in(testing::make_kdd_text(2, 1) + "0,tcp,http\n");
    try {
      parse_kdd(in);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 3);
    }
  }
  SUBCASE("non-numeric value in a numeric field") {
    std::string text = testing::make_kdd_text(1, 3);
    text.replace(0, text.find(','), "abc");
    std::istringstream in(text);
    CHECK_THROWS_AS(parse_kdd(in), ParseError);
  }
}

TEST_CASE("attack map") {
  auto map = AttackMap::load_default();
  CHECK(map.size() == 40);  // normal + 22 train + 17 test-only names
  CHECK(map_attack_to_class(map, "normal") == ClassLabel::normal);
  CHECK(map_attack_to_class(map, "neptune") == ClassLabel::dos);
  CHECK(map_attack_to_class(map, "satan") == ClassLabel::probe);
  CHECK(map_attack_to_class(map, "guess_passwd") == ClassLabel::r2l);
  CHECK(map_attack_to_class(map, "buffer_overflow") == ClassLabel::u2r);
  CHECK(map_attack_to_class(map, "worm") == ClassLabel::dos);
  CHECK_THROWS_AS(map_attack_to_class(map, "not_an_attack"), UnknownAttackError);
  CHECK_THROWS_AS(map_attack_to_class(map, "N"), UnknownAttackError);
  CHECK(map.with_class_symbols().classify("U") == ClassLabel::u2r);

  std::istringstream bad("attack_name,class_symbol\nfoo,Z\n");
  CHECK_THROWS_AS(AttackMap::parse(bad), ParseError);
}

TEST_CASE("class_histogram") {
  CHECK(class_histogram({}) == ClassCounts{0, 0, 0, 0, 0});
  auto recs = fixture_records(300);
  auto labels = map_labels(AttackMap::load_default(), recs);
  auto h = class_histogram(labels);
  std::size_t sum = 0;
  for (auto c : h) sum += c;
  CHECK(sum == 300);
}

TEST_CASE("transformer fit and encode") {
  auto recs = fixture_records(500);
  auto rows = rows_of(recs);
  auto t = Transformer::fit(nslkdd_schema(), rows);

  std::set<std::string> protocols;
  for (const auto& r : rows) protocols.insert(r.categorical[0]);
  const auto& proto_spec = t.schema()[*t.schema().find("protocol_type")];
  CHECK(proto_spec.categories.size() == protocols.size());

  std::size_t expected_dim = t.schema().continuous_count();
  for (const auto& f : t.schema().features())
    if (f.kind == FeatureKind::categorical) expected_dim += f.categories.size();
  CHECK(t.total_dim() == expected_dim);

  SUBCASE("one-hot and range invariants") {
    auto m = t.encode_all(rows);
    CHECK(m.minCoeff() >= 0.0);
    CHECK(m.maxCoeff() <= 1.0);
    for (const auto& b : t.blocks()) {
      if (t.schema()[b.feature].kind != FeatureKind::categorical) continue;
      auto sums = m.middleCols(b.offset, b.width).rowwise().sum();
      CHECK((sums.array() == 1.0).all());
    }
  }
  SUBCASE("seen category is exactly one 1") {
    Row r = rows[0];
    r.categorical[0] = "tcp";
    auto v = t.encode(r);
    const auto& b = t.blocks()[*t.schema().find("protocol_type")];
    CHECK(v.segment(b.offset, b.width).sum() == 1.0);
  }
  SUBCASE("unseen category encodes to an all-zero group and fails to decode") {
    Row r = rows[0];
    r.categorical[1] = "never_seen_service";
    auto v = t.encode(r);
    const auto& b = t.blocks()[*t.schema().find("service")];
    CHECK(v.segment(b.offset, b.width).sum() == 0.0);
    CHECK_THROWS_AS(t.decode(v), DecodeError);
  }
  SUBCASE("fitted max maps to 1") {
    std::size_t slot = nslkdd_schema().slot(*nslkdd_schema().find("src_bytes"));
    double mx = 0;
    for (const auto& r : rows) mx = std::max(mx, r.numeric[slot]);
    Row r = rows[0];
    r.numeric[slot] = mx;
    CHECK(t.encode(r)[t.blocks()[*t.schema().find("src_bytes")].offset] == doctest::Approx(1.0).epsilon(1e-15));
    r.numeric[slot] = mx * 1000;  // clipped
    CHECK(t.encode(r)[t.blocks()[*t.schema().find("src_bytes")].offset] == 1.0);
  }
  SUBCASE("encode is pure") { CHECK(t.encode(rows[3]) == t.encode(rows[3])); }
}

TEST_CASE("decode round-trip over training records") {
  auto recs = fixture_records(400, 11);
  auto rows = rows_of(recs);
  auto t = Transformer::fit(nslkdd_schema(), rows);
  for (const auto& r : rows) {
    auto v = t.encode(r);
    Row back = t.decode(v, false);
    CHECK(back.categorical == r.categorical);
    for (std::size_t i = 0; i < r.numeric.size(); ++i) CHECK(std::abs(back.numeric[i] - r.numeric[i]) < 1e-9 * std::max(1.0, std::abs(r.numeric[i])));
    Row rounded = t.decode(v);
    for (std::size_t f = 0; f < t.schema().size(); ++f) {
      const auto& spec = t.schema()[f];
      if (spec.kind == FeatureKind::continuous && spec.integer_valued)
        CHECK(rounded.numeric[t.schema().slot(f)] == r.numeric[t.schema().slot(f)]);
    }
  }
}

TEST_CASE("decode rules on a small schema") {
  FeatureSpec x{"x", FeatureKind::continuous, {}, false, false};
  FeatureSpec c{"c", FeatureKind::categorical, {}, false, false};
  Schema s({x, c});
  std::vector<Row> rows = {{{0.0}, {"a"}}, {{10.0}, {"b"}}, {{4.0}, {"c"}}};
  auto t = Transformer::fit(s, rows);
  CHECK(t.total_dim() == 4);

  Eigen::VectorXd v(4);
  v << 0.5, 1.0, 0.0, 1.0;  // two 1s: lowest index wins
  Row r = t.decode(v);
  CHECK(r.numeric[0] == doctest::Approx(5.0));
  CHECK(r.categorical[0] == "a");

  v << 0.5, 0.0, 0.0, 0.0;
  CHECK_THROWS_AS(t.decode(v), DecodeError);
  CHECK_THROWS_AS(t.decode(Eigen::VectorXd::Zero(3)), ArgumentError);
}

TEST_CASE("single-record fit encodes the continuous block to zero") {
  auto recs = fixture_records(1);
  std::vector<Row> rows{recs[0].features};
  auto t = Transformer::fit(nslkdd_schema(), rows);
  auto v = t.encode(rows[0]);
  for (const auto& b : t.blocks())
    if (t.schema()[b.feature].kind == FeatureKind::continuous) CHECK(v[b.offset] == 0.0);
  CHECK_THROWS_AS(Transformer::fit(nslkdd_schema(), {}), ArgumentError);
}

TEST_CASE("schema rejects duplicate categories") {
  FeatureSpec c{"c", FeatureKind::categorical, {"a", "a"}, false, false};
  CHECK_THROWS_AS(Schema({c}), ArgumentError);
}

TEST_CASE("transformer and encoded dataset persistence") {
  auto recs = fixture_records(120, 5);
  auto labels = map_labels(AttackMap::load_default(), recs);
  auto t = Transformer::fit(nslkdd_schema(), rows_of(recs));
  auto dir = std::filesystem::temp_directory_path() / "idslab_test_dataset";
  std::filesystem::create_directories(dir);

  save_transformer(t, dir / "t.json");
  auto t2 = load_transformer(dir / "t.json");
  CHECK(t2.total_dim() == t.total_dim());
  CHECK(t2.encode(recs[7].features) == t.encode(recs[7].features));

  auto data = encode_dataset(t, recs, labels);
  save_encoded(data, dir / "d.idsm");
  auto back = load_encoded(dir / "d.idsm");
  CHECK(back.features == data.features);
  CHECK(back.labels == data.labels);
}

TEST_CASE("format_kdd_line re-parses") {
  auto recs = fixture_records(20, 9);
  std::string text;
  for (const auto& r : recs) text += format_kdd_line(r.features, r.attack_name) + "\n";
  std::istringstream in(text);
  auto back = parse_kdd(in);
  REQUIRE(back.size() == recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    CHECK(back[i].features == recs[i].features);
    CHECK(back[i].attack_name == recs[i].attack_name);
  }
}

TEST_CASE("stratified subset keeps every class") {
  std::vector<ClassLabel> labels;
  for (int i = 0; i < 100; ++i) labels.push_back(ClassLabel::normal);
  for (int i = 0; i < 7; ++i) labels.push_back(ClassLabel::u2r);
  auto idx = stratified_subset(labels, 0.1, 3);
  std::vector<ClassLabel> kept;
  for (auto i : idx) kept.push_back(labels[i]);
  auto h = class_histogram(kept);
  CHECK(h[0] == 10);
  CHECK(h[4] == 1);
  CHECK(std::is_sorted(idx.begin(), idx.end()));
  CHECK(stratified_subset(labels, 0.1, 3) == idx);
}

TEST_CASE("labeled table appends the class column") {
  auto recs = fixture_records(10);
  auto labels = map_labels(AttackMap::load_default(), recs);
  auto table = labeled_table(recs, labels);
  CHECK(table.schema.size() == 41);
  CHECK(table.schema[40].categories == std::vector<std::string>{"N", "D", "P", "R", "U"});
  CHECK(table.rows[0].categorical.back() == std::string(1, class_symbol(labels[0])));
}
