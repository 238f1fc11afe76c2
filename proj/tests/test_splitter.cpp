#include <doctest.h>

#include <algorithm>
#include <set>

#include "gdakg/error.hpp"
#include "gdakg/rng.hpp"
#include "gdakg/split.hpp"
#include "support.hpp"

using namespace gdakg;

namespace {

std::vector<GdaPair> grid_positives(EntityId genes, EntityId diseases, std::size_t count, std::uint64_t seed) {
  std::set<std::pair<EntityId, EntityId>> seen;
  Rng rng(seed);
  std::vector<GdaPair> out;
  while (out.size() < count) {
    const EntityId g = static_cast<EntityId>(rng.index(genes));
    const EntityId d = genes + static_cast<EntityId>(rng.index(diseases));
    if (seen.insert({g, d}).second) out.push_back({g, d, Label::Positive});
  }
  return out;
}

std::vector<GdaPair> numbered(std::size_t n, Label label, EntityId offset = 0) {
  std::vector<GdaPair> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back({offset + static_cast<EntityId>(i), 100000 + offset + static_cast<EntityId>(i), label});
  }
  return out;
}

using Key = std::pair<EntityId, EntityId>;
std::set<Key> keys(const std::vector<GdaPair>& v) {
  std::set<Key> s;
  for (const auto& p : v) s.insert({p.gene, p.disease});
  return s;
}

}  // namespace

TEST_CASE("generate_negatives: the only remaining pair") {
  const std::vector<GdaPair> pos{{0, 1, Label::Positive}, {5, 2, Label::Positive}};
  // genes {0, 5}, diseases {1, 2}: remaining pairs (0,2) and (5,1)
  CHECK(max_negative_count(pos) == 2);
  const std::vector<GdaPair> single{{0, 1, Label::Positive}, {0, 2, Label::Positive}, {5, 2, Label::Positive}};
  const auto neg = generate_negatives(single, 1, 1);
  REQUIRE(neg.size() == 1);
  CHECK(neg[0].gene == 5);
  CHECK(neg[0].disease == 1);
  CHECK(neg[0].label == Label::Negative);
  CHECK(generate_negatives(pos, 0, 1).empty());
  CHECK_THROWS_AS(generate_negatives(pos, 3, 1), ConfigError);
}

TEST_CASE("generated negatives never collide with positives and are distinct") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto pos = grid_positives(40, 30, 300, seed);
    const auto neg = generate_negatives(pos, 500, seed);
    REQUIRE(neg.size() == 500);
    const auto p = keys(pos);
    const auto n = keys(neg);
    CHECK(n.size() == neg.size());
    for (const auto& k : n) CHECK_FALSE(p.contains(k));
  }
}

TEST_CASE("split sizes follow floor(fraction * n) per stratum") {
  auto pairs = numbered(10, Label::Positive);
  auto neg = numbered(10, Label::Negative, 50);
  pairs.insert(pairs.end(), neg.begin(), neg.end());
  const auto s = split_pairs(pairs, 0.7, 1);
  CHECK(s.train_pos.size() == 7);
  CHECK(s.test_pos.size() == 3);
  CHECK(s.train_neg.size() == 7);
  CHECK(s.test_neg.size() == 3);

  auto many = numbered(8189, Label::Positive);
  const auto many_neg = numbered(8189, Label::Negative, 20000);
  many.insert(many.end(), many_neg.begin(), many_neg.end());
  const auto big = split_pairs(many, 0.7, 1);
  CHECK(big.train_pos.size() == 5732);
  CHECK(big.test_pos.size() == 8189 - 5732);
  CHECK(big.train_neg.size() == 5732);
}

TEST_CASE("split is a seed-deterministic exact partition") {
  auto pairs = numbered(57, Label::Positive);
  auto neg = numbered(43, Label::Negative, 1000);
  pairs.insert(pairs.end(), neg.begin(), neg.end());
  for (double fraction : {0.1, 0.3, 0.7, 0.95}) {
    const auto a = split_pairs(pairs, fraction, 11);
    const auto b = split_pairs(pairs, fraction, 11);
    CHECK(a == b);
    CHECK(a.size() == pairs.size());
    std::set<Key> all;
    for (const auto* part : {&a.train_pos, &a.train_neg, &a.test_pos, &a.test_neg}) {
      for (const auto& p : *part) CHECK(all.insert({p.gene, p.disease}).second);
    }
    CHECK(all == keys(pairs));
    for (const auto& p : a.train_pos) CHECK(p.positive());
    for (const auto& p : a.test_neg) CHECK_FALSE(p.positive());
  }
  const auto s1 = split_pairs(pairs, 0.7, 1);
  const auto s2 = split_pairs(pairs, 0.7, 2);
  CHECK(s1.train_pos.size() == s2.train_pos.size());
  CHECK(s1.test_neg.size() == s2.test_neg.size());
  CHECK(s1.train_pos != s2.train_pos);
}

TEST_CASE("pairs and splits round-trip through files") {
  testing::TempDir dir;
  testing::write_file(dir / "pairs.tsv", "g1\td1\t1\ng1\td2\tnegative\ng2\td1\ng2\td2\t0\ng3\td1\tpositive\n");
  Catalog cat;
  const auto pairs = load_pairs(dir / "pairs.tsv", cat);
  REQUIRE(pairs.size() == 5);
  CHECK(std::count_if(pairs.begin(), pairs.end(), [](const GdaPair& p) { return p.positive(); }) == 3);
  CHECK(cat.kind(pairs[0].gene) == EntityKind::Gene);
  CHECK(cat.kind(pairs[0].disease) == EntityKind::Disease);

  const auto s = split_pairs(pairs, 0.7, 4);
  save_split(s, cat, dir / "split");
  CHECK(split_exists(dir / "split"));
  Catalog other;
  const auto back = load_split(dir / "split", other);
  CHECK(back.train_pos.size() == s.train_pos.size());
  CHECK(back.test_neg.size() == s.test_neg.size());
  CHECK(back.seed == 4);

  testing::write_file(dir / "bad.tsv", "g1\td1\tmaybe\n");
  CHECK_THROWS_AS(load_pairs(dir / "bad.tsv", cat), ParseError);
  testing::write_file(dir / "clash.tsv", "g1\td1\t1\ng1\td1\t0\n");
  Catalog c2;
  CHECK_THROWS_AS(split_pairs(load_pairs(dir / "clash.tsv", c2), 0.7, 1), ConsistencyError);
  CHECK_THROWS_AS(split_pairs(pairs, 1.0, 1), ConfigError);
  CHECK_THROWS_AS(split_pairs(pairs, 0.0, 1), ConfigError);
}
