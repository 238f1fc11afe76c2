#include <doctest.h>

#include <cmath>
#include <numeric>

#include "gdakg/classify.hpp"
#include "gdakg/error.hpp"
#include "gdakg/rng.hpp"
#include "support.hpp"

using namespace gdakg;

namespace {

Matrix rows(const std::vector<std::vector<double>>& v) {
  Matrix m(v.size(), v.front().size());
  for (std::size_t i = 0; i < v.size(); ++i) std::copy(v[i].begin(), v[i].end(), m.row(i).begin());
  return m;
}

// Two Gaussian blobs in `dim` dimensions, centered at -shift and +shift.
struct Blobs {
  Matrix x;
  std::vector<int> y;
};

Blobs blobs(std::size_t n, std::size_t dim, double shift, std::uint64_t seed) {
  Rng rng(seed);
  Blobs b{Matrix(n, dim), std::vector<int>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    b.y[i] = static_cast<int>(i % 2);
    for (std::size_t k = 0; k < dim; ++k) {
      const double u = rng.uniform(-1, 1) + rng.uniform(-1, 1);
      b.x.row(i)[k] = (b.y[i] ? shift : -shift) + u;
    }
  }
  return b;
}

double accuracy(const Classifier& clf, const Blobs& b) {
  int ok = 0;
  for (std::size_t i = 0; i < b.y.size(); ++i) {
    ok += (clf.predict_proba(b.x.row(i)).positive > 0.5) == (b.y[i] == 1);
  }
  return static_cast<double>(ok) / static_cast<double>(b.y.size());
}

}  // namespace

TEST_CASE("aggregation worked examples") {
  const std::vector<double> g{1, 2, 3}, d{4, 5, 6};
  CHECK(aggregate(AggregationOp::Hadamard, g, d) == std::vector<double>{4, 10, 18});
  CHECK(aggregate(AggregationOp::Average, g, g) == g);
  CHECK(aggregate(AggregationOp::Concatenation, g, d) == std::vector<double>{1, 2, 3, 4, 5, 6});
  const std::vector<double> a{1, 0}, b{4, 4};
  CHECK(aggregate(AggregationOp::WeightedL2, a, b) == std::vector<double>{9, 16});
  CHECK(aggregate(AggregationOp::WeightedL1, a, b) == std::vector<double>{3, 4});
  for (auto op : kAggregationOps) {
    CHECK(aggregate(op, g, d).size() == aggregate_length(op, 3));
    CHECK(parse_aggregation(to_string(op)) == op);
  }
  CHECK(aggregate_length(AggregationOp::Concatenation, 7) == 14);
  CHECK_THROWS_AS(parse_aggregation("Sum"), ConfigError);
}

TEST_CASE("symmetric aggregations do not depend on argument order") {
  Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> g(9), d(9);
    for (auto& v : g) v = rng.uniform(-3, 3);
    for (auto& v : d) v = rng.uniform(-3, 3);
    for (auto op : {AggregationOp::WeightedL1, AggregationOp::WeightedL2, AggregationOp::Hadamard,
                    AggregationOp::Average}) {
      CHECK(aggregate(op, g, d) == aggregate(op, d, g));
    }
  }
}

TEST_CASE("build_features names the pair with a missing vector") {
  Catalog cat;
  const auto g = cat.add_entity("g1", EntityKind::Gene);
  const auto d = cat.add_entity("d1", EntityKind::Disease);
  const auto d2 = cat.add_entity("d2", EntityKind::Disease);
  Matrix v(2, 2);
  v.data = {1, 2, 3, 4};
  const EntityEmbeddingTable table(2, {g, d}, v);
  const std::vector<GdaPair> ok{{g, d, Label::Positive}};
  const auto f = build_features(AggregationOp::Hadamard, table, ok, cat);
  CHECK(f.rows == 1);
  CHECK(f.data == std::vector<double>{3, 8});
  const std::vector<GdaPair> bad{{g, d2, Label::Negative}};
  try {
    build_features(AggregationOp::Hadamard, table, bad, cat);
    FAIL("expected an error");
  } catch (const ConsistencyError& e) {
    CHECK(std::string(e.what()).find("d2") != std::string::npos);
  }
}

TEST_CASE("classifier defaults") {
  const auto rf = ClassifierSpec::defaults(ClassifierKind::RandomForest);
  CHECK(rf.n_estimators == 100);
  CHECK(rf.max_depth == 4);
  const auto gbt = ClassifierSpec::defaults(ClassifierKind::GradientBoostedTrees);
  CHECK(gbt.n_estimators == 100);
  CHECK(gbt.max_depth == 4);
  CHECK(gbt.learning_rate == 0.1);
  const auto mlp = ClassifierSpec::defaults(ClassifierKind::MLP);
  CHECK(mlp.hidden_layers == std::vector<int>{10, 10});
  CHECK(mlp.l2_alpha == 1e-4);
  CHECK(mlp.seed == 1);
  for (auto k : kClassifierKinds) CHECK(parse_classifier(to_string(k)) == k);
  CHECK(parse_classifier("GBT") == ClassifierKind::GradientBoostedTrees);
}

TEST_CASE("naive Bayes on separable one-dimensional data") {
  const auto x = rows({{0}, {0}, {1}, {1}});
  const std::vector<int> y{0, 0, 1, 1};
  const auto clf = fit(ClassifierSpec::defaults(ClassifierKind::NaiveBayes), x, y);
  const std::vector<double> zero{0}, one{1};
  CHECK(clf->predict_proba(zero).negative > 0.5);
  CHECK(clf->predict_proba(one).positive > 0.5);
}

TEST_CASE("naive Bayes on constant features returns the class prior") {
  const auto x = rows({{2, 5}, {2, 5}, {2, 5}, {2, 5}, {2, 5}});
  const std::vector<int> y{1, 0, 0, 1, 0};
  const auto clf = fit(ClassifierSpec::defaults(ClassifierKind::NaiveBayes), x, y);
  const std::vector<double> probe{2, 5};
  CHECK(clf->predict_proba(probe).positive == doctest::Approx(0.4).epsilon(1e-12));
}

TEST_CASE("random forest size and depth") {
  const auto b = blobs(200, 6, 0.8, 3);
  const auto spec = ClassifierSpec::defaults(ClassifierKind::RandomForest);
  const RandomForest rf(spec, b.x, b.y);
  CHECK(rf.trees().size() == 100);
  for (const auto& t : rf.trees()) CHECK(t.depth() <= 4);
  CHECK(accuracy(rf, b) > 0.85);

  auto threaded = spec;
  threaded.workers = 3;
  const RandomForest rf2(threaded, b.x, b.y);
  for (std::size_t i = 0; i < b.y.size(); ++i) {
    CHECK(rf2.predict_proba(b.x.row(i)).positive == rf.predict_proba(b.x.row(i)).positive);
  }
}

TEST_CASE("boosting log-loss never increases across rounds") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto b = blobs(150, 4, 0.3 * static_cast<double>(seed), seed);
    auto spec = ClassifierSpec::defaults(ClassifierKind::GradientBoostedTrees);
    spec.n_estimators = 60;
    const GradientBoostedTrees gbt(spec, b.x, b.y);
    const auto trace = gbt.loss_trace();
    REQUIRE(trace.size() == 61);
    for (std::size_t r = 1; r < trace.size(); ++r) CHECK(trace[r] <= trace[r - 1] + 1e-12);
    for (const auto& t : gbt.trees()) CHECK(t.depth() <= 4);
  }
  // Random labels: nothing to learn, the trace must still not go up.
  Rng rng(8);
  Matrix x(80, 3);
  std::vector<int> y(80);
  for (auto& v : x.data) v = rng.uniform(-1, 1);
  for (auto& v : y) v = static_cast<int>(rng.index(2));
  const GradientBoostedTrees noisy(ClassifierSpec::defaults(ClassifierKind::GradientBoostedTrees), x, y);
  const auto trace = noisy.loss_trace();
  for (std::size_t r = 1; r < trace.size(); ++r) CHECK(trace[r] <= trace[r - 1] + 1e-12);
}

// With min_child_weight 1 a child needs hessian mass >= 1, so the toy set
// has 20 points per class: enough to keep splitting until p passes 0.9.
TEST_CASE("boosting fits a separable toy set") {
  Rng rng(6);
  Matrix x(40, 2);
  std::vector<int> y(40);
  for (std::size_t i = 0; i < 40; ++i) {
    y[i] = static_cast<int>(i % 2);
    x.row(i)[0] = y[i] ? rng.uniform(0.6, 1.0) : rng.uniform(0.0, 0.4);
    x.row(i)[1] = rng.uniform(0, 1);
  }
  const auto clf = fit(ClassifierSpec::defaults(ClassifierKind::GradientBoostedTrees), x, y);
  for (std::size_t i = 0; i < 40; ++i) {
    const double p = clf->predict_proba(x.row(i)).positive;
    if (y[i]) {
      CHECK(p > 0.9);
    } else {
      CHECK(p < 0.1);
    }
  }
}

TEST_CASE("every classifier returns normalized probabilities and learns blobs") {
  const auto train = blobs(240, 5, 1.0, 11);
  const auto test = blobs(100, 5, 1.0, 12);
  Rng rng(4);
  for (auto kind : kClassifierKinds) {
    INFO(to_string(kind));
    const auto clf = fit(ClassifierSpec::defaults(kind), train.x, train.y);
    CHECK(clf->kind() == kind);
    CHECK(clf->feature_length() == 5);
    CHECK(accuracy(*clf, test) > 0.85);
    for (int i = 0; i < 20; ++i) {
      std::vector<double> probe(5);
      for (auto& v : probe) v = rng.uniform(-50, 50);
      const auto p = clf->predict_proba(probe);
      CHECK(std::abs(p.negative + p.positive - 1.0) < 1e-9);
      CHECK(p.positive >= 0.0);
      CHECK(p.positive <= 1.0);
    }
    const std::vector<double> wrong(4, 0.0);
    CHECK_THROWS_AS(clf->predict_proba(wrong), ConsistencyError);
  }
}

TEST_CASE("the MLP is deterministic under its seed") {
  const auto b = blobs(120, 4, 1.0, 5);
  const auto spec = ClassifierSpec::defaults(ClassifierKind::MLP);
  const MultiLayerPerceptron a(spec, b.x, b.y), c(spec, b.x, b.y);
  CHECK(a.epochs_run() == c.epochs_run());
  CHECK(a.epochs_run() <= spec.max_epochs);
  for (std::size_t i = 0; i < b.y.size(); ++i) {
    CHECK(a.predict_proba(b.x.row(i)).positive == c.predict_proba(b.x.row(i)).positive);
  }
}

TEST_CASE("fit rejects unusable training sets") {
  const auto x = rows({{0}, {1}});
  for (auto kind : kClassifierKinds) {
    CHECK_THROWS_AS(fit(ClassifierSpec::defaults(kind), x, std::vector<int>{1, 1}), ConfigError);
    auto bad = x;
    bad.data[0] = std::nan("");
    CHECK_THROWS_AS(fit(ClassifierSpec::defaults(kind), bad, std::vector<int>{0, 1}), ConsistencyError);
  }
}

TEST_CASE("predictions round-trip through TSV") {
  Catalog cat;
  const auto g = cat.add_entity("g1", EntityKind::Gene);
  const auto d = cat.add_entity("d1", EntityKind::Disease);
  const auto d2 = cat.add_entity("d2", EntityKind::Disease);
  const auto x = rows({{0}, {1}});
  const auto clf = fit(ClassifierSpec::defaults(ClassifierKind::NaiveBayes), x, std::vector<int>{0, 1});
  const std::vector<GdaPair> pairs{{g, d, Label::Negative}, {g, d2, Label::Positive}};
  const auto preds = predict_pairs(*clf, x, pairs);
  REQUIRE(preds.size() == 2);
  CHECK(preds[1].predicted == 1);
  testing::TempDir dir;
  save_predictions(dir / "p.tsv", preds, cat);
  Catalog other;
  const auto back = load_predictions(dir / "p.tsv", other);
  REQUIRE(back.size() == 2);
  CHECK(back[1].p_positive == preds[1].p_positive);
  CHECK(back[0].pair.label == Label::Negative);
  CHECK(other.entities().name_of(back[1].pair.disease) == "d2");
}
