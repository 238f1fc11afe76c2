#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "gdakg/embedding.hpp"
#include "gdakg/types.hpp"
#include "gdakg/vocab.hpp"
#include "gdakg/walker.hpp"

namespace gdakg {

enum class AggregationOp : std::uint8_t { Concatenation, Average, Hadamard, WeightedL1, WeightedL2 };

inline constexpr AggregationOp kAggregationOps[] = {
    AggregationOp::Concatenation, AggregationOp::Average, AggregationOp::Hadamard,
    AggregationOp::WeightedL1, AggregationOp::WeightedL2};

std::string_view to_string(AggregationOp op);
AggregationOp parse_aggregation(std::string_view text);

std::size_t aggregate_length(AggregationOp op, std::size_t dim);

// Pair representation r(g, d):
//   Concatenation g || d, Average (g + d) / 2, Hadamard g * d,
//   WeightedL1 |g - d|, WeightedL2 |g - d|^2 (all elementwise).
std::vector<double> aggregate(AggregationOp op, std::span<const double> gene,
                              std::span<const double> disease);

// One feature row per pair. Throws ConsistencyError when a vector is missing
// or non-finite, naming the pair.
Matrix build_features(AggregationOp op, const EntityEmbeddingTable& table,
                      std::span<const GdaPair> pairs, const Catalog& catalog);

enum class ClassifierKind : std::uint8_t { NaiveBayes, MLP, RandomForest, GradientBoostedTrees };

inline constexpr ClassifierKind kClassifierKinds[] = {
    ClassifierKind::NaiveBayes, ClassifierKind::MLP, ClassifierKind::RandomForest,
    ClassifierKind::GradientBoostedTrees};

std::string_view to_string(ClassifierKind kind);
ClassifierKind parse_classifier(std::string_view text);

struct ClassifierSpec {
  ClassifierKind kind = ClassifierKind::GradientBoostedTrees;
  // Trees.
  int max_depth = 4;
  int n_estimators = 100;
  double learning_rate = 0.1;  // boosting shrinkage
  double reg_lambda = 1.0;     // boosting leaf L2
  double min_child_weight = 1.0;
  // Multi-layer perceptron.
  std::vector<int> hidden_layers{10, 10};
  double l2_alpha = 1e-4;
  double adam_learning_rate = 1e-3;
  int batch_size = 32;
  int max_epochs = 200;
  int patience = 10;
  double validation_fraction = 0.1;
  // Gaussian naive Bayes.
  double var_smoothing = 1e-9;

  std::uint64_t seed = 1;
  int workers = 1;

  static ClassifierSpec defaults(ClassifierKind kind);
};

struct Probabilities {
  double negative = 0.5;
  double positive = 0.5;
};

class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual ClassifierKind kind() const = 0;
  virtual std::size_t feature_length() const = 0;
  // Throws ConsistencyError on a length mismatch.
  Probabilities predict_proba(std::span<const double> features) const;

 protected:
  virtual double positive_probability(std::span<const double> features) const = 0;
};

// Binary decision tree; leaves hold a value (class-1 fraction for forests,
// additive log-odds for boosting).
class DecisionTree {
 public:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
  };

  double predict(std::span<const double> x) const;
  int depth() const;
  std::span<const Node> nodes() const { return nodes_; }
  std::vector<Node>& mutable_nodes() { return nodes_; }

 private:
  std::vector<Node> nodes_;
};

class GaussianNaiveBayes final : public Classifier {
 public:
  GaussianNaiveBayes(const ClassifierSpec& spec, const Matrix& x, std::span<const int> y);
  ClassifierKind kind() const override { return ClassifierKind::NaiveBayes; }
  std::size_t feature_length() const override { return mean_[0].size(); }
  double prior(int label) const { return prior_[label]; }

 protected:
  double positive_probability(std::span<const double> x) const override;

 private:
  double prior_[2];
  std::vector<double> mean_[2];
  std::vector<double> var_[2];
};

// Bootstrap forest of Gini trees with sqrt(p) features tried per split.
class RandomForest final : public Classifier {
 public:
  RandomForest(const ClassifierSpec& spec, const Matrix& x, std::span<const int> y);
  ClassifierKind kind() const override { return ClassifierKind::RandomForest; }
  std::size_t feature_length() const override { return features_; }
  std::span<const DecisionTree> trees() const { return trees_; }

 protected:
  double positive_probability(std::span<const double> x) const override;

 private:
  std::size_t features_;
  std::vector<DecisionTree> trees_;
};

// Second-order gradient boosting on log-loss with exact greedy splits.
class GradientBoostedTrees final : public Classifier {
 public:
  GradientBoostedTrees(const ClassifierSpec& spec, const Matrix& x, std::span<const int> y);
  ClassifierKind kind() const override { return ClassifierKind::GradientBoostedTrees; }
  std::size_t feature_length() const override { return features_; }
  std::span<const DecisionTree> trees() const { return trees_; }
  // Mean training log-loss before the first round and after every round.
  std::span<const double> loss_trace() const { return loss_trace_; }
  double base_margin() const { return base_margin_; }

 protected:
  double positive_probability(std::span<const double> x) const override;

 private:
  std::size_t features_;
  double base_margin_ = 0.0;
  std::vector<DecisionTree> trees_;
  std::vector<double> loss_trace_;
};

// ReLU hidden layers, sigmoid output, Adam, L2 penalty and early stopping
// on a held-out validation fraction.
class MultiLayerPerceptron final : public Classifier {
 public:
  MultiLayerPerceptron(const ClassifierSpec& spec, const Matrix& x, std::span<const int> y);
  ClassifierKind kind() const override { return ClassifierKind::MLP; }
  std::size_t feature_length() const override { return layers_.front().in; }
  int epochs_run() const { return epochs_run_; }

  struct Layer {
    std::size_t in = 0;
    std::size_t out = 0;
    std::vector<double> weights;  // out x in, row-major
    std::vector<double> bias;
  };

 protected:
  double positive_probability(std::span<const double> x) const override;

 private:
  std::vector<Layer> layers_;
  int epochs_run_ = 0;
};

// Fits `spec` on rows of `features` with labels in {0, 1}. Throws
// ConfigError for single-class input and ConsistencyError for non-finite
// features.
std::unique_ptr<Classifier> fit(const ClassifierSpec& spec, const Matrix& features,
                                std::span<const int> labels);

struct PredictionRow {
  GdaPair pair;
  double p_negative = 0.5;
  double p_positive = 0.5;
  int predicted = 0;
};

std::vector<PredictionRow> predict_pairs(const Classifier& clf, const Matrix& features,
                                         std::span<const GdaPair> pairs);

// gene, disease, p_neg, p_pos, predicted_label, true_label (tab-separated).
void save_predictions(const std::filesystem::path& path, std::span<const PredictionRow> rows,
                      const Catalog& catalog);
std::vector<PredictionRow> load_predictions(const std::filesystem::path& path, Catalog& catalog);

}  // namespace gdakg
