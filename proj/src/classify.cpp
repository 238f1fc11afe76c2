#include "gdakg/classify.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "gdakg/error.hpp"
#include "text.hpp"

namespace gdakg {

std::string_view to_string(AggregationOp op) {
  switch (op) {
    case AggregationOp::Concatenation: return "Concatenation";
    case AggregationOp::Average: return "Average";
    case AggregationOp::Hadamard: return "Hadamard";
    case AggregationOp::WeightedL1: return "WeightedL1";
    case AggregationOp::WeightedL2: return "WeightedL2";
  }
  return "?";
}

AggregationOp parse_aggregation(std::string_view text) {
  for (auto op : kAggregationOps) {
    if (text == to_string(op)) return op;
  }
  throw ConfigError("unknown aggregation '" + std::string(text) + "'");
}

std::size_t aggregate_length(AggregationOp op, std::size_t dim) {
  return op == AggregationOp::Concatenation ? 2 * dim : dim;
}

std::vector<double> aggregate(AggregationOp op, std::span<const double> g,
                              std::span<const double> d) {
  if (g.size() != d.size()) {
    throw ConsistencyError("aggregate: gene vector has length " + std::to_string(g.size()) +
                           ", disease vector " + std::to_string(d.size()));
  }
  const std::size_t n = g.size();
  std::vector<double> out(aggregate_length(op, n));
  switch (op) {
    case AggregationOp::Concatenation:
      std::copy(g.begin(), g.end(), out.begin());
      std::copy(d.begin(), d.end(), out.begin() + static_cast<std::ptrdiff_t>(n));
      break;
    case AggregationOp::Average:
      for (std::size_t i = 0; i < n; ++i) out[i] = (g[i] + d[i]) / 2.0;
      break;
    case AggregationOp::Hadamard:
      for (std::size_t i = 0; i < n; ++i) out[i] = g[i] * d[i];
      break;
    case AggregationOp::WeightedL1:
      for (std::size_t i = 0; i < n; ++i) out[i] = std::abs(g[i] - d[i]);
      break;
    case AggregationOp::WeightedL2:
      for (std::size_t i = 0; i < n; ++i) out[i] = (g[i] - d[i]) * (g[i] - d[i]);
      break;
  }
  return out;
}

Matrix build_features(AggregationOp op, const EntityEmbeddingTable& table,
                      std::span<const GdaPair> pairs, const Catalog& catalog) {
  Matrix x(pairs.size(), aggregate_length(op, table.dim()));
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& p = pairs[i];
    auto name = [&] {
      return "(" + catalog.entities().name_of(p.gene) + ", " +
             catalog.entities().name_of(p.disease) + ")";
    };
    if (!table.contains(p.gene) || !table.contains(p.disease)) {
      throw ConsistencyError("no embedding for pair " + name());
    }
    const auto row = aggregate(op, table.vector(p.gene), table.vector(p.disease));
    for (double v : row) {
      if (!std::isfinite(v)) throw ConsistencyError("non-finite feature for pair " + name());
    }
    std::copy(row.begin(), row.end(), x.row(i).begin());
  }
  return x;
}

std::string_view to_string(ClassifierKind kind) {
  switch (kind) {
    case ClassifierKind::NaiveBayes: return "NB";
    case ClassifierKind::MLP: return "MLP";
    case ClassifierKind::RandomForest: return "RF";
    case ClassifierKind::GradientBoostedTrees: return "XGB";
  }
  return "?";
}

ClassifierKind parse_classifier(std::string_view text) {
  for (auto k : kClassifierKinds) {
    if (text == to_string(k)) return k;
  }
  if (text == "GBT") return ClassifierKind::GradientBoostedTrees;
  throw ConfigError("unknown classifier '" + std::string(text) + "'");
}

ClassifierSpec ClassifierSpec::defaults(ClassifierKind kind) {
  ClassifierSpec s;
  s.kind = kind;
  return s;
}

Probabilities Classifier::predict_proba(std::span<const double> features) const {
  if (features.size() != feature_length()) {
    throw ConsistencyError("classifier expects " + std::to_string(feature_length()) +
                           " features, got " + std::to_string(features.size()));
  }
  const double p = std::clamp(positive_probability(features), 0.0, 1.0);
  return {1.0 - p, p};
}

GaussianNaiveBayes::GaussianNaiveBayes(const ClassifierSpec& spec, const Matrix& x,
                                       std::span<const int> y) {
  const std::size_t p = x.cols;
  std::size_t count[2] = {0, 0};
  for (int c = 0; c < 2; ++c) {
    mean_[c].assign(p, 0.0);
    var_[c].assign(p, 0.0);
  }
  for (std::size_t i = 0; i < x.rows; ++i) {
    const int c = y[i];
    ++count[c];
    const auto row = x.row(i);
    for (std::size_t j = 0; j < p; ++j) mean_[c][j] += row[j];
  }
  for (int c = 0; c < 2; ++c) {
    for (auto& m : mean_[c]) m /= static_cast<double>(count[c]);
  }
  for (std::size_t i = 0; i < x.rows; ++i) {
    const int c = y[i];
    const auto row = x.row(i);
    for (std::size_t j = 0; j < p; ++j) {
      const double d = row[j] - mean_[c][j];
      var_[c][j] += d * d;
    }
  }
  for (int c = 0; c < 2; ++c) {
    for (auto& v : var_[c]) v /= static_cast<double>(count[c]);
  }

  // Smoothing proportional to the largest per-feature variance of the whole
  // training set; falls back to the bare factor when every feature is
  // constant.
  double max_var = 0.0;
  for (std::size_t j = 0; j < p; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < x.rows; ++i) mean += x.row(i)[j];
    mean /= static_cast<double>(x.rows);
    double v = 0.0;
    for (std::size_t i = 0; i < x.rows; ++i) v += (x.row(i)[j] - mean) * (x.row(i)[j] - mean);
    max_var = std::max(max_var, v / static_cast<double>(x.rows));
  }
  const double epsilon = spec.var_smoothing * (max_var > 0 ? max_var : 1.0);
  for (int c = 0; c < 2; ++c) {
    for (auto& v : var_[c]) v += epsilon;
    prior_[c] = static_cast<double>(count[c]) / static_cast<double>(x.rows);
  }
}

double GaussianNaiveBayes::positive_probability(std::span<const double> x) const {
  double joint[2];
  for (int c = 0; c < 2; ++c) {
    double s = std::log(prior_[c]);
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double d = x[j] - mean_[c][j];
      s -= 0.5 * std::log(2.0 * std::numbers::pi * var_[c][j]) + d * d / (2.0 * var_[c][j]);
    }
    joint[c] = s;
  }
  // sigmoid(joint1 - joint0), evaluated stably.
  const double z = joint[1] - joint[0];
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

std::unique_ptr<Classifier> fit(const ClassifierSpec& spec, const Matrix& features,
                                std::span<const int> labels) {
  if (labels.size() != features.rows) {
    throw ConsistencyError("fit: " + std::to_string(features.rows) + " feature rows but " +
                           std::to_string(labels.size()) + " labels");
  }
  std::size_t positives = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw ConfigError("labels must be 0 or 1");
    positives += static_cast<std::size_t>(labels[i]);
    for (double v : features.row(i)) {
      if (!std::isfinite(v)) {
        throw ConsistencyError("non-finite feature in training row " + std::to_string(i));
      }
    }
  }
  if (positives == 0 || positives == labels.size()) {
    throw ConfigError("fit requires at least one example of each class");
  }
  if (features.cols == 0) throw ConfigError("fit requires at least one feature");
  switch (spec.kind) {
    case ClassifierKind::NaiveBayes:
      return std::make_unique<GaussianNaiveBayes>(spec, features, labels);
    case ClassifierKind::MLP:
      return std::make_unique<MultiLayerPerceptron>(spec, features, labels);
    case ClassifierKind::RandomForest:
      return std::make_unique<RandomForest>(spec, features, labels);
    case ClassifierKind::GradientBoostedTrees:
      return std::make_unique<GradientBoostedTrees>(spec, features, labels);
  }
  throw ConfigError("unknown classifier kind");
}

std::vector<PredictionRow> predict_pairs(const Classifier& clf, const Matrix& features,
                                         std::span<const GdaPair> pairs) {
  if (features.rows != pairs.size()) throw ConsistencyError("predict_pairs: row count mismatch");
  std::vector<PredictionRow> rows;
  rows.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto p = clf.predict_proba(features.row(i));
    rows.push_back({pairs[i], p.negative, p.positive, p.positive > 0.5 ? 1 : 0});
  }
  return rows;
}

void save_predictions(const std::filesystem::path& path, std::span<const PredictionRow> rows,
                      const Catalog& catalog) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto out = detail::open_output(path);
  out.precision(17);
  for (const auto& r : rows) {
    out << catalog.entities().name_of(r.pair.gene) << '\t'
        << catalog.entities().name_of(r.pair.disease) << '\t' << r.p_negative << '\t'
        << r.p_positive << '\t' << r.predicted << '\t' << (r.pair.positive() ? 1 : 0) << '\n';
  }
  detail::check_written(out, path);
}

std::vector<PredictionRow> load_predictions(const std::filesystem::path& path, Catalog& catalog) {
  auto in = detail::open_input(path);
  std::vector<PredictionRow> rows;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = detail::strip_cr(raw);
    if (detail::is_blank(line)) continue;
    const auto f = detail::split_on(line, '\t');
    if (f.size() != 6) throw ParseError(path.string(), line_no, "expected 6 fields");
    PredictionRow r;
    try {
      r.pair.gene = catalog.add_entity(f[0], EntityKind::Gene);
      r.pair.disease = catalog.add_entity(f[1], EntityKind::Disease);
      r.p_negative = std::stod(std::string(f[2]));
      r.p_positive = std::stod(std::string(f[3]));
      r.predicted = std::stoi(std::string(f[4]));
      r.pair.label = std::stoi(std::string(f[5])) ? Label::Positive : Label::Negative;
    } catch (const std::logic_error&) {
      throw ParseError(path.string(), line_no, "malformed number");
    }
    rows.push_back(r);
  }
  return rows;
}

}  // namespace gdakg
