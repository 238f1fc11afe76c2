#include <algorithm>
#include <cmath>
#include <numeric>

#include "gdakg/classify.hpp"
#include "gdakg/error.hpp"
#include "gdakg/parallel.hpp"
#include "gdakg/rng.hpp"

namespace gdakg {

double DecisionTree::predict(std::span<const double> x) const {
  if (nodes_.empty()) return 0.0;
  int i = 0;
  while (nodes_[i].feature >= 0) {
    const auto& n = nodes_[i];
    i = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
  }
  return nodes_[i].value;
}

int DecisionTree::depth() const {
  if (nodes_.empty()) return 0;
  int best = 0;
  std::vector<std::pair<int, int>> stack{{0, 0}};
  while (!stack.empty()) {
    auto [i, d] = stack.back();
    stack.pop_back();
    best = std::max(best, d);
    if (nodes_[i].feature >= 0) {
      stack.push_back({nodes_[i].left, d + 1});
      stack.push_back({nodes_[i].right, d + 1});
    }
  }
  return best;
}

namespace {

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

// Indices of the node sorted by one feature, with the positions where the
// value changes as candidate cut points.
void sort_by_feature(const Matrix& x, std::size_t f, std::vector<std::size_t>& idx) {
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return x.row(a)[f] < x.row(b)[f]; });
}

double midpoint(double a, double b) {
  const double m = a + (b - a) / 2.0;
  // Keep a <= m < b even when the two are adjacent doubles.
  return m < b ? m : a;
}

class GiniBuilder {
 public:
  GiniBuilder(const Matrix& x, std::span<const int> y, std::span<const double> w, int max_depth,
              std::size_t max_features, Rng& rng)
      : x_(x), y_(y), w_(w), max_depth_(max_depth), max_features_(max_features), rng_(rng) {}

  DecisionTree build(std::vector<std::size_t> samples) {
    DecisionTree tree;
    grow(tree.mutable_nodes(), std::move(samples), 0);
    return tree;
  }

 private:
  int grow(std::vector<DecisionTree::Node>& nodes, std::vector<std::size_t> samples, int depth) {
    double total = 0.0, pos = 0.0;
    for (auto i : samples) {
      total += w_[i];
      pos += w_[i] * y_[i];
    }
    const int id = static_cast<int>(nodes.size());
    nodes.push_back({});
    nodes[id].value = total > 0 ? pos / total : 0.0;
    if (depth >= max_depth_ || pos == 0.0 || pos == total || samples.size() < 2) return id;

    const Split s = best_split(samples, total, pos);
    if (s.feature < 0) return id;
    std::vector<std::size_t> left, right;
    for (auto i : samples) {
      (x_.row(i)[static_cast<std::size_t>(s.feature)] <= s.threshold ? left : right).push_back(i);
    }
    samples.clear();
    samples.shrink_to_fit();
    nodes[id].feature = s.feature;
    nodes[id].threshold = s.threshold;
    const int l = grow(nodes, std::move(left), depth + 1);
    const int r = grow(nodes, std::move(right), depth + 1);
    nodes[id].left = l;
    nodes[id].right = r;
    return id;
  }

  static double gini(double total, double pos) {
    if (total <= 0) return 0.0;
    const double p = pos / total;
    return 2.0 * p * (1.0 - p);
  }

  // Visits features in random order and stops once max_features of them
  // turned out non-constant in this node.
  Split best_split(std::vector<std::size_t>& samples, double total, double pos) {
    std::vector<std::size_t> features(x_.cols);
    std::iota(features.begin(), features.end(), 0);
    rng_.shuffle(std::span(features));
    const double parent = gini(total, pos);
    Split best;
    std::size_t visited = 0;
    for (std::size_t f : features) {
      if (visited >= max_features_) break;
      sort_by_feature(x_, f, samples);
      if (x_.row(samples.front())[f] == x_.row(samples.back())[f]) continue;
      ++visited;
      double lt = 0.0, lp = 0.0;
      for (std::size_t k = 0; k + 1 < samples.size(); ++k) {
        const auto i = samples[k];
        lt += w_[i];
        lp += w_[i] * y_[i];
        const double a = x_.row(i)[f];
        const double b = x_.row(samples[k + 1])[f];
        if (a == b) continue;
        const double rt = total - lt, rp = pos - lp;
        const double child = (lt * gini(lt, lp) + rt * gini(rt, rp)) / total;
        const double gain = parent - child;
        if (gain > best.gain) {
          best = {static_cast<int>(f), midpoint(a, b), gain};
        }
      }
    }
    return best;
  }

  const Matrix& x_;
  std::span<const int> y_;
  std::span<const double> w_;
  int max_depth_;
  std::size_t max_features_;
  Rng& rng_;
};

class BoostBuilder {
 public:
  BoostBuilder(const Matrix& x, std::span<const double> g, std::span<const double> h,
               const ClassifierSpec& spec)
      : x_(x), g_(g), h_(h), spec_(spec) {}

  DecisionTree build(std::vector<std::size_t> samples) {
    DecisionTree tree;
    grow(tree.mutable_nodes(), std::move(samples), 0);
    return tree;
  }

 private:
  double leaf_weight(double G, double H) const {
    return -G / (H + spec_.reg_lambda) * spec_.learning_rate;
  }

  double score(double G, double H) const { return G * G / (H + spec_.reg_lambda); }

  int grow(std::vector<DecisionTree::Node>& nodes, std::vector<std::size_t> samples, int depth) {
    double G = 0.0, H = 0.0;
    for (auto i : samples) {
      G += g_[i];
      H += h_[i];
    }
    const int id = static_cast<int>(nodes.size());
    nodes.push_back({});
    nodes[id].value = leaf_weight(G, H);
    if (depth >= spec_.max_depth || samples.size() < 2) return id;

    Split best;
    const double parent = score(G, H);
    for (std::size_t f = 0; f < x_.cols; ++f) {
      sort_by_feature(x_, f, samples);
      double gl = 0.0, hl = 0.0;
      for (std::size_t k = 0; k + 1 < samples.size(); ++k) {
        const auto i = samples[k];
        gl += g_[i];
        hl += h_[i];
        const double a = x_.row(i)[f];
        const double b = x_.row(samples[k + 1])[f];
        if (a == b) continue;
        const double gr = G - gl, hr = H - hl;
        if (hl < spec_.min_child_weight || hr < spec_.min_child_weight) continue;
        const double gain = 0.5 * (score(gl, hl) + score(gr, hr) - parent);
        if (gain > best.gain) best = {static_cast<int>(f), midpoint(a, b), gain};
      }
    }
    if (best.feature < 0) return id;

    std::vector<std::size_t> left, right;
    for (auto i : samples) {
      (x_.row(i)[static_cast<std::size_t>(best.feature)] <= best.threshold ? left : right)
          .push_back(i);
    }
    samples.clear();
    samples.shrink_to_fit();
    nodes[id].feature = best.feature;
    nodes[id].threshold = best.threshold;
    const int l = grow(nodes, std::move(left), depth + 1);
    const int r = grow(nodes, std::move(right), depth + 1);
    nodes[id].left = l;
    nodes[id].right = r;
    return id;
  }

  const Matrix& x_;
  std::span<const double> g_;
  std::span<const double> h_;
  const ClassifierSpec& spec_;
};

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double mean_log_loss(std::span<const double> margin, std::span<const int> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < margin.size(); ++i) {
    // log(1 + e^m) - y m, written to avoid overflow.
    const double m = margin[i];
    s += std::max(m, 0.0) + std::log1p(std::exp(-std::abs(m))) - y[i] * m;
  }
  return s / static_cast<double>(margin.size());
}

}  // namespace

RandomForest::RandomForest(const ClassifierSpec& spec, const Matrix& x, std::span<const int> y)
    : features_(x.cols) {
  if (spec.n_estimators < 1) throw ConfigError("n_estimators must be at least 1");
  if (spec.max_depth < 1) throw ConfigError("max_depth must be at least 1");
  const std::size_t n = x.rows;
  const std::size_t max_features =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(x.cols))));
  trees_.resize(static_cast<std::size_t>(spec.n_estimators));
  parallel_shards(trees_.size(), std::max(1, spec.workers),
                  [&](std::size_t begin, std::size_t end, int) {
                    for (std::size_t t = begin; t < end; ++t) {
                      Rng rng(derive_seed(spec.seed, t));
                      std::vector<double> weight(n, 0.0);
                      for (std::size_t k = 0; k < n; ++k) weight[rng.index(n)] += 1.0;
                      std::vector<std::size_t> samples;
                      for (std::size_t i = 0; i < n; ++i) {
                        if (weight[i] > 0) samples.push_back(i);
                      }
                      GiniBuilder builder(x, y, weight, spec.max_depth, max_features, rng);
                      trees_[t] = builder.build(std::move(samples));
                    }
                  });
}

double RandomForest::positive_probability(std::span<const double> x) const {
  double s = 0.0;
  for (const auto& t : trees_) s += t.predict(x);
  return s / static_cast<double>(trees_.size());
}

GradientBoostedTrees::GradientBoostedTrees(const ClassifierSpec& spec, const Matrix& x,
                                           std::span<const int> y)
    : features_(x.cols) {
  if (spec.n_estimators < 1) throw ConfigError("n_estimators must be at least 1");
  if (spec.max_depth < 1) throw ConfigError("max_depth must be at least 1");
  if (!(spec.learning_rate > 0)) throw ConfigError("learning_rate must be positive");
  const std::size_t n = x.rows;
  double pos = 0.0;
  for (int v : y) pos += v;
  const double prior = pos / static_cast<double>(n);
  base_margin_ = std::log(prior / (1.0 - prior));

  std::vector<double> margin(n, base_margin_), g(n), h(n);
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  loss_trace_.push_back(mean_log_loss(margin, y));
  for (int round = 0; round < spec.n_estimators; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      const double p = sigmoid(margin[i]);
      g[i] = p - y[i];
      h[i] = std::max(p * (1.0 - p), 1e-16);
    }
    BoostBuilder builder(x, g, h, spec);
    trees_.push_back(builder.build(all));
    for (std::size_t i = 0; i < n; ++i) margin[i] += trees_.back().predict(x.row(i));
    loss_trace_.push_back(mean_log_loss(margin, y));
  }
}

double GradientBoostedTrees::positive_probability(std::span<const double> x) const {
  double m = base_margin_;
  for (const auto& t : trees_) m += t.predict(x);
  return sigmoid(m);
}

}  // namespace gdakg
