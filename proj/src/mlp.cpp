#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "gdakg/classify.hpp"
#include "gdakg/error.hpp"
#include "gdakg/rng.hpp"

namespace gdakg {
namespace {

using Layer = MultiLayerPerceptron::Layer;

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Output-unit logit; `acts` receives every layer's activations when non-null.
double forward(const std::vector<Layer>& layers, std::span<const double> x,
               std::vector<std::vector<double>>* acts) {
  std::vector<double> cur(x.begin(), x.end());
  if (acts) acts->assign(1, cur);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& L = layers[l];
    std::vector<double> next(L.out);
    for (std::size_t o = 0; o < L.out; ++o) {
      double s = L.bias[o];
      const double* w = L.weights.data() + o * L.in;
      for (std::size_t i = 0; i < L.in; ++i) s += w[i] * cur[i];
      next[o] = (l + 1 < layers.size()) ? std::max(0.0, s) : s;
    }
    cur = std::move(next);
    if (acts) acts->push_back(cur);
  }
  return cur[0];
}

double log_loss(double logit, int y) {
  return std::max(logit, 0.0) + std::log1p(std::exp(-std::abs(logit))) - y * logit;
}

struct Adam {
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;
  std::vector<double> m, v;
  long t = 0;

  explicit Adam(std::size_t n) : m(n, 0.0), v(n, 0.0) {}

  void step(std::vector<double*>& params, const std::vector<double>& grad, double lr) {
    ++t;
    const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t));
    const double rate = lr * std::sqrt(c2) / c1;
    for (std::size_t i = 0; i < params.size(); ++i) {
      m[i] = kBeta1 * m[i] + (1 - kBeta1) * grad[i];
      v[i] = kBeta2 * v[i] + (1 - kBeta2) * grad[i] * grad[i];
      *params[i] -= rate * m[i] / (std::sqrt(v[i]) + kEps);
    }
  }
};

}  // namespace

MultiLayerPerceptron::MultiLayerPerceptron(const ClassifierSpec& spec, const Matrix& x,
                                           std::span<const int> y) {
  if (spec.batch_size < 1 || spec.max_epochs < 1 || spec.patience < 1) {
    throw ConfigError("MLP batch_size, max_epochs and patience must be positive");
  }
  if (!(spec.validation_fraction >= 0 && spec.validation_fraction < 1)) {
    throw ConfigError("validation_fraction must lie in [0, 1)");
  }
  Rng rng(spec.seed);

  std::vector<std::size_t> sizes{x.cols};
  for (int h : spec.hidden_layers) {
    if (h < 1) throw ConfigError("hidden layer sizes must be positive");
    sizes.push_back(static_cast<std::size_t>(h));
  }
  sizes.push_back(1);
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    Layer L;
    L.in = sizes[l];
    L.out = sizes[l + 1];
    // Glorot uniform; sigmoid outputs use the factor 2.
    const double factor = (l + 2 == sizes.size()) ? 2.0 : 6.0;
    const double bound = std::sqrt(factor / static_cast<double>(L.in + L.out));
    L.weights.resize(L.in * L.out);
    L.bias.resize(L.out);
    for (auto& w : L.weights) w = rng.uniform(-bound, bound);
    for (auto& b : L.bias) b = rng.uniform(-bound, bound);
    layers_.push_back(std::move(L));
  }

  std::vector<std::size_t> order(x.rows);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(std::span(order));
  std::size_t n_val = static_cast<std::size_t>(spec.validation_fraction * x.rows);
  if (x.rows - n_val < 1) n_val = 0;
  std::vector<std::size_t> val(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> train(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  const auto& monitor = val.empty() ? train : val;

  std::vector<double*> params;
  for (auto& L : layers_) {
    for (auto& w : L.weights) params.push_back(&w);
    for (auto& b : L.bias) params.push_back(&b);
  }
  Adam adam(params.size());
  std::vector<double> grad(params.size());

  auto monitored_loss = [&] {
    double s = 0.0;
    for (auto i : monitor) s += log_loss(forward(layers_, x.row(i), nullptr), y[i]);
    return s / static_cast<double>(monitor.size());
  };

  double best = std::numeric_limits<double>::infinity();
  std::vector<Layer> best_layers = layers_;
  int stale = 0;
  std::vector<std::vector<double>> acts;
  std::vector<std::vector<double>> deltas(layers_.size());
  const std::size_t batch = static_cast<std::size_t>(spec.batch_size);

  for (int epoch = 0; epoch < spec.max_epochs; ++epoch) {
    rng.shuffle(std::span(train));
    for (std::size_t start = 0; start < train.size(); start += batch) {
      const std::size_t end = std::min(train.size(), start + batch);
      const double nb = static_cast<double>(end - start);
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t k = start; k < end; ++k) {
        const auto i = train[k];
        const double logit = forward(layers_, x.row(i), &acts);
        // Backpropagate d(loss)/d(pre-activation) layer by layer.
        deltas.back().assign(1, sigmoid(logit) - y[i]);
        for (std::size_t l = layers_.size() - 1; l > 0; --l) {
          const auto& L = layers_[l];
          auto& prev = deltas[l - 1];
          prev.assign(L.in, 0.0);
          for (std::size_t o = 0; o < L.out; ++o) {
            const double* w = L.weights.data() + o * L.in;
            for (std::size_t j = 0; j < L.in; ++j) prev[j] += w[j] * deltas[l][o];
          }
          for (std::size_t j = 0; j < L.in; ++j) {
            if (acts[l][j] <= 0) prev[j] = 0;
          }
        }
        std::size_t p = 0;
        for (std::size_t l = 0; l < layers_.size(); ++l) {
          const auto& L = layers_[l];
          for (std::size_t o = 0; o < L.out; ++o) {
            for (std::size_t j = 0; j < L.in; ++j) grad[p + o * L.in + j] += deltas[l][o] * acts[l][j];
          }
          p += L.in * L.out;
          for (std::size_t o = 0; o < L.out; ++o) grad[p + o] += deltas[l][o];
          p += L.out;
        }
      }
      std::size_t p = 0;
      for (const auto& L : layers_) {
        for (std::size_t k = 0; k < L.weights.size(); ++k) {
          grad[p + k] = (grad[p + k] + spec.l2_alpha * L.weights[k]) / nb;
        }
        p += L.weights.size();
        for (std::size_t k = 0; k < L.out; ++k) grad[p + k] /= nb;
        p += L.out;
      }
      adam.step(params, grad, spec.adam_learning_rate);
    }
    epochs_run_ = epoch + 1;
    const double loss = monitored_loss();
    if (!std::isfinite(loss)) throw TrainingError("MLP: non-finite loss at epoch " + std::to_string(epoch));
    if (loss < best - 1e-4) {
      best = loss;
      best_layers = layers_;
      stale = 0;
    } else if (++stale >= spec.patience) {
      break;
    }
  }
  layers_ = std::move(best_layers);
}

double MultiLayerPerceptron::positive_probability(std::span<const double> x) const {
  return sigmoid(forward(layers_, x, nullptr));
}

}  // namespace gdakg
