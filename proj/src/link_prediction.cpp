#include "gdakg/link_prediction.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <set>
#include <string>

#include "gdakg/error.hpp"
#include "gdakg/parallel.hpp"

namespace gdakg {
namespace {

void renormalize(Matrix& m) {
  for (std::size_t i = 0; i < m.rows; ++i) {
    auto row = m.row(i);
    double n = 0;
    for (double v : row) n += v * v;
    n = std::sqrt(n);
    if (n > 0) {
      for (auto& v : row) v /= n;
    }
  }
}

// Per-parameter squared-gradient sums for Adagrad.
struct AdagradState {
  static constexpr double kInitialAccumulator = 0.1;
  std::array<std::vector<double>, 4> accum;

  explicit AdagradState(const EmbeddingModel& m) {
    for (auto b : {Block::Entity, Block::Relation, Block::EntityAux, Block::RelationAux}) {
      accum[static_cast<int>(b)].assign(m.block(b).data.size(), kInitialAccumulator);
    }
  }
};

// Scales `row` back onto the unit ball when it left it.
void clip_to_unit_ball(std::span<double> row) {
  double n = 0;
  for (double v : row) n += v * v;
  if (n > 1.0) {
    n = std::sqrt(n);
    for (auto& v : row) v /= n;
  }
}

void apply(EmbeddingModel& model, const ModelConfig& config, const SparseGradient& grad,
           AdagradState* adagrad) {
  const std::size_t d = grad.dim();
  for (const auto& entry : grad.entries()) {
    const auto g = grad.values(entry);
    auto row = model.block(entry.block).row(entry.index);
    if (config.optimizer == Optimizer::SGD) {
      for (std::size_t i = 0; i < d; ++i) row[i] -= config.alpha * g[i];
    } else {
      auto& acc = adagrad->accum[static_cast<int>(entry.block)];
      double* a = acc.data() + static_cast<std::size_t>(entry.index) * d;
      for (std::size_t i = 0; i < d; ++i) {
        a[i] += g[i] * g[i];
        row[i] -= config.alpha * g[i] / std::sqrt(a[i]);
      }
    }
    // TransD keeps every vector in the unit ball, HolE its entity vectors.
    if (config.kind == ModelKind::TransD ||
        (config.kind == ModelKind::HolE && entry.block == Block::Entity)) {
      clip_to_unit_ball(row);
    }
  }
}

// Runs the mini-batches of one shard of the epoch permutation.
double run_shard(EmbeddingModel& model, const ModelConfig& config, const NegativeSampler& sampler,
                 std::span<const Triple> triples, std::span<const std::size_t> order,
                 std::size_t batch_size, Rng& rng, AdagradState* adagrad, int epoch,
                 std::size_t& pairs) {
  SparseGradient grad(model.dim);
  double total = 0.0;
  std::size_t batch_index = 0;
  for (std::size_t start = 0; start < order.size(); start += batch_size, ++batch_index) {
    const std::size_t end = std::min(order.size(), start + batch_size);
    grad.clear();
    double batch_loss = 0.0;
    for (std::size_t k = start; k < end; ++k) {
      const Triple& pos = triples[order[k]];
      for (int n = 0; n < config.entity_negative_rate; ++n) {
        if (auto neg = sampler.corrupt_entity(pos, rng)) {
          batch_loss += accumulate_pair_gradient(model, config, pos, *neg, grad);
          ++pairs;
        }
      }
      for (int n = 0; n < config.relation_negative_rate; ++n) {
        if (auto neg = sampler.corrupt_relation(pos, rng)) {
          batch_loss += accumulate_pair_gradient(model, config, pos, *neg, grad);
          ++pairs;
        }
      }
    }
    if (!std::isfinite(batch_loss)) {
      throw TrainingError(std::string(to_string(config.kind)) + ": non-finite loss at epoch " +
                          std::to_string(epoch) + ", batch " + std::to_string(batch_index));
    }
    apply(model, config, grad, adagrad);
    total += batch_loss;
  }
  return total;
}

}  // namespace

NegativeSampler::NegativeSampler(const KnowledgeGraph& kg, bool bern) : kg_(kg), bern_(bern) {
  const std::size_t nr = kg.relation_count();
  head_prob_.assign(nr, 0.5);
  if (!bern) return;
  // tph: mean tails per distinct (head, relation); hph: mean heads per
  // distinct (relation, tail).
  std::vector<std::map<EntityId, std::size_t>> tails_of(nr), heads_of(nr);
  for (const auto& t : kg.triples()) {
    ++tails_of[t.relation][t.head];
    ++heads_of[t.relation][t.tail];
  }
  for (RelationId r = 0; r < nr; ++r) {
    if (tails_of[r].empty()) continue;
    std::size_t count = 0;
    for (const auto& [_, c] : tails_of[r]) count += c;
    const double tph = static_cast<double>(count) / static_cast<double>(tails_of[r].size());
    const double hph = static_cast<double>(count) / static_cast<double>(heads_of[r].size());
    head_prob_[r] = tph / (tph + hph);
  }
}

double NegativeSampler::head_probability(RelationId r) const { return head_prob_.at(r); }

std::optional<Triple> NegativeSampler::corrupt_entity(const Triple& t, Rng& rng) const {
  const std::size_t n = kg_.entity_count();
  if (n < 2) return std::nullopt;
  const double p_head = bern_ ? head_prob_[t.relation] : 0.5;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    Triple c = t;
    const auto e = static_cast<EntityId>(rng.index(n));
    if (rng.coin(p_head)) {
      c.head = e;
    } else {
      c.tail = e;
    }
    if (!kg_.contains(c)) return c;
  }
  return std::nullopt;
}

std::optional<Triple> NegativeSampler::corrupt_relation(const Triple& t, Rng& rng) const {
  const std::size_t n = kg_.relation_count();
  if (n < 2) return std::nullopt;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    Triple c = t;
    c.relation = static_cast<RelationId>(rng.index(n));
    if (!kg_.contains(c)) return c;
  }
  return std::nullopt;
}

TrainResult train(const KnowledgeGraph& kg, const ModelConfig& config) {
  config.validate();
  if (kg.triples().empty()) throw ConfigError("cannot train on an empty knowledge graph");

  TrainResult result;
  result.model = init_model(config.kind, kg.entity_count(), kg.relation_count(), config.dim,
                            derive_seed(config.seed, 0), config.norm);
  EmbeddingModel& model = result.model;
  const NegativeSampler sampler(kg, config.bern);
  std::optional<AdagradState> adagrad;
  if (config.optimizer == Optimizer::Adagrad) adagrad.emplace(model);

  const auto triples = kg.triples();
  std::vector<std::size_t> order(triples.size());
  const std::size_t batch_size =
      (triples.size() + static_cast<std::size_t>(config.nr_batches) - 1) /
      static_cast<std::size_t>(config.nr_batches);
  Rng master(derive_seed(config.seed, 1));
  const int workers = std::max(1, config.workers);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    master.shuffle(std::span(order));

    double loss = 0.0;
    std::size_t pairs = 0;
    if (workers == 1) {
      loss = run_shard(model, config, sampler, triples, order, batch_size, master,
                       adagrad ? &*adagrad : nullptr, epoch, pairs);
    } else {
      std::vector<double> shard_loss(workers, 0.0);
      std::vector<std::size_t> shard_pairs(workers, 0);
      const auto epoch_seed = master.next();
      parallel_shards(order.size(), workers, [&](std::size_t begin, std::size_t end, int w) {
        Rng rng(derive_seed(epoch_seed, static_cast<std::uint64_t>(w)));
        shard_loss[w] = run_shard(model, config, sampler, triples,
                                  std::span(order).subspan(begin, end - begin), batch_size, rng,
                                  adagrad ? &*adagrad : nullptr, epoch, shard_pairs[w]);
      });
      for (int w = 0; w < workers; ++w) {
        loss += shard_loss[w];
        pairs += shard_pairs[w];
      }
    }

    if (config.kind == ModelKind::TransE || config.kind == ModelKind::TransH) {
      renormalize(model.entity);
    }
    if (config.kind == ModelKind::TransH) renormalize(model.relation_aux);
    result.epoch_loss.push_back(pairs ? loss / static_cast<double>(pairs) : 0.0);
  }
  return result;
}

CandidateRanking rank_candidates(const EmbeddingModel& model, EntityId query, RelationId relation,
                                 Direction direction, std::span<const EntityId> pool) {
  if (pool.empty()) throw ConfigError("rank_candidates: empty candidate pool");
  CandidateRanking out;
  out.query = query;
  out.relation = relation;
  out.direction = direction;
  std::vector<EntityId> ids(pool.begin(), pool.end());
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  out.candidates.reserve(ids.size());
  for (EntityId c : ids) {
    if (c == query) continue;
    const double s = direction == Direction::PredictTail ? score(model, query, relation, c)
                                                         : score(model, c, relation, query);
    out.candidates.push_back({c, std::isnan(s) ? -INFINITY : s});
  }
  std::stable_sort(out.candidates.begin(), out.candidates.end(),
                   [](const ScoredCandidate& a, const ScoredCandidate& b) {
                     if (a.score != b.score) return a.score > b.score;
                     return a.entity < b.entity;
                   });
  return out;
}

CandidateRanking filter_by_kind(const CandidateRanking& ranking, EntityKind kind,
                                const Catalog& catalog) {
  CandidateRanking out = ranking;
  out.candidates.clear();
  for (const auto& c : ranking.candidates) {
    if (catalog.kind(c.entity) == kind) out.candidates.push_back(c);
  }
  return out;
}

}  // namespace gdakg
