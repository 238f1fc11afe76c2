#pragma once

#include <optional>
#include <span>
#include <vector>

#include "gdakg/embedding.hpp"
#include "gdakg/kg_store.hpp"
#include "gdakg/rng.hpp"

namespace gdakg {

// Corrupts training triples for negative sampling. Corruptions that
// reproduce an existing KG triple are rejected and redrawn.
class NegativeSampler {
 public:
  NegativeSampler(const KnowledgeGraph& kg, bool bern);

  // Replaces the head or the tail with a uniformly drawn entity. The side is
  // a fair coin, or with bern the probability of replacing the head is
  // tph / (tph + hph) for the triple's relation.
  std::optional<Triple> corrupt_entity(const Triple& t, Rng& rng) const;
  std::optional<Triple> corrupt_relation(const Triple& t, Rng& rng) const;
  double head_probability(RelationId r) const;

 private:
  const KnowledgeGraph& kg_;
  bool bern_;
  std::vector<double> head_prob_;
  static constexpr int kMaxAttempts = 64;
};

struct TrainResult {
  EmbeddingModel model;
  std::vector<double> epoch_loss;  // mean pair loss per epoch
};

// Runs config.epochs epochs of config.nr_batches mini-batches over the KG
// triples. With workers == 1 the result is a pure function of (kg, config);
// more workers update shared parameters without locks and are not
// reproducible. Throws TrainingError on a non-finite batch loss.
TrainResult train(const KnowledgeGraph& kg, const ModelConfig& config);

enum class Direction : std::uint8_t { PredictTail, PredictHead };

struct ScoredCandidate {
  EntityId entity = 0;
  double score = 0.0;
  friend bool operator==(const ScoredCandidate&, const ScoredCandidate&) = default;
};

struct CandidateRanking {
  EntityId query = 0;
  RelationId relation = 0;
  Direction direction = Direction::PredictTail;
  std::vector<ScoredCandidate> candidates;  // descending score, ties by id
  friend bool operator==(const CandidateRanking&, const CandidateRanking&) = default;
};

// Scores every pool member as the missing slot of (query, relation, ?) or
// (?, relation, query). The query itself and duplicate pool entries are
// skipped. Throws ConfigError for an empty pool.
CandidateRanking rank_candidates(const EmbeddingModel& model, EntityId query, RelationId relation,
                                 Direction direction, std::span<const EntityId> pool);

CandidateRanking filter_by_kind(const CandidateRanking& ranking, EntityKind kind,
                                const Catalog& catalog);

}  // namespace gdakg
