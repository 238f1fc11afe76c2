#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "gdakg/embedding.hpp"
#include "gdakg/kg_store.hpp"

namespace gdakg {

// Walk extraction and Word2Vec settings. Defaults follow the RDF2Vec setup:
// 500 walks of at most 8 hops per entity, 200-dimensional skip-gram vectors
// trained with the stock Word2Vec parameters.
struct WalkConfig {
  int max_walk_length = 8;
  int walks_per_entity = 500;
  bool deduplicate = true;
  bool emit_relations = true;
  int wl_iterations = 0;  // 0: plain random walks

  std::size_t dim = 200;
  int window = 5;
  int negative = 5;
  int epochs = 5;
  int min_count = 5;  // seed entities are always kept
  double sample = 0.001;
  double alpha = 0.025;
  double min_alpha = 0.0001;
  double ns_exponent = 0.75;
  bool shrink_windows = true;

  std::uint64_t seed = 1;
  int workers = 1;

  void validate() const;
  friend bool operator==(const WalkConfig&, const WalkConfig&) = default;
};

std::string walk_config_to_json(const WalkConfig& config);
WalkConfig walk_config_from_json(const std::string& text);

// Token ids: [0, |E|) entities, [|E|, |E|+|R|) relations, then
// Weisfeiler-Lehman labels (named in wl_labels).
struct WalkCorpus {
  std::size_t entity_count = 0;
  std::size_t relation_count = 0;
  std::vector<std::string> wl_labels;
  std::vector<std::vector<std::uint32_t>> walks;

  std::uint32_t entity_token(EntityId e) const { return e; }
  std::uint32_t relation_token(RelationId r) const {
    return static_cast<std::uint32_t>(entity_count + r);
  }
  std::size_t token_count() const { return entity_count + relation_count + wl_labels.size(); }
  std::string token_name(std::uint32_t token, const Catalog& catalog) const;
};

// Up to walks_per_entity random out-edge walks from every seed, each
// token-alternating entity/relation and at most max_walk_length hops long.
// Walks stop early at sinks. Each seed draws from its own generator derived
// from config.seed, so the corpus does not depend on config.workers.
WalkCorpus generate_walks(const KnowledgeGraph& kg, std::span<const EntityId> seeds,
                          const WalkConfig& config);

class EntityEmbeddingTable {
 public:
  EntityEmbeddingTable() = default;
  EntityEmbeddingTable(std::size_t dim, std::vector<EntityId> ids, Matrix vectors);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return ids_.size(); }
  std::span<const EntityId> ids() const { return ids_; }
  bool contains(EntityId e) const { return rows_.contains(e); }
  // Throws ConsistencyError for entities without a vector.
  std::span<const double> vector(EntityId e) const;
  const Matrix& matrix() const { return vectors_; }

  friend bool operator==(const EntityEmbeddingTable& a, const EntityEmbeddingTable& b) {
    return a.dim_ == b.dim_ && a.ids_ == b.ids_ && a.vectors_ == b.vectors_;
  }

 private:
  std::size_t dim_ = 0;
  std::vector<EntityId> ids_;
  Matrix vectors_;
  std::unordered_map<EntityId, std::size_t> rows_;
};

// Skip-gram with negative sampling over the corpus. Returns input vectors of
// the seeds only; throws ConsistencyError naming seeds absent from the
// corpus. Deterministic under config.seed when config.workers == 1.
EntityEmbeddingTable train_skipgram(const WalkCorpus& corpus, std::span<const EntityId> seeds,
                                    const WalkConfig& config);

void save_corpus(const WalkCorpus& corpus, const Catalog& catalog,
                 const std::filesystem::path& path);

// Same binary layout as link-prediction models with kind Walk, |R| = 0 and
// a block of u32 entity ids between the header and the vectors.
void save_table(const EntityEmbeddingTable& table, const WalkConfig& config,
                const std::filesystem::path& path);
EntityEmbeddingTable load_table(const std::filesystem::path& path);

double cosine_similarity(std::span<const double> a, std::span<const double> b);

}  // namespace gdakg
