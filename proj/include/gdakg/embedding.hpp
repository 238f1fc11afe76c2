#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "gdakg/types.hpp"

namespace gdakg {

enum class ModelKind : std::uint32_t {
  TransE = 0,
  TransD = 1,
  TransH = 2,
  DistMult = 3,
  HolE = 4,
  ComplEx = 5,
  Walk = 6,  // skip-gram entity table; not a link-prediction model
};

inline constexpr ModelKind kLinkPredictionModels[] = {ModelKind::TransE,   ModelKind::TransD,
                                                      ModelKind::TransH,   ModelKind::DistMult,
                                                      ModelKind::HolE,     ModelKind::ComplEx};

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view text);

enum class Optimizer : std::uint8_t { SGD, Adagrad };
enum class NormKind : std::uint8_t { L1, L2 };

// Training hyperparameters. defaults() returns the published per-model
// settings for 200-dimensional embeddings and 100 epochs.
struct ModelConfig {
  ModelKind kind = ModelKind::TransE;
  std::size_t dim = 200;
  int epochs = 100;
  int nr_batches = 100;
  double alpha = 0.001;
  double margin = 1.0;
  double lambda = 0.0;
  bool bern = false;
  int entity_negative_rate = 1;
  int relation_negative_rate = 0;
  Optimizer optimizer = Optimizer::SGD;
  NormKind norm = NormKind::L2;
  std::uint64_t seed = 1;
  int workers = 1;

  static ModelConfig defaults(ModelKind kind);
  // Margin ranking loss for distance models and HolE; regularized logistic
  // loss for DistMult and ComplEx.
  bool uses_margin_loss() const;
  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Row-major dense matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
  std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
  bool empty() const { return data.empty(); }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

// Parameter blocks of a model. The auxiliary blocks depend on the kind:
//   TransD   entity_aux = entity projection vectors, relation_aux = r_p
//   TransH   relation = translation d_r, relation_aux = hyperplane normal w_r
//   ComplEx  entity/relation hold real parts, *_aux the imaginary parts
// Other kinds leave the auxiliary blocks empty.
enum class Block : std::uint8_t { Entity, Relation, EntityAux, RelationAux };

struct EmbeddingModel {
  ModelKind kind = ModelKind::TransE;
  std::size_t dim = 0;
  NormKind norm = NormKind::L2;
  Matrix entity;
  Matrix relation;
  Matrix entity_aux;
  Matrix relation_aux;

  std::size_t entity_count() const { return entity.rows; }
  std::size_t relation_count() const { return relation.rows; }
  Matrix& block(Block b);
  const Matrix& block(Block b) const;

  friend bool operator==(const EmbeddingModel&, const EmbeddingModel&) = default;
};

bool has_entity_aux(ModelKind kind);
bool has_relation_aux(ModelKind kind);

// Allocates all blocks with entries uniform in [-6/sqrt(dim), 6/sqrt(dim)].
// TransE/TransH entity rows and TransH normals start at unit l2 norm.
EmbeddingModel init_model(ModelKind kind, std::size_t n_entities, std::size_t n_relations,
                          std::size_t dim, std::uint64_t seed, NormKind norm = NormKind::L2);

// Plausibility of (h, r, t); higher is more likely for every kind. Distance
// models return the negated distance.
double score(const EmbeddingModel& model, EntityId h, RelationId r, EntityId t);

// Distance d(h, r, t) for TransE/TransD/TransH (score = -distance).
double distance(const EmbeddingModel& model, EntityId h, RelationId r, EntityId t);

// Partial derivatives of score() with respect to the rows it reads.
struct ScoreGradient {
  std::vector<double> head, head_aux, relation, relation_aux, tail, tail_aux;
};

void score_gradient(const EmbeddingModel& model, const Triple& triple, ScoreGradient& out);

// Sparse gradient keyed by (block, row). Rows touched twice accumulate.
class SparseGradient {
 public:
  explicit SparseGradient(std::size_t dim = 0) : dim_(dim) {}

  std::span<double> row(Block block, std::uint32_t index);
  void add(Block block, std::uint32_t index, std::span<const double> values, double scale);
  void clear();

  struct Entry {
    Block block;
    std::uint32_t index;
    std::size_t offset;
  };
  std::span<const Entry> entries() const { return entries_; }
  std::span<const double> values(const Entry& e) const { return {values_.data() + e.offset, dim_}; }
  std::size_t dim() const { return dim_; }

 private:
  std::size_t dim_;
  std::vector<Entry> entries_;
  std::vector<double> values_;
  std::unordered_map<std::uint64_t, std::size_t> slots_;  // key -> entries_ index
};

// Loss of one positive triple against one corruption:
//   margin kinds:   max(0, margin - score(pos) + score(neg))
//   logistic kinds: softplus(-score(pos)) + softplus(score(neg))
//                   + lambda * (squared norms of every row both triples read) / dim
double pair_loss(const EmbeddingModel& model, const ModelConfig& config, const Triple& positive,
                 const Triple& negative);

// Adds d pair_loss / d theta into `grad` and returns the loss value.
double accumulate_pair_gradient(const EmbeddingModel& model, const ModelConfig& config,
                                const Triple& positive, const Triple& negative,
                                SparseGradient& grad);

// Binary layout (little-endian): magic "GDAE", u32 kind, u32 dim, u64 |E|,
// u64 |R|, then float32 rows of entity, relation, entity_aux, relation_aux
// (auxiliary blocks only when the kind has them). A JSON sidecar
// `<path>.json` carries the ModelConfig.
void save_model(const EmbeddingModel& model, const ModelConfig& config,
                const std::filesystem::path& path);

struct LoadedModel {
  EmbeddingModel model;
  ModelConfig config;
};
LoadedModel load_model(const std::filesystem::path& path);

// Rounds every parameter through float32, the on-disk precision.
void round_to_float(EmbeddingModel& model);

std::string config_to_json(const ModelConfig& config);
ModelConfig config_from_json(const std::string& text);

}  // namespace gdakg
