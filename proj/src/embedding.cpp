#include "gdakg/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>

#include "binary_io.hpp"
#include "gdakg/circular.hpp"
#include "gdakg/error.hpp"
#include "gdakg/rng.hpp"
#include "text.hpp"

namespace gdakg {
namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void check_ids(const EmbeddingModel& m, EntityId h, RelationId r, EntityId t) {
  if (h >= m.entity_count() || t >= m.entity_count()) {
    throw ConsistencyError("entity id out of range for embedding model");
  }
  if (r >= m.relation_count()) throw ConsistencyError("relation id out of range for embedding model");
}

// e = h + r - t with the kind-specific projections applied to h and t.
void translation_residual(const EmbeddingModel& m, EntityId h, RelationId r, EntityId t,
                          std::vector<double>& e) {
  const auto hv = m.entity.row(h);
  const auto tv = m.entity.row(t);
  const auto rv = m.relation.row(r);
  const std::size_t d = m.dim;
  e.resize(d);
  switch (m.kind) {
    case ModelKind::TransE:
      for (std::size_t i = 0; i < d; ++i) e[i] = hv[i] + rv[i] - tv[i];
      return;
    case ModelKind::TransD: {
      const auto rp = m.relation_aux.row(r);
      const double hs = dot(m.entity_aux.row(h), hv);
      const double ts = dot(m.entity_aux.row(t), tv);
      for (std::size_t i = 0; i < d; ++i) e[i] = hv[i] + hs * rp[i] + rv[i] - tv[i] - ts * rp[i];
      return;
    }
    case ModelKind::TransH: {
      const auto w = m.relation_aux.row(r);
      const double hs = dot(w, hv);
      const double ts = dot(w, tv);
      for (std::size_t i = 0; i < d; ++i) e[i] = hv[i] - hs * w[i] + rv[i] - tv[i] + ts * w[i];
      return;
    }
    default:
      throw Error("translation_residual: not a distance model");
  }
}

double complex_score(const EmbeddingModel& m, EntityId h, RelationId r, EntityId t) {
  const auto hr = m.entity.row(h), hi = m.entity_aux.row(h);
  const auto tr = m.entity.row(t), ti = m.entity_aux.row(t);
  const auto rr = m.relation.row(r), ri = m.relation_aux.row(r);
  double s = 0.0;
  for (std::size_t k = 0; k < m.dim; ++k) {
    s += hr[k] * rr[k] * tr[k] + hi[k] * rr[k] * ti[k] + hr[k] * ri[k] * ti[k] -
         hi[k] * ri[k] * tr[k];
  }
  return s;
}

void add_score_gradient(const EmbeddingModel& m, const Triple& tr, double scale,
                        SparseGradient& grad) {
  thread_local ScoreGradient g;
  score_gradient(m, tr, g);
  grad.add(Block::Entity, tr.head, g.head, scale);
  grad.add(Block::Entity, tr.tail, g.tail, scale);
  grad.add(Block::Relation, tr.relation, g.relation, scale);
  if (!g.head_aux.empty()) grad.add(Block::EntityAux, tr.head, g.head_aux, scale);
  if (!g.tail_aux.empty()) grad.add(Block::EntityAux, tr.tail, g.tail_aux, scale);
  if (!g.relation_aux.empty()) grad.add(Block::RelationAux, tr.relation, g.relation_aux, scale);
}

double regularizer(const EmbeddingModel& m, const Triple& t) {
  auto sq = [](std::span<const double> v) { return dot(v, v); };
  double s = sq(m.entity.row(t.head)) + sq(m.entity.row(t.tail)) + sq(m.relation.row(t.relation));
  if (has_entity_aux(m.kind)) s += sq(m.entity_aux.row(t.head)) + sq(m.entity_aux.row(t.tail));
  if (has_relation_aux(m.kind)) s += sq(m.relation_aux.row(t.relation));
  return s / static_cast<double>(m.dim);
}

void add_regularizer_gradient(const EmbeddingModel& m, const Triple& t, double lambda,
                              SparseGradient& grad) {
  lambda /= static_cast<double>(m.dim);
  grad.add(Block::Entity, t.head, m.entity.row(t.head), 2 * lambda);
  grad.add(Block::Entity, t.tail, m.entity.row(t.tail), 2 * lambda);
  grad.add(Block::Relation, t.relation, m.relation.row(t.relation), 2 * lambda);
  if (has_entity_aux(m.kind)) {
    grad.add(Block::EntityAux, t.head, m.entity_aux.row(t.head), 2 * lambda);
    grad.add(Block::EntityAux, t.tail, m.entity_aux.row(t.tail), 2 * lambda);
  }
  if (has_relation_aux(m.kind)) {
    grad.add(Block::RelationAux, t.relation, m.relation_aux.row(t.relation), 2 * lambda);
  }
}

void normalize_rows(Matrix& m) {
  for (std::size_t i = 0; i < m.rows; ++i) {
    auto row = m.row(i);
    const double n = std::sqrt(dot(row, row));
    if (n > 0) {
      for (auto& v : row) v /= n;
    }
  }
}

}  // namespace

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::TransE: return "TransE";
    case ModelKind::TransD: return "TransD";
    case ModelKind::TransH: return "TransH";
    case ModelKind::DistMult: return "DistMult";
    case ModelKind::HolE: return "HolE";
    case ModelKind::ComplEx: return "ComplEx";
    case ModelKind::Walk: return "Walk";
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view text) {
  for (auto k : {ModelKind::TransE, ModelKind::TransD, ModelKind::TransH, ModelKind::DistMult,
                 ModelKind::HolE, ModelKind::ComplEx, ModelKind::Walk}) {
    if (text == to_string(k)) return k;
  }
  throw ConfigError("unknown model kind '" + std::string(text) + "'");
}

ModelConfig ModelConfig::defaults(ModelKind kind) {
  ModelConfig c;
  c.kind = kind;
  c.workers = 8;
  switch (kind) {
    case ModelKind::TransE:
    case ModelKind::TransH:
      c.alpha = 0.001;
      c.bern = false;
      c.margin = 1.0;
      c.optimizer = Optimizer::SGD;
      break;
    case ModelKind::TransD:
      c.alpha = 1.0;
      c.bern = true;
      c.margin = 4.0;
      c.optimizer = Optimizer::SGD;
      break;
    case ModelKind::DistMult:
    case ModelKind::ComplEx:
      c.alpha = 0.5;
      c.lambda = 0.05;
      c.bern = true;
      c.margin = 0.0;
      c.optimizer = Optimizer::Adagrad;
      break;
    case ModelKind::HolE:
      c.alpha = 0.1;
      c.bern = false;
      c.margin = 0.2;
      c.optimizer = Optimizer::Adagrad;
      break;
    case ModelKind::Walk:
      throw ConfigError("walk embeddings have no link-prediction defaults");
  }
  return c;
}

bool ModelConfig::uses_margin_loss() const {
  return kind != ModelKind::DistMult && kind != ModelKind::ComplEx;
}

void ModelConfig::validate() const {
  if (kind == ModelKind::Walk) throw ConfigError("model kind Walk cannot be trained here");
  if (dim == 0) throw ConfigError("dim must be positive");
  if (epochs < 0 || nr_batches <= 0) throw ConfigError("epochs >= 0 and nr_batches > 0 required");
  if (entity_negative_rate < 0 || relation_negative_rate < 0) {
    throw ConfigError("negative rates must be non-negative");
  }
  if (!(alpha > 0) || margin < 0 || lambda < 0) {
    throw ConfigError("alpha must be positive; margin and lambda non-negative");
  }
  if (workers < 1) throw ConfigError("workers must be >= 1");
}

Matrix& EmbeddingModel::block(Block b) {
  switch (b) {
    case Block::Entity: return entity;
    case Block::Relation: return relation;
    case Block::EntityAux: return entity_aux;
    case Block::RelationAux: return relation_aux;
  }
  return entity;
}

const Matrix& EmbeddingModel::block(Block b) const {
  return const_cast<EmbeddingModel*>(this)->block(b);
}

bool has_entity_aux(ModelKind kind) { return kind == ModelKind::TransD || kind == ModelKind::ComplEx; }

bool has_relation_aux(ModelKind kind) {
  return kind == ModelKind::TransD || kind == ModelKind::TransH || kind == ModelKind::ComplEx;
}

EmbeddingModel init_model(ModelKind kind, std::size_t n_entities, std::size_t n_relations,
                          std::size_t dim, std::uint64_t seed, NormKind norm) {
  if (dim == 0) throw ConfigError("dim must be positive");
  EmbeddingModel m;
  m.kind = kind;
  m.dim = dim;
  m.norm = norm;
  m.entity = Matrix(n_entities, dim);
  m.relation = Matrix(n_relations, dim);
  if (has_entity_aux(kind)) m.entity_aux = Matrix(n_entities, dim);
  if (has_relation_aux(kind)) m.relation_aux = Matrix(n_relations, dim);

  Rng rng(seed);
  const double bound = 6.0 / std::sqrt(static_cast<double>(dim));
  for (Matrix* block : {&m.entity, &m.relation, &m.entity_aux, &m.relation_aux}) {
    for (auto& v : block->data) v = rng.uniform(-bound, bound);
  }
  if (kind == ModelKind::TransE || kind == ModelKind::TransH) normalize_rows(m.entity);
  if (kind == ModelKind::TransH) normalize_rows(m.relation_aux);
  if (kind == ModelKind::TransD) {
    for (Matrix* block : {&m.entity, &m.relation, &m.entity_aux, &m.relation_aux}) {
      normalize_rows(*block);
    }
  }
  if (kind == ModelKind::HolE) normalize_rows(m.entity);
  return m;
}

double distance(const EmbeddingModel& m, EntityId h, RelationId r, EntityId t) {
  check_ids(m, h, r, t);
  thread_local std::vector<double> e;
  translation_residual(m, h, r, t, e);
  if (m.kind == ModelKind::TransE) {
    if (m.norm == NormKind::L1) {
      double s = 0;
      for (double v : e) s += std::abs(v);
      return s;
    }
    return std::sqrt(dot(e, e));
  }
  return dot(e, e);
}

double score(const EmbeddingModel& m, EntityId h, RelationId r, EntityId t) {
  check_ids(m, h, r, t);
  switch (m.kind) {
    case ModelKind::TransE:
    case ModelKind::TransD:
    case ModelKind::TransH:
      return -distance(m, h, r, t);
    case ModelKind::DistMult: {
      const auto hv = m.entity.row(h), rv = m.relation.row(r), tv = m.entity.row(t);
      double s = 0;
      for (std::size_t i = 0; i < m.dim; ++i) s += hv[i] * rv[i] * tv[i];
      return s;
    }
    case ModelKind::HolE: {
      thread_local std::vector<double> corr;
      corr.resize(m.dim);
      circular_correlation(m.entity.row(h), m.entity.row(t), corr);
      return dot(m.relation.row(r), corr);
    }
    case ModelKind::ComplEx:
      return complex_score(m, h, r, t);
    case ModelKind::Walk:
      break;
  }
  throw ConfigError("walk embeddings cannot score triples");
}

void score_gradient(const EmbeddingModel& m, const Triple& tr, ScoreGradient& g) {
  check_ids(m, tr.head, tr.relation, tr.tail);
  const std::size_t d = m.dim;
  const auto hv = m.entity.row(tr.head);
  const auto tv = m.entity.row(tr.tail);
  const auto rv = m.relation.row(tr.relation);
  g.head.assign(d, 0.0);
  g.tail.assign(d, 0.0);
  g.relation.assign(d, 0.0);
  g.head_aux.clear();
  g.tail_aux.clear();
  g.relation_aux.clear();

  switch (m.kind) {
    case ModelKind::TransE: {
      thread_local std::vector<double> e;
      translation_residual(m, tr.head, tr.relation, tr.tail, e);
      if (m.norm == NormKind::L1) {
        for (std::size_t i = 0; i < d; ++i) {
          const double s = e[i] > 0 ? 1.0 : (e[i] < 0 ? -1.0 : 0.0);
          g.head[i] = -s;
          g.relation[i] = -s;
          g.tail[i] = s;
        }
      } else {
        const double n = std::sqrt(dot(e, e));
        if (n > 1e-300) {
          for (std::size_t i = 0; i < d; ++i) {
            g.head[i] = -e[i] / n;
            g.relation[i] = -e[i] / n;
            g.tail[i] = e[i] / n;
          }
        }
      }
      return;
    }
    case ModelKind::TransD: {
      thread_local std::vector<double> e;
      translation_residual(m, tr.head, tr.relation, tr.tail, e);
      const auto hp = m.entity_aux.row(tr.head);
      const auto tp = m.entity_aux.row(tr.tail);
      const auto rp = m.relation_aux.row(tr.relation);
      const double hs = dot(hp, hv);
      const double ts = dot(tp, tv);
      double rpg = 0;
      for (std::size_t i = 0; i < d; ++i) rpg += rp[i] * 2 * e[i];
      g.head_aux.resize(d);
      g.tail_aux.resize(d);
      g.relation_aux.resize(d);
      for (std::size_t i = 0; i < d; ++i) {
        const double gi = 2 * e[i];
        g.head[i] = -(gi + rpg * hp[i]);
        g.head_aux[i] = -rpg * hv[i];
        g.relation[i] = -gi;
        g.relation_aux[i] = -(hs - ts) * gi;
        g.tail[i] = gi + rpg * tp[i];
        g.tail_aux[i] = rpg * tv[i];
      }
      return;
    }
    case ModelKind::TransH: {
      thread_local std::vector<double> e;
      translation_residual(m, tr.head, tr.relation, tr.tail, e);
      const auto w = m.relation_aux.row(tr.relation);
      double wg = 0, s = 0;
      for (std::size_t i = 0; i < d; ++i) {
        wg += w[i] * 2 * e[i];
        s += w[i] * (hv[i] - tv[i]);
      }
      g.relation_aux.resize(d);
      for (std::size_t i = 0; i < d; ++i) {
        const double gi = 2 * e[i];
        g.head[i] = -(gi - wg * w[i]);
        g.tail[i] = gi - wg * w[i];
        g.relation[i] = -gi;
        g.relation_aux[i] = wg * (hv[i] - tv[i]) + s * gi;
      }
      return;
    }
    case ModelKind::DistMult:
      for (std::size_t i = 0; i < d; ++i) {
        g.head[i] = rv[i] * tv[i];
        g.relation[i] = hv[i] * tv[i];
        g.tail[i] = hv[i] * rv[i];
      }
      return;
    case ModelKind::HolE:
      circular_correlation(hv, tv, g.relation);
      circular_correlation(rv, tv, g.head);
      circular_convolution(hv, rv, g.tail);
      return;
    case ModelKind::ComplEx: {
      const auto hi = m.entity_aux.row(tr.head);
      const auto ti = m.entity_aux.row(tr.tail);
      const auto ri = m.relation_aux.row(tr.relation);
      g.head_aux.resize(d);
      g.tail_aux.resize(d);
      g.relation_aux.resize(d);
      for (std::size_t k = 0; k < d; ++k) {
        g.head[k] = rv[k] * tv[k] + ri[k] * ti[k];
        g.head_aux[k] = rv[k] * ti[k] - ri[k] * tv[k];
        g.relation[k] = hv[k] * tv[k] + hi[k] * ti[k];
        g.relation_aux[k] = hv[k] * ti[k] - hi[k] * tv[k];
        g.tail[k] = hv[k] * rv[k] - hi[k] * ri[k];
        g.tail_aux[k] = hi[k] * rv[k] + hv[k] * ri[k];
      }
      return;
    }
    case ModelKind::Walk:
      break;
  }
  throw ConfigError("walk embeddings have no score gradient");
}

std::span<double> SparseGradient::row(Block block, std::uint32_t index) {
  const std::uint64_t key = (static_cast<std::uint64_t>(block) << 32) | index;
  auto [it, inserted] = slots_.try_emplace(key, entries_.size());
  if (inserted) {
    entries_.push_back({block, index, values_.size()});
    values_.resize(values_.size() + dim_, 0.0);
  }
  return {values_.data() + entries_[it->second].offset, dim_};
}

void SparseGradient::add(Block block, std::uint32_t index, std::span<const double> values,
                         double scale) {
  auto dst = row(block, index);
  for (std::size_t i = 0; i < dim_; ++i) dst[i] += scale * values[i];
}

void SparseGradient::clear() {
  entries_.clear();
  values_.clear();
  slots_.clear();
}

double pair_loss(const EmbeddingModel& m, const ModelConfig& c, const Triple& pos,
                 const Triple& neg) {
  const double sp = score(m, pos.head, pos.relation, pos.tail);
  const double sn = score(m, neg.head, neg.relation, neg.tail);
  if (c.uses_margin_loss()) return std::max(0.0, c.margin - sp + sn);
  return softplus(-sp) + softplus(sn) + c.lambda * (regularizer(m, pos) + regularizer(m, neg));
}

double accumulate_pair_gradient(const EmbeddingModel& m, const ModelConfig& c, const Triple& pos,
                                const Triple& neg, SparseGradient& grad) {
  const double sp = score(m, pos.head, pos.relation, pos.tail);
  const double sn = score(m, neg.head, neg.relation, neg.tail);
  if (c.uses_margin_loss()) {
    const double loss = c.margin - sp + sn;
    if (loss <= 0) return 0.0;
    add_score_gradient(m, pos, -1.0, grad);
    add_score_gradient(m, neg, 1.0, grad);
    return loss;
  }
  add_score_gradient(m, pos, -sigmoid(-sp), grad);
  add_score_gradient(m, neg, sigmoid(sn), grad);
  if (c.lambda > 0) {
    add_regularizer_gradient(m, pos, c.lambda, grad);
    add_regularizer_gradient(m, neg, c.lambda, grad);
  }
  return softplus(-sp) + softplus(sn) + c.lambda * (regularizer(m, pos) + regularizer(m, neg));
}

std::string config_to_json(const ModelConfig& c) {
  nlohmann::ordered_json j;
  j["kind"] = std::string(to_string(c.kind));
  j["dim"] = c.dim;
  j["epochs"] = c.epochs;
  j["nr_batches"] = c.nr_batches;
  j["alpha"] = c.alpha;
  j["margin"] = c.margin;
  j["lambda"] = c.lambda;
  j["bern"] = c.bern ? 1 : 0;
  j["entity_negative_rate"] = c.entity_negative_rate;
  j["relation_negative_rate"] = c.relation_negative_rate;
  j["optimizer"] = c.optimizer == Optimizer::SGD ? "SGD" : "Adagrad";
  j["norm"] = c.norm == NormKind::L1 ? "l1" : "l2";
  j["seed"] = c.seed;
  j["workers"] = c.workers;
  return j.dump(2);
}

ModelConfig config_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    ModelConfig c = ModelConfig::defaults(parse_model_kind(j.at("kind").get<std::string>()));
    c.dim = j.value("dim", c.dim);
    c.epochs = j.value("epochs", c.epochs);
    c.nr_batches = j.value("nr_batches", c.nr_batches);
    c.alpha = j.value("alpha", c.alpha);
    c.margin = j.value("margin", c.margin);
    c.lambda = j.value("lambda", c.lambda);
    c.bern = j.value("bern", c.bern ? 1 : 0) != 0;
    c.entity_negative_rate = j.value("entity_negative_rate", c.entity_negative_rate);
    c.relation_negative_rate = j.value("relation_negative_rate", c.relation_negative_rate);
    if (j.contains("optimizer")) {
      const auto o = j["optimizer"].get<std::string>();
      if (o != "SGD" && o != "Adagrad") throw ConfigError("unknown optimizer '" + o + "'");
      c.optimizer = o == "SGD" ? Optimizer::SGD : Optimizer::Adagrad;
    }
    if (j.contains("norm")) {
      const auto n = j["norm"].get<std::string>();
      if (n != "l1" && n != "l2") throw ConfigError("unknown norm '" + n + "'");
      c.norm = n == "l1" ? NormKind::L1 : NormKind::L2;
    }
    c.seed = j.value("seed", c.seed);
    c.workers = j.value("workers", c.workers);
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid model config: ") + e.what());
  }
}

void round_to_float(EmbeddingModel& m) {
  for (Matrix* block : {&m.entity, &m.relation, &m.entity_aux, &m.relation_aux}) {
    for (auto& v : block->data) v = static_cast<double>(static_cast<float>(v));
  }
}

void save_model(const EmbeddingModel& m, const ModelConfig& config,
                const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  {
    auto out = detail::open_output(path);
    detail::write_header(out, {static_cast<std::uint32_t>(m.kind), static_cast<std::uint32_t>(m.dim),
                               m.entity_count(), m.relation_count()});
    for (const Matrix* block : {&m.entity, &m.relation, &m.entity_aux, &m.relation_aux}) {
      detail::write_floats(out, block->data);
    }
    detail::check_written(out, path);
  }
  auto sidecar = path;
  sidecar += ".json";
  auto out = detail::open_output(sidecar);
  out << config_to_json(config) << '\n';
  detail::check_written(out, sidecar);
}

LoadedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const auto h = detail::read_header(in, path);
  if (h.kind > static_cast<std::uint32_t>(ModelKind::ComplEx)) {
    throw ParseError(path.string(), 0, "not a link-prediction model file");
  }
  auto sidecar = path;
  sidecar += ".json";
  auto sin = detail::open_input(sidecar);
  std::string text((std::istreambuf_iterator<char>(sin)), std::istreambuf_iterator<char>());

  LoadedModel out;
  out.config = config_from_json(text);
  auto& m = out.model;
  m.kind = static_cast<ModelKind>(h.kind);
  m.dim = h.dim;
  m.norm = out.config.norm;
  if (out.config.kind != m.kind || out.config.dim != m.dim) {
    throw ConsistencyError("model sidecar disagrees with " + path.string());
  }
  m.entity = Matrix(h.entities, h.dim);
  m.relation = Matrix(h.relations, h.dim);
  if (has_entity_aux(m.kind)) m.entity_aux = Matrix(h.entities, h.dim);
  if (has_relation_aux(m.kind)) m.relation_aux = Matrix(h.relations, h.dim);
  for (Matrix* block : {&m.entity, &m.relation, &m.entity_aux, &m.relation_aux}) {
    detail::read_floats(in, block->data, path);
  }
  return out;
}

}  // namespace gdakg
