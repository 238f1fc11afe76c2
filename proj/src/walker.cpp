#include "gdakg/walker.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <map>
#include <set>
#include <sstream>

#include "binary_io.hpp"
#include "gdakg/error.hpp"
#include "gdakg/parallel.hpp"
#include "gdakg/rng.hpp"
#include "text.hpp"

namespace gdakg {
namespace {

using Walk = std::vector<std::uint32_t>;

void walks_from(const KnowledgeGraph& kg, const WalkCorpus& corpus, EntityId seed,
                const WalkConfig& config, std::vector<Walk>& out) {
  Rng rng(derive_seed(config.seed, seed));
  std::set<Walk> seen;
  for (int w = 0; w < config.walks_per_entity; ++w) {
    Walk walk{corpus.entity_token(seed)};
    EntityId current = seed;
    for (int hop = 0; hop < config.max_walk_length; ++hop) {
      const auto edges = kg.out_edges(current);
      if (edges.empty()) break;
      const auto& edge = edges[rng.index(edges.size())];
      if (config.emit_relations) walk.push_back(corpus.relation_token(edge.relation));
      walk.push_back(corpus.entity_token(edge.tail));
      current = edge.tail;
    }
    if (config.deduplicate && !seen.insert(walk).second) continue;
    out.push_back(std::move(walk));
  }
}

// Weisfeiler-Lehman relabeling over out-neighbourhoods. labels[i][e] is the
// compact label of entity e after i + 1 iterations.
std::vector<std::vector<std::uint32_t>> wl_relabel(const KnowledgeGraph& kg, int iterations,
                                                   WalkCorpus& corpus) {
  const std::size_t n = kg.entity_count();
  std::vector<std::uint32_t> previous(n);
  for (EntityId e = 0; e < n; ++e) previous[e] = corpus.entity_token(e);
  std::vector<std::vector<std::uint32_t>> result;
  for (int it = 1; it <= iterations; ++it) {
    std::map<std::vector<std::uint32_t>, std::uint32_t> signature_ids;
    std::vector<std::uint32_t> next(n);
    for (EntityId e = 0; e < n; ++e) {
      std::vector<std::pair<std::uint32_t, std::uint32_t>> neigh;
      for (const auto& edge : kg.out_edges(e)) neigh.emplace_back(edge.relation, previous[edge.tail]);
      std::sort(neigh.begin(), neigh.end());
      std::vector<std::uint32_t> sig{previous[e]};
      for (const auto& [r, l] : neigh) {
        sig.push_back(r);
        sig.push_back(l);
      }
      auto [pos, inserted] = signature_ids.try_emplace(
          std::move(sig), static_cast<std::uint32_t>(corpus.token_count()));
      if (inserted) {
        corpus.wl_labels.push_back("wl" + std::to_string(it) + "_" +
                                   std::to_string(signature_ids.size() - 1));
      }
      next[e] = pos->second;
    }
    result.push_back(next);
    previous = std::move(next);
  }
  return result;
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

void WalkConfig::validate() const {
  if (max_walk_length < 1 || walks_per_entity < 1) {
    throw ConfigError("walk length and walks per entity must be positive");
  }
  if (dim == 0 || window < 1 || negative < 0 || epochs < 1 || min_count < 1) {
    throw ConfigError("invalid skip-gram parameters");
  }
  if (!(alpha > 0) || min_alpha < 0 || sample < 0 || wl_iterations < 0 || workers < 1) {
    throw ConfigError("invalid skip-gram schedule");
  }
}

std::string walk_config_to_json(const WalkConfig& c) {
  nlohmann::ordered_json j;
  j["kind"] = "Walk";
  j["max_walk_length"] = c.max_walk_length;
  j["walks_per_entity"] = c.walks_per_entity;
  j["deduplicate"] = c.deduplicate;
  j["emit_relations"] = c.emit_relations;
  j["wl_iterations"] = c.wl_iterations;
  j["dim"] = c.dim;
  j["window"] = c.window;
  j["negative"] = c.negative;
  j["epochs"] = c.epochs;
  j["min_count"] = c.min_count;
  j["sample"] = c.sample;
  j["alpha"] = c.alpha;
  j["min_alpha"] = c.min_alpha;
  j["ns_exponent"] = c.ns_exponent;
  j["shrink_windows"] = c.shrink_windows;
  j["seed"] = c.seed;
  j["workers"] = c.workers;
  return j.dump(2);
}

WalkConfig walk_config_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    WalkConfig c;
    c.max_walk_length = j.value("max_walk_length", c.max_walk_length);
    c.walks_per_entity = j.value("walks_per_entity", c.walks_per_entity);
    c.deduplicate = j.value("deduplicate", c.deduplicate);
    c.emit_relations = j.value("emit_relations", c.emit_relations);
    c.wl_iterations = j.value("wl_iterations", c.wl_iterations);
    c.dim = j.value("dim", c.dim);
    c.window = j.value("window", c.window);
    c.negative = j.value("negative", c.negative);
    c.epochs = j.value("epochs", c.epochs);
    c.min_count = j.value("min_count", c.min_count);
    c.sample = j.value("sample", c.sample);
    c.alpha = j.value("alpha", c.alpha);
    c.min_alpha = j.value("min_alpha", c.min_alpha);
    c.ns_exponent = j.value("ns_exponent", c.ns_exponent);
    c.shrink_windows = j.value("shrink_windows", c.shrink_windows);
    c.seed = j.value("seed", c.seed);
    c.workers = j.value("workers", c.workers);
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid walk config: ") + e.what());
  }
}

std::string WalkCorpus::token_name(std::uint32_t token, const Catalog& catalog) const {
  if (token < entity_count) return catalog.entities().name_of(token);
  if (token < entity_count + relation_count) {
    return catalog.relations().name_of(static_cast<RelationId>(token - entity_count));
  }
  return wl_labels.at(token - entity_count - relation_count);
}

WalkCorpus generate_walks(const KnowledgeGraph& kg, std::span<const EntityId> seeds,
                          const WalkConfig& config) {
  config.validate();
  WalkCorpus corpus;
  corpus.entity_count = kg.entity_count();
  corpus.relation_count = kg.relation_count();
  for (EntityId s : seeds) {
    if (s >= kg.entity_count()) throw ConsistencyError("walk seed outside the knowledge graph");
  }

  std::vector<std::vector<Walk>> per_seed(seeds.size());
  parallel_shards(seeds.size(), config.workers, [&](std::size_t begin, std::size_t end, int) {
    for (std::size_t i = begin; i < end; ++i) walks_from(kg, corpus, seeds[i], config, per_seed[i]);
  });

  std::vector<std::vector<std::uint32_t>> wl;
  if (config.wl_iterations > 0) wl = wl_relabel(kg, config.wl_iterations, corpus);
  const std::size_t stride = config.emit_relations ? 2 : 1;
  for (auto& walks : per_seed) {
    for (auto& walk : walks) {
      for (const auto& labels : wl) {
        Walk relabeled = walk;
        for (std::size_t k = stride; k < relabeled.size(); k += stride) {
          relabeled[k] = labels[relabeled[k]];
        }
        corpus.walks.push_back(std::move(relabeled));
      }
      corpus.walks.push_back(std::move(walk));
    }
  }
  return corpus;
}

EntityEmbeddingTable::EntityEmbeddingTable(std::size_t dim, std::vector<EntityId> ids,
                                           Matrix vectors)
    : dim_(dim), ids_(std::move(ids)), vectors_(std::move(vectors)) {
  if (vectors_.rows != ids_.size() || (vectors_.rows > 0 && vectors_.cols != dim_)) {
    throw ConsistencyError("embedding table shape mismatch");
  }
  for (std::size_t i = 0; i < ids_.size(); ++i) rows_.emplace(ids_[i], i);
}

std::span<const double> EntityEmbeddingTable::vector(EntityId e) const {
  auto it = rows_.find(e);
  if (it == rows_.end()) {
    throw ConsistencyError("no embedding for entity " + std::to_string(e));
  }
  return vectors_.row(it->second);
}

EntityEmbeddingTable train_skipgram(const WalkCorpus& corpus, std::span<const EntityId> seeds,
                                    const WalkConfig& config) {
  config.validate();
  if (corpus.walks.empty()) throw ConfigError("cannot train skip-gram on an empty corpus");

  // Vocabulary with min_count, seeds exempt.
  std::vector<std::uint64_t> counts(corpus.token_count(), 0);
  std::uint64_t raw_words = 0;
  for (const auto& walk : corpus.walks) {
    for (auto tok : walk) ++counts[tok];
    raw_words += walk.size();
  }
  std::vector<bool> is_seed(corpus.token_count(), false);
  for (EntityId s : seeds) is_seed.at(corpus.entity_token(s)) = true;

  std::vector<std::int64_t> vocab_of(corpus.token_count(), -1);
  std::vector<std::uint64_t> vocab_counts;
  for (std::uint32_t tok = 0; tok < counts.size(); ++tok) {
    if (counts[tok] == 0) continue;
    if (counts[tok] >= static_cast<std::uint64_t>(config.min_count) || is_seed[tok]) {
      vocab_of[tok] = static_cast<std::int64_t>(vocab_counts.size());
      vocab_counts.push_back(counts[tok]);
    }
  }

  std::ostringstream missing;
  std::size_t n_missing = 0;
  for (EntityId s : seeds) {
    if (vocab_of[corpus.entity_token(s)] < 0) {
      if (n_missing++ < 10) missing << (n_missing > 1 ? ", " : "") << s;
    }
  }
  if (n_missing > 0) {
    throw ConsistencyError(std::to_string(n_missing) + " seed entit(y/ies) absent from the walk "
                           "corpus: " + missing.str());
  }

  const std::size_t vocab_size = vocab_counts.size();
  std::uint64_t retained = 0;
  for (auto c : vocab_counts) retained += c;

  // Down-sampling keep probabilities (word2vec/gensim formula).
  std::vector<double> keep(vocab_size, 1.0);
  if (config.sample > 0) {
    const double threshold = config.sample * static_cast<double>(retained);
    for (std::size_t v = 0; v < vocab_size; ++v) {
      const double c = static_cast<double>(vocab_counts[v]);
      keep[v] = std::min(1.0, (std::sqrt(c / threshold) + 1.0) * threshold / c);
    }
  }

  // Cumulative noise distribution, count^ns_exponent.
  std::vector<double> noise_cdf(vocab_size);
  double acc = 0.0;
  for (std::size_t v = 0; v < vocab_size; ++v) {
    acc += std::pow(static_cast<double>(vocab_counts[v]), config.ns_exponent);
    noise_cdf[v] = acc;
  }

  const std::size_t dim = config.dim;
  Matrix syn0(vocab_size, dim), syn1(vocab_size, dim);
  {
    Rng init(derive_seed(config.seed, 0x5eed));
    for (auto& v : syn0.data) v = (init.uniform() - 0.5) / static_cast<double>(dim);
  }

  const double total_words = static_cast<double>(raw_words) * config.epochs;
  auto train_sentences = [&](std::size_t begin, std::size_t end, int worker, int epoch,
                             std::uint64_t words_before) {
    Rng rng(derive_seed(config.seed, 1000003ULL * static_cast<std::uint64_t>(epoch + 1) +
                                         static_cast<std::uint64_t>(worker)));
    std::vector<double> neu1e(dim);
    std::vector<std::uint32_t> sentence;
    std::uint64_t processed = words_before;
    for (std::size_t s = begin; s < end; ++s) {
      const auto& walk = corpus.walks[s];
      const double progress = static_cast<double>(processed) / total_words;
      const double alpha =
          std::max(config.min_alpha, config.alpha - (config.alpha - config.min_alpha) * progress);
      processed += walk.size();
      sentence.clear();
      for (auto tok : walk) {
        const auto v = vocab_of[tok];
        if (v < 0) continue;
        if (keep[v] < 1.0 && keep[v] < rng.uniform()) continue;
        sentence.push_back(static_cast<std::uint32_t>(v));
      }
      for (std::size_t pos = 0; pos < sentence.size(); ++pos) {
        const int reduced = config.shrink_windows ? static_cast<int>(rng.index(config.window)) : 0;
        const int span = config.window - reduced;
        const std::size_t lo = pos >= static_cast<std::size_t>(span) ? pos - span : 0;
        const std::size_t hi = std::min(sentence.size() - 1, pos + span);
        const std::uint32_t center = sentence[pos];
        for (std::size_t c = lo; c <= hi; ++c) {
          if (c == pos) continue;
          auto input = syn0.row(sentence[c]);
          std::fill(neu1e.begin(), neu1e.end(), 0.0);
          for (int d = 0; d <= config.negative; ++d) {
            std::uint32_t target;
            double label;
            if (d == 0) {
              target = center;
              label = 1.0;
            } else {
              const double u = rng.uniform() * acc;
              target = static_cast<std::uint32_t>(
                  std::upper_bound(noise_cdf.begin(), noise_cdf.end(), u) - noise_cdf.begin());
              if (target >= vocab_size) target = static_cast<std::uint32_t>(vocab_size - 1);
              if (target == center) continue;
              label = 0.0;
            }
            auto out = syn1.row(target);
            double f = 0.0;
            for (std::size_t k = 0; k < dim; ++k) f += input[k] * out[k];
            const double g = (label - sigmoid(f)) * alpha;
            for (std::size_t k = 0; k < dim; ++k) {
              neu1e[k] += g * out[k];
              out[k] += g * input[k];
            }
          }
          for (std::size_t k = 0; k < dim; ++k) input[k] += neu1e[k];
        }
      }
    }
  };

  const std::size_t n_sentences = corpus.walks.size();
  // Word offsets of each sentence, for the learning-rate schedule of shards.
  std::vector<std::uint64_t> offsets(n_sentences + 1, 0);
  for (std::size_t s = 0; s < n_sentences; ++s) offsets[s + 1] = offsets[s] + corpus.walks[s].size();
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const std::uint64_t epoch_base = static_cast<std::uint64_t>(epoch) * raw_words;
    parallel_shards(n_sentences, config.workers, [&](std::size_t begin, std::size_t end, int w) {
      train_sentences(begin, end, w, epoch, epoch_base + offsets[begin]);
    });
  }

  std::vector<EntityId> ids(seeds.begin(), seeds.end());
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  Matrix vectors(ids.size(), dim);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto src = syn0.row(static_cast<std::size_t>(vocab_of[corpus.entity_token(ids[i])]));
    std::copy(src.begin(), src.end(), vectors.row(i).begin());
  }
  return EntityEmbeddingTable(dim, std::move(ids), std::move(vectors));
}

void save_corpus(const WalkCorpus& corpus, const Catalog& catalog,
                 const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto out = detail::open_output(path);
  for (const auto& walk : corpus.walks) {
    for (std::size_t i = 0; i < walk.size(); ++i) {
      out << (i ? " " : "") << corpus.token_name(walk[i], catalog);
    }
    out << '\n';
  }
  detail::check_written(out, path);
}

void save_table(const EntityEmbeddingTable& table, const WalkConfig& config,
                const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  {
    auto out = detail::open_output(path);
    detail::write_header(out, {static_cast<std::uint32_t>(ModelKind::Walk),
                               static_cast<std::uint32_t>(table.dim()), table.size(), 0});
    for (EntityId id : table.ids()) detail::write_pod(out, static_cast<std::uint32_t>(id));
    detail::write_floats(out, table.matrix().data);
    detail::check_written(out, path);
  }
  auto sidecar = path;
  sidecar += ".json";
  auto out = detail::open_output(sidecar);
  out << walk_config_to_json(config) << '\n';
  detail::check_written(out, sidecar);
}

EntityEmbeddingTable load_table(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const auto h = detail::read_header(in, path);
  if (h.kind != static_cast<std::uint32_t>(ModelKind::Walk)) {
    throw ParseError(path.string(), 0, "not a walk embedding table");
  }
  std::vector<EntityId> ids(h.entities);
  for (auto& id : ids) id = detail::read_pod<std::uint32_t>(in, path);
  Matrix vectors(h.entities, h.dim);
  detail::read_floats(in, vectors.data, path);
  return EntityEmbeddingTable(h.dim, std::move(ids), std::move(vectors));
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa == 0 || bb == 0) return 0.0;
  return ab / std::sqrt(aa * bb);
}

}  // namespace gdakg
