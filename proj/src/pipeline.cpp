#include "gdakg/pipeline.hpp"

#include <fcntl.h>
#include <signal.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <map>
#include <set>
#include <sstream>
#include <unordered_set>

#include "gdakg/classify.hpp"
#include "gdakg/link_prediction.hpp"
#include "gdakg/parallel.hpp"
#include "gdakg/walker.hpp"
#include "text.hpp"

namespace gdakg {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::string read_text(const fs::path& path) {
  auto in = detail::open_input(path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_text(const fs::path& path, std::string_view text) {
  auto out = detail::open_output(path);
  out << text;
  detail::check_written(out, path);
}

void log(const std::string& line) { std::cerr << "[gdakg] " << line << '\n'; }

std::string hash_parts(std::initializer_list<std::string_view> parts) {
  std::string joined;
  for (auto p : parts) {
    joined += p;
    joined += '\x1f';
  }
  return sha256_hex(joined);
}

std::string optional_digest(const std::optional<fs::path>& p) {
  return p ? file_digest(*p) : std::string("none");
}

const OntologySource& ontology(const ExperimentConfig& c, const std::string& tag) {
  for (const auto& o : c.ontologies) {
    if (o.tag == tag) return o;
  }
  throw ConfigError("unknown ontology tag '" + tag + "'");
}

const LinkSource& link(const ExperimentConfig& c, const std::string& tag) {
  for (const auto& l : c.links) {
    if (l.tag == tag) return l;
  }
  throw ConfigError("unknown link tag '" + tag + "'");
}

fs::path model_file(const fs::path& out, const std::string& variant, ModelKind kind) {
  return out / "lp" / variant_dir_name(variant) / std::string(to_string(kind)) / "model.bin";
}

fs::path table_file(const fs::path& out, const std::string& variant) {
  return out / "walks" / variant_dir_name(variant) / "table.bin";
}

std::vector<EntityId> pair_entities(const SplitDataset& split) {
  std::set<EntityId> ids;
  for (const auto* part : {&split.train_pos, &split.train_neg, &split.test_pos, &split.test_neg}) {
    for (const auto& p : *part) {
      ids.insert(p.gene);
      ids.insert(p.disease);
    }
  }
  return {ids.begin(), ids.end()};
}

std::vector<int> labels_of(std::span<const GdaPair> pairs) {
  std::vector<int> y;
  y.reserve(pairs.size());
  for (const auto& p : pairs) y.push_back(p.positive() ? 1 : 0);
  return y;
}

// Positive test partners per query entity, and the test entities eligible as
// targets, for one direction.
struct TestQueries {
  std::map<EntityId, std::vector<EntityId>> truths;
  std::vector<EntityId> targets;
};

TestQueries test_queries(const SplitDataset& split, QueryDirection dir) {
  TestQueries q;
  const bool gene_query = dir == QueryDirection::GeneToDisease;
  std::set<EntityId> targets;
  for (const auto* part : {&split.test_pos, &split.test_neg}) {
    for (const auto& p : *part) targets.insert(gene_query ? p.disease : p.gene);
  }
  for (const auto& p : split.test_pos) {
    q.truths[gene_query ? p.gene : p.disease].push_back(gene_query ? p.disease : p.gene);
  }
  for (auto& [_, t] : q.truths) std::sort(t.begin(), t.end());
  q.targets.assign(targets.begin(), targets.end());
  return q;
}

UnifiedRanking lp_ranking(const EmbeddingModel& model, const Catalog& catalog, EntityId query,
                          QueryDirection dir, const TestQueries& q,
                          const std::unordered_set<EntityId>& target_set, const std::string& method,
                          std::optional<std::size_t> top_k) {
  const auto ranking =
      rank_candidates(model, query, catalog.association(), lp_direction(dir), q.targets);
  return unify_lp(ranking, dir, target_set, method, top_k);
}

}  // namespace

std::string variant_dir_name(std::string_view tag) {
  std::string out;
  for (char c : tag) {
    if (c == '*') {
      out += "star";
    } else if (c == '/' || c == '\\' || c == ' ') {
      out += '_';
    } else {
      out += c;
    }
  }
  return out;
}

std::string method_name(AggregationOp op, const ClassifierSpec& spec) {
  return std::string(to_string(op)) + "+" + std::string(to_string(spec.kind));
}

VariantGraphs assemble_variant(const ExperimentConfig& config, const VariantRecipe& recipe,
                               const fs::path& split_dir) {
  VariantGraphs g;
  g.catalog = std::make_shared<Catalog>();
  Catalog& cat = *g.catalog;
  g.split = load_split(split_dir, cat);

  KgIngredients parts;
  for (const auto& part : recipe.ontologies) {
    const auto& o = ontology(config, part.tag);
    auto triples = load_triples(o.triples, cat);
    parts.ontology.insert(parts.ontology.end(), triples.begin(), triples.end());
    if (o.gene_annotations && !part.diseases_only) {
      parts.annotations.push_back(load_annotations(*o.gene_annotations, EntityKind::Gene, o.name, cat));
    }
    if (o.disease_annotations) {
      parts.annotations.push_back(
          load_annotations(*o.disease_annotations, EntityKind::Disease, o.name, cat));
    }
  }
  for (const auto& tag : recipe.links) {
    const auto& l = link(config, tag);
    auto triples = load_links(l.file, l.relation, cat);
    parts.extra_links.insert(parts.extra_links.end(), triples.begin(), triples.end());
  }
  g.classification.emplace(assemble_kg(g.catalog, parts, recipe.tag));
  parts.training_edges = g.split.train_pos;
  g.link_prediction.emplace(assemble_kg(g.catalog, parts, recipe.tag));
  return g;
}

std::vector<std::string> validate(const ExperimentConfig& c) {
  std::vector<std::string> d;
  auto need = [&](const fs::path& p, const std::string& what) {
    if (!fs::is_regular_file(p)) d.push_back(what + ": file not found: " + p.string());
  };
  need(c.pairs, "dataset.pairs");
  if (c.negatives) need(*c.negatives, "dataset.negatives");
  for (const auto& o : c.ontologies) {
    need(o.triples, "ontology " + o.tag + " triples");
    if (o.gene_annotations) need(*o.gene_annotations, "ontology " + o.tag + " gene annotations");
    if (o.disease_annotations) {
      need(*o.disease_annotations, "ontology " + o.tag + " disease annotations");
    }
  }
  for (const auto& l : c.links) need(l.file, "link " + l.tag);

  if (fs::is_regular_file(c.pairs) && !c.negatives) {
    try {
      Catalog cat;
      const auto pairs = load_pairs(c.pairs, cat);
      std::vector<GdaPair> pos;
      std::size_t neg = 0;
      for (const auto& p : pairs) {
        if (p.positive()) {
          pos.push_back(p);
        } else {
          ++neg;
        }
      }
      if (neg == 0) {
        const std::size_t want = c.negative_count.value_or(pos.size());
        const std::size_t most = max_negative_count(pos);
        if (want > most) {
          d.push_back("dataset: " + std::to_string(want) +
                      " negatives requested but at most " + std::to_string(most) +
                      " are feasible");
        }
      }
    } catch (const Error& e) {
      d.push_back(std::string("dataset.pairs: ") + e.what());
    }
  }

  for (const auto& v : c.variants) {
    for (const auto& m : c.models) {
      auto sidecar = model_file(c.output, v.tag, m.kind);
      sidecar += ".json";
      if (!fs::exists(sidecar)) continue;
      try {
        const auto cached = config_from_json(read_text(sidecar));
        if (cached.dim != m.dim) {
          d.push_back("cached " + std::string(to_string(m.kind)) + " model for " + v.tag +
                      " has dim " + std::to_string(cached.dim) + ", config says " +
                      std::to_string(m.dim) + ": " + sidecar.string());
        }
      } catch (const Error& e) {
        d.push_back("unreadable cached model " + sidecar.string() + ": " + e.what());
      }
    }
    auto sidecar = table_file(c.output, v.tag);
    sidecar += ".json";
    if (fs::exists(sidecar)) {
      try {
        const auto cached = walk_config_from_json(read_text(sidecar));
        if (cached.dim != c.walks.dim) {
          d.push_back("cached walk embeddings for " + v.tag + " have dim " +
                      std::to_string(cached.dim) + ", config says " +
                      std::to_string(c.walks.dim) + ": " + sidecar.string());
        }
      } catch (const Error& e) {
        d.push_back("unreadable cached walk embeddings " + sidecar.string() + ": " + e.what());
      }
    }
  }
  return d;
}

struct Pipeline::Lock {
  fs::path path;
  int fd = -1;

  explicit Lock(const fs::path& dir) : path(dir / ".lock") {
    for (int attempt = 0; attempt < 2; ++attempt) {
      fd = ::open(path.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
      if (fd >= 0) {
        const auto pid = std::to_string(::getpid()) + "\n";
        if (::write(fd, pid.data(), pid.size()) < 0) {
          // The lock still holds without the pid; staleness checks then fail safe.
        }
        return;
      }
      if (errno != EEXIST) {
        throw IoError("cannot create lock " + path.string() + ": " + std::strerror(errno));
      }
      long holder = 0;
      {
        std::ifstream in(path);
        in >> holder;
      }
      if (holder > 0 && (::kill(static_cast<pid_t>(holder), 0) == 0 || errno == EPERM)) {
        throw Error("output directory " + dir.string() + " is locked by process " +
                    std::to_string(holder));
      }
      fs::remove(path);
    }
    throw Error("cannot lock output directory " + dir.string());
  }

  ~Lock() {
    ::close(fd);
    std::error_code ec;
    fs::remove(path, ec);
  }
};

Pipeline::Pipeline(ExperimentConfig config) : config_(std::move(config)) {
  digest_ = sha256_hex(canonical_json(config_));
  fs::create_directories(config_.output);
  lock_ = std::make_unique<Lock>(config_.output);
}

Pipeline::~Pipeline() = default;

fs::path Pipeline::split_dir() const { return config_.output / "split"; }

fs::path Pipeline::kg_dir(const std::string& variant) const {
  return config_.output / "kg" / variant_dir_name(variant);
}

fs::path Pipeline::model_path(const std::string& variant, ModelKind kind) const {
  return model_file(config_.output, variant, kind);
}

fs::path Pipeline::table_path(const std::string& variant) const {
  return table_file(config_.output, variant);
}

fs::path Pipeline::predictions_path(const std::string& variant, const std::string& method) const {
  return config_.output / "clf" / variant_dir_name(variant) / method / "predictions.tsv";
}

template <class F>
void Pipeline::stage(const std::string& name, const fs::path& dir, const std::string& digest,
                     F&& body) {
  const auto stamp = dir / ".digest";
  const auto marker = dir / "INCOMPLETE";
  if (fs::exists(stamp) && !fs::exists(marker) && read_text(stamp) == digest) {
    log(name + ": up to date");
    return;
  }
  log(name + ": running");
  const auto start = std::chrono::steady_clock::now();
  try {
    fs::remove_all(dir);
    fs::create_directories(dir);
    write_text(marker, digest + "\n");
    body(dir);
    write_text(stamp, digest);
    fs::remove(marker);
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, digest_, e.what());
  }
  const std::chrono::duration<double> took = std::chrono::steady_clock::now() - start;
  timings_.emplace_back(name, took.count());
}

std::string Pipeline::split_digest() const {
  const auto& c = config_;
  return hash_parts({"split", file_digest(c.pairs), optional_digest(c.negatives),
                     c.negative_count ? std::to_string(*c.negative_count) : "auto",
                     std::to_string(c.fraction), std::to_string(c.seed)});
}

std::string Pipeline::kg_digest(const VariantRecipe& recipe) const {
  std::string inputs;
  for (const auto& part : recipe.ontologies) {
    const auto& o = ontology(config_, part.tag);
    inputs += o.tag + (part.diseases_only ? "*" : "") + o.name + file_digest(o.triples) +
              (part.diseases_only ? "skip" : optional_digest(o.gene_annotations)) +
              optional_digest(o.disease_annotations);
  }
  for (const auto& tag : recipe.links) {
    const auto& l = link(config_, tag);
    inputs += l.tag + l.relation + file_digest(l.file);
  }
  return hash_parts({"kg", split_digest(), recipe.tag, inputs});
}

std::string Pipeline::model_digest(const VariantRecipe& recipe, const ModelConfig& m) const {
  return hash_parts({"lp", kg_digest(recipe), config_to_json(config_.model_config(m))});
}

std::string Pipeline::walks_digest(const VariantRecipe& recipe) const {
  return hash_parts({"walks", kg_digest(recipe), walk_config_to_json(config_.walk_config())});
}

std::string Pipeline::clf_digest(const VariantRecipe& recipe, AggregationOp op,
                                 const ClassifierSpec& spec) const {
  return hash_parts({"clf", walks_digest(recipe), to_string(op),
                     classifier_spec_to_json(config_.classifier_spec(spec))});
}

void Pipeline::split() {
  stage("split", split_dir(), split_digest(), [&](const fs::path& dir) {
    Catalog cat;
    auto pairs = load_pairs(config_.pairs, cat);
    if (config_.negatives) {
      auto neg = load_pairs(*config_.negatives, cat);
      for (auto& p : neg) p.label = Label::Negative;
      pairs.insert(pairs.end(), neg.begin(), neg.end());
    }
    std::vector<GdaPair> positives;
    bool have_negatives = false;
    for (const auto& p : pairs) {
      if (p.positive()) {
        positives.push_back(p);
      } else {
        have_negatives = true;
      }
    }
    if (!have_negatives) {
      const auto count = config_.negative_count.value_or(positives.size());
      const auto neg = generate_negatives(positives, count, config_.seed);
      save_pairs(dir / "negatives.tsv", neg, cat);
      pairs.insert(pairs.end(), neg.begin(), neg.end());
    }
    const auto split = split_pairs(pairs, config_.fraction, config_.seed);
    save_split(split, cat, dir);
  });
}

void Pipeline::build_kg(const std::string& variant) {
  const auto& recipe = config_.variant(variant);
  split();
  stage("build-kg[" + variant + "]", kg_dir(variant), kg_digest(recipe), [&](const fs::path& dir) {
    const auto g = assemble_variant(config_, recipe, split_dir());
    for (const auto* kg : {&*g.link_prediction, &*g.classification}) {
      const bool lp = kg == &*g.link_prediction;
      const auto sub = dir / (lp ? "lp" : "clf");
      export_numeric(*kg, g.split, sub);
      const auto s = kg->stats();
      ordered_json j;
      j["variant"] = variant;
      j["triples"] = s.triples;
      j["classes"] = s.classes;
      j["annotated_genes"] = s.annotated_genes;
      j["annotated_diseases"] = s.annotated_diseases;
      j["logical_definitions"] = s.logical_definitions;
      j["ontology_mappings"] = s.ontology_mappings;
      j["associations"] = s.associations;
      j["per_relation"] = s.per_relation;
      write_text(sub / "stats.json", j.dump(2) + "\n");
    }
  });
}

void Pipeline::train_lp(const std::string& variant) {
  const auto& recipe = config_.variant(variant);
  build_kg(variant);
  std::optional<VariantGraphs> graphs;
  for (const auto& m : config_.models) {
    const auto mc = config_.model_config(m);
    const auto name = "train-lp[" + variant + "/" + std::string(to_string(m.kind)) + "]";
    stage(name, model_path(variant, m.kind).parent_path(), model_digest(recipe, m),
          [&](const fs::path& dir) {
            if (!graphs) graphs = assemble_variant(config_, recipe, split_dir());
            const auto result = train(*graphs->link_prediction, mc);
            save_model(result.model, mc, dir / "model.bin");
            ordered_json j;
            j["epoch_loss"] = result.epoch_loss;
            write_text(dir / "loss.json", j.dump(2) + "\n");
          });
  }
}

void Pipeline::train_walks(const std::string& variant) {
  const auto& recipe = config_.variant(variant);
  build_kg(variant);
  const auto wc = config_.walk_config();
  stage("train-walks[" + variant + "]", table_path(variant).parent_path(), walks_digest(recipe),
        [&](const fs::path& dir) {
          const auto g = assemble_variant(config_, recipe, split_dir());
          const auto seeds = pair_entities(g.split);
          const auto corpus = generate_walks(*g.classification, seeds, wc);
          const auto table = train_skipgram(corpus, seeds, wc);
          save_table(table, wc, dir / "table.bin");
        });
}

void Pipeline::classify(const std::string& variant) {
  const auto& recipe = config_.variant(variant);
  train_walks(variant);
  std::optional<VariantGraphs> graphs;
  std::optional<EntityEmbeddingTable> table;
  for (auto op : config_.aggregations) {
    for (const auto& s : config_.classifiers) {
      const auto spec = config_.classifier_spec(s);
      const auto method = method_name(op, spec);
      stage("classify[" + variant + "/" + method + "]",
            predictions_path(variant, method).parent_path(), clf_digest(recipe, op, s),
            [&](const fs::path& dir) {
              if (!graphs) graphs = assemble_variant(config_, recipe, split_dir());
              if (!table) table = load_table(table_path(variant));
              const auto& cat = *graphs->catalog;
              const auto train = graphs->split.train();
              const auto test = graphs->split.test();
              const auto clf = fit(spec, build_features(op, *table, train, cat), labels_of(train));
              const auto rows = predict_pairs(*clf, build_features(op, *table, test, cat), test);
              save_predictions(dir / "predictions.tsv", rows, cat);
            });
    }
  }
}

std::vector<EvalRow> Pipeline::evaluate_variant(const VariantRecipe& recipe) {
  const auto start = std::chrono::steady_clock::now();
  const auto g = assemble_variant(config_, recipe, split_dir());
  const Catalog& cat = *g.catalog;
  std::vector<EvalRow> rows;
  const int workers = config_.deterministic ? 1 : config_.workers;

  if (config_.wants_lp()) {
    for (const auto& m : config_.models) {
      const auto loaded = load_model(model_path(recipe.tag, m.kind));
      if (loaded.model.entity_count() != cat.entity_count()) {
        throw ConsistencyError("model " + model_path(recipe.tag, m.kind).string() + " has " +
                               std::to_string(loaded.model.entity_count()) +
                               " entities, variant has " + std::to_string(cat.entity_count()));
      }
      const std::string method(to_string(m.kind));
      for (auto dir : config_.directions) {
        const auto q = test_queries(g.split, dir);
        const std::unordered_set<EntityId> target_set(q.targets.begin(), q.targets.end());
        std::vector<EntityId> queries;
        for (const auto& [e, _] : q.truths) queries.push_back(e);
        std::vector<std::vector<RankRecord>> per_query(queries.size());
        parallel_shards(queries.size(), workers, [&](std::size_t b, std::size_t e, int) {
          for (std::size_t i = b; i < e; ++i) {
            const auto r = lp_ranking(loaded.model, cat, queries[i], dir, q, target_set, method,
                                      config_.top_k);
            per_query[i] = extract_ranks(r, q.truths.at(queries[i]));
          }
        });
        std::vector<RankRecord> records;
        for (auto& v : per_query) records.insert(records.end(), v.begin(), v.end());
        if (records.empty()) throw ConfigError("no positive test pairs to evaluate");
        rows.push_back(summarize(recipe.tag, method, dir, records, config_.denominator));
      }
    }
  }
  if (config_.wants_clf()) {
    for (auto op : config_.aggregations) {
      for (const auto& s : config_.classifiers) {
        const auto method = method_name(op, s);
        Catalog& mutable_cat = *g.catalog;
        const auto predictions = load_predictions(predictions_path(recipe.tag, method), mutable_cat);
        for (auto dir : config_.directions) {
          const auto q = test_queries(g.split, dir);
          std::vector<RankRecord> records;
          for (const auto& [query, truths] : q.truths) {
            const auto r = unify_clf(predictions, query, dir, method);
            const auto recs = extract_ranks(r, truths);
            records.insert(records.end(), recs.begin(), recs.end());
          }
          if (records.empty()) throw ConfigError("no positive test pairs to evaluate");
          rows.push_back(summarize(recipe.tag, method, dir, records, config_.denominator));
        }
      }
    }
  }
  const std::chrono::duration<double> took = std::chrono::steady_clock::now() - start;
  timings_.emplace_back("evaluate[" + recipe.tag + "]", took.count());
  return rows;
}

EvalReport Pipeline::evaluate() {
  for (const auto& v : config_.variants) {
    if (config_.wants_lp()) train_lp(v.tag);
    if (config_.wants_clf()) classify(v.tag);
  }
  EvalReport report;
  report.config_digest = digest_;
  report.denominator = config_.denominator;
  report.seeds = {{"split", config_.seed},
                  {"link_prediction", config_.seed},
                  {"walks", config_.seed},
                  {"classifier", config_.seed}};
  for (const auto& v : config_.variants) {
    try {
      auto rows = evaluate_variant(v);
      report.rows.insert(report.rows.end(), rows.begin(), rows.end());
    } catch (const StageError&) {
      throw;
    } catch (const std::exception& e) {
      throw StageError("evaluate[" + v.tag + "]", digest_, e.what());
    }
  }
  write_text(config_.output / "report.json", report_to_json(report));
  write_text(config_.output / "report.tsv", report_to_tsv(report));
  return report;
}

EvalReport Pipeline::run() {
  auto report = evaluate();
  for (const auto& req : config_.case_studies) case_study(req);
  return report;
}

std::string Pipeline::case_study(const CaseStudyRequest& request) {
  const auto& recipe = request.variant.empty() ? config_.variants.front()
                                               : config_.variant(request.variant);
  const std::string name = "case-study[" + recipe.tag + "/" + request.entity + "]";
  try {
    if (config_.wants_lp()) train_lp(recipe.tag);
    if (config_.wants_clf()) classify(recipe.tag);
    const auto g = assemble_variant(config_, recipe, split_dir());
    Catalog& cat = *g.catalog;
    const auto id = cat.entities().find(request.entity);
    if (!id || cat.kind(*id) != query_kind(request.direction)) {
      throw ConfigError("'" + request.entity + "' is not a " +
                        std::string(to_string(query_kind(request.direction))) +
                        " of the dataset");
    }
    const auto q = test_queries(g.split, request.direction);
    const auto it = q.truths.find(*id);
    if (it == q.truths.end()) {
      throw ConfigError("'" + request.entity + "' has no positive test associations");
    }
    const std::unordered_set<EntityId> target_set(q.targets.begin(), q.targets.end());
    std::vector<UnifiedRanking> methods;
    if (config_.wants_clf()) {
      for (auto op : config_.aggregations) {
        for (const auto& s : config_.classifiers) {
          const auto method = method_name(op, s);
          const auto preds = load_predictions(predictions_path(recipe.tag, method), cat);
          methods.push_back(unify_clf(preds, *id, request.direction, method));
        }
      }
    }
    if (config_.wants_lp()) {
      for (const auto& m : config_.models) {
        const auto loaded = load_model(model_path(recipe.tag, m.kind));
        methods.push_back(lp_ranking(loaded.model, cat, *id, request.direction, q, target_set,
                                     std::string(to_string(m.kind)), config_.top_k));
      }
    }
    const auto table = gdakg::case_study(*id, methods, it->second);
    const auto text = case_study_to_tsv(table, cat);
    const auto dir = config_.output / "case_studies";
    fs::create_directories(dir);
    write_text(dir / (variant_dir_name(recipe.tag) + "_" + variant_dir_name(request.entity) + "_" +
                      std::string(to_string(request.direction)) + ".tsv"),
               text);
    return text;
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, digest_, e.what());
  }
}

void Pipeline::write_timings() const {
  ordered_json j;
  j["config_digest"] = digest_;
  j["stages"] = ordered_json::array();
  for (const auto& [name, secs] : timings_) j["stages"].push_back({{"stage", name}, {"seconds", secs}});
  write_text(config_.output / "timings.json", j.dump(2) + "\n");
}

}  // namespace gdakg
