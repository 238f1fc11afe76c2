#include "gdakg/config.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "gdakg/error.hpp"
#include "gdakg/types.hpp"
#include "text.hpp"

namespace gdakg {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

void check_keys(const json& j, std::initializer_list<std::string_view> allowed,
                std::string_view where) {
  if (!j.is_object()) throw ConfigError(std::string(where) + " must be an object");
  for (const auto& [key, _] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError("unknown key '" + key + "' in " + std::string(where));
    }
  }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_relative() && !base.empty()) path = base / path;
  return path.lexically_normal();
}

const std::set<std::string>& model_keys() {
  static const std::set<std::string> keys{"kind", "dim", "epochs", "nr_batches", "alpha",
                                          "margin", "lambda", "bern", "entity_negative_rate",
                                          "relation_negative_rate", "optimizer", "norm"};
  return keys;
}

void check_model_keys(const json& j, std::string_view where) {
  for (const auto& [key, _] : j.items()) {
    if (!model_keys().contains(key)) {
      throw ConfigError("unknown key '" + key + "' in " + std::string(where));
    }
  }
}

ModelConfig model_from(const json& shared, const json& entry) {
  json j = json::object();
  std::string kind;
  if (entry.is_string()) {
    kind = entry.get<std::string>();
  } else {
    check_model_keys(entry, "link_prediction.models");
    kind = entry.at("kind").get<std::string>();
  }
  j = json::parse(config_to_json(ModelConfig::defaults(parse_model_kind(kind))));
  j.merge_patch(shared);
  if (entry.is_object()) j.merge_patch(entry);
  j["kind"] = kind;
  return config_from_json(j.dump());
}

ClassifierSpec classifier_from(const json& entry) {
  if (entry.is_string()) return ClassifierSpec::defaults(parse_classifier(entry.get<std::string>()));
  return classifier_spec_from_json(entry.dump());
}

std::string digest_or_missing(const std::filesystem::path& p) {
  return std::filesystem::exists(p) ? file_digest(p) : "missing:" + p.string();
}

}  // namespace

std::string_view to_string(Task t) {
  switch (t) {
    case Task::LinkPrediction: return "link_prediction";
    case Task::NodePairClassification: return "node_pair_classification";
    case Task::Both: return "both";
  }
  return "?";
}

Task parse_task(std::string_view text) {
  for (auto t : {Task::LinkPrediction, Task::NodePairClassification, Task::Both}) {
    if (text == to_string(t)) return t;
  }
  throw ConfigError("unknown task '" + std::string(text) + "'");
}

const VariantRecipe& ExperimentConfig::variant(std::string_view tag) const {
  for (const auto& v : variants) {
    if (v.tag == tag) return v;
  }
  throw ConfigError("variant '" + std::string(tag) + "' is not configured");
}

ModelConfig ExperimentConfig::model_config(const ModelConfig& m) const {
  ModelConfig c = m;
  c.seed = seed;
  c.workers = deterministic ? 1 : workers;
  return c;
}

WalkConfig ExperimentConfig::walk_config() const {
  WalkConfig c = walks;
  c.seed = seed;
  c.workers = deterministic ? 1 : workers;
  return c;
}

ClassifierSpec ExperimentConfig::classifier_spec(const ClassifierSpec& s) const {
  ClassifierSpec c = s;
  c.seed = seed;
  c.workers = deterministic ? 1 : workers;
  return c;
}

VariantRecipe parse_recipe(std::string_view recipe, const std::vector<OntologySource>& ontologies,
                           const std::vector<LinkSource>& links) {
  VariantRecipe v;
  v.tag = std::string(recipe);
  std::set<std::string> seen;
  for (auto part : detail::split_on(recipe, '+')) {
    std::string tag(part);
    bool star = false;
    if (!tag.empty() && tag.back() == '*') {
      star = true;
      tag.pop_back();
    }
    if (tag.empty()) throw ConfigError("variant '" + v.tag + "' has an empty component");
    if (!seen.insert(tag).second) {
      throw ConfigError("variant '" + v.tag + "' repeats component '" + tag + "'");
    }
    const bool is_ontology = std::any_of(ontologies.begin(), ontologies.end(),
                                         [&](const auto& o) { return o.tag == tag; });
    const bool is_link =
        std::any_of(links.begin(), links.end(), [&](const auto& l) { return l.tag == tag; });
    if (is_ontology) {
      v.ontologies.push_back({tag, star});
    } else if (is_link && !star) {
      v.links.push_back(tag);
    } else {
      throw ConfigError("variant '" + v.tag + "': unknown component '" + std::string(part) + "'");
    }
  }
  if (v.ontologies.empty()) throw ConfigError("variant '" + v.tag + "' names no ontology");
  return v;
}

std::string classifier_spec_to_json(const ClassifierSpec& s) {
  ordered_json j;
  j["kind"] = std::string(to_string(s.kind));
  j["max_depth"] = s.max_depth;
  j["n_estimators"] = s.n_estimators;
  j["learning_rate"] = s.learning_rate;
  j["reg_lambda"] = s.reg_lambda;
  j["min_child_weight"] = s.min_child_weight;
  j["hidden_layers"] = s.hidden_layers;
  j["l2_alpha"] = s.l2_alpha;
  j["adam_learning_rate"] = s.adam_learning_rate;
  j["batch_size"] = s.batch_size;
  j["max_epochs"] = s.max_epochs;
  j["patience"] = s.patience;
  j["validation_fraction"] = s.validation_fraction;
  j["var_smoothing"] = s.var_smoothing;
  j["seed"] = s.seed;
  j["workers"] = s.workers;
  return j.dump(2);
}

ClassifierSpec classifier_spec_from_json(const std::string& text) {
  try {
    const auto j = json::parse(text);
    check_keys(j,
               {"kind", "max_depth", "n_estimators", "learning_rate", "reg_lambda",
                "min_child_weight", "hidden_layers", "l2_alpha", "adam_learning_rate",
                "batch_size", "max_epochs", "patience", "validation_fraction", "var_smoothing",
                "seed", "workers"},
               "classifier");
    ClassifierSpec s = ClassifierSpec::defaults(parse_classifier(j.at("kind").get<std::string>()));
    s.max_depth = j.value("max_depth", s.max_depth);
    s.n_estimators = j.value("n_estimators", s.n_estimators);
    s.learning_rate = j.value("learning_rate", s.learning_rate);
    s.reg_lambda = j.value("reg_lambda", s.reg_lambda);
    s.min_child_weight = j.value("min_child_weight", s.min_child_weight);
    s.hidden_layers = j.value("hidden_layers", s.hidden_layers);
    s.l2_alpha = j.value("l2_alpha", s.l2_alpha);
    s.adam_learning_rate = j.value("adam_learning_rate", s.adam_learning_rate);
    s.batch_size = j.value("batch_size", s.batch_size);
    s.max_epochs = j.value("max_epochs", s.max_epochs);
    s.patience = j.value("patience", s.patience);
    s.validation_fraction = j.value("validation_fraction", s.validation_fraction);
    s.var_smoothing = j.value("var_smoothing", s.var_smoothing);
    s.seed = j.value("seed", s.seed);
    s.workers = j.value("workers", s.workers);
    return s;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid classifier spec: ") + e.what());
  }
}

ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& source) {
  ExperimentConfig c;
  c.source = source;
  const auto base = source.empty() ? std::filesystem::path() : source.parent_path();
  try {
    const auto j = json::parse(text);
    check_keys(j,
               {"seed", "deterministic", "workers", "output", "task", "directions", "dataset",
                "ontologies", "links", "variants", "link_prediction", "classification",
                "evaluation"},
               "config");
    c.seed = j.value("seed", c.seed);
    c.deterministic = j.value("deterministic", c.deterministic);
    c.workers = j.value("workers", c.workers);
    if (c.workers < 1) throw ConfigError("workers must be at least 1");
    c.output = resolve(base, j.value("output", std::string("out")));
    c.task = parse_task(j.value("task", std::string("both")));

    if (j.contains("directions")) {
      const auto& d = j["directions"];
      c.directions.clear();
      if (d.is_string() && d.get<std::string>() == "both") {
        c.directions = {QueryDirection::GeneToDisease, QueryDirection::DiseaseToGene};
      } else if (d.is_string()) {
        c.directions.push_back(parse_direction(d.get<std::string>()));
      } else {
        for (const auto& x : d) c.directions.push_back(parse_direction(x.get<std::string>()));
      }
      if (c.directions.empty()) throw ConfigError("directions must not be empty");
    }

    const auto& ds = j.at("dataset");
    check_keys(ds, {"pairs", "negatives", "negative_count", "fraction"}, "dataset");
    c.pairs = resolve(base, ds.at("pairs").get<std::string>());
    if (ds.contains("negatives")) c.negatives = resolve(base, ds["negatives"].get<std::string>());
    if (ds.contains("negative_count")) c.negative_count = ds["negative_count"].get<std::size_t>();
    c.fraction = ds.value("fraction", c.fraction);

    for (const auto& o : j.at("ontologies")) {
      check_keys(o, {"tag", "name", "triples", "gene_annotations", "disease_annotations"},
                 "ontologies[]");
      OntologySource s;
      s.tag = o.at("tag").get<std::string>();
      s.name = o.value("name", s.tag);
      s.triples = resolve(base, o.at("triples").get<std::string>());
      if (o.contains("gene_annotations")) {
        s.gene_annotations = resolve(base, o["gene_annotations"].get<std::string>());
      }
      if (o.contains("disease_annotations")) {
        s.disease_annotations = resolve(base, o["disease_annotations"].get<std::string>());
      }
      c.ontologies.push_back(std::move(s));
    }
    if (j.contains("links")) {
      for (const auto& l : j["links"]) {
        check_keys(l, {"tag", "relation", "file"}, "links[]");
        LinkSource s;
        s.tag = l.at("tag").get<std::string>();
        std::string fallback = s.tag == "L"   ? std::string(kLogicalDefinitionRelation)
                               : s.tag == "M" ? std::string(kOntologyMappingRelation)
                                              : s.tag;
        s.relation = l.value("relation", fallback);
        s.file = resolve(base, l.at("file").get<std::string>());
        c.links.push_back(std::move(s));
      }
    }
    std::set<std::string> tags;
    for (const auto& o : c.ontologies) {
      if (!tags.insert(o.tag).second) throw ConfigError("duplicate tag '" + o.tag + "'");
    }
    for (const auto& l : c.links) {
      if (!tags.insert(l.tag).second) throw ConfigError("duplicate tag '" + l.tag + "'");
    }

    for (const auto& v : j.at("variants")) {
      c.variants.push_back(parse_recipe(v.get<std::string>(), c.ontologies, c.links));
    }
    if (c.variants.empty()) throw ConfigError("no variants configured");

    const json lp = j.value("link_prediction", json::object());
    check_keys(lp, {"models", "defaults", "top_k"}, "link_prediction");
    const json shared = lp.value("defaults", json::object());
    check_model_keys(shared, "link_prediction.defaults");
    if (lp.contains("models")) {
      for (const auto& m : lp["models"]) c.models.push_back(model_from(shared, m));
    } else {
      for (auto k : kLinkPredictionModels) {
        c.models.push_back(model_from(shared, std::string(to_string(k))));
      }
    }
    {
      std::set<ModelKind> kinds;
      for (const auto& m : c.models) {
        if (!kinds.insert(m.kind).second) {
          throw ConfigError("model " + std::string(to_string(m.kind)) + " listed twice");
        }
      }
    }
    if (lp.contains("top_k") && !lp["top_k"].is_null()) c.top_k = lp["top_k"].get<std::size_t>();

    const json clf = j.value("classification", json::object());
    check_keys(clf, {"walks", "aggregations", "classifiers"}, "classification");
    if (clf.contains("walks")) {
      check_keys(clf["walks"],
                 {"max_walk_length", "walks_per_entity", "deduplicate", "emit_relations",
                  "wl_iterations", "dim", "window", "negative", "epochs", "min_count", "sample",
                  "alpha", "min_alpha", "ns_exponent", "shrink_windows", "seed", "workers"},
                 "classification.walks");
      c.walks = walk_config_from_json(clf["walks"].dump());
    }
    if (clf.contains("aggregations")) {
      c.aggregations.clear();
      for (const auto& a : clf["aggregations"]) {
        c.aggregations.push_back(parse_aggregation(a.get<std::string>()));
      }
    }
    if (clf.contains("classifiers")) {
      for (const auto& s : clf["classifiers"]) c.classifiers.push_back(classifier_from(s));
    } else {
      c.classifiers.push_back(ClassifierSpec::defaults(ClassifierKind::GradientBoostedTrees));
    }
    {
      std::set<ClassifierKind> kinds;
      for (const auto& k : c.classifiers) {
        if (!kinds.insert(k.kind).second) {
          throw ConfigError("classifier " + std::string(to_string(k.kind)) + " listed twice");
        }
      }
      std::set<AggregationOp> ops(c.aggregations.begin(), c.aggregations.end());
      if (ops.size() != c.aggregations.size()) throw ConfigError("aggregation listed twice");
    }

    const json ev = j.value("evaluation", json::object());
    check_keys(ev, {"hits_denominator", "case_studies"}, "evaluation");
    c.denominator = parse_denominator(ev.value("hits_denominator", std::string("per-association")));
    if (ev.contains("case_studies")) {
      for (const auto& cs : ev["case_studies"]) {
        check_keys(cs, {"entity", "direction", "variant"}, "case_studies[]");
        CaseStudyRequest r;
        r.entity = cs.at("entity").get<std::string>();
        r.direction = parse_direction(cs.value("direction", std::string("gene-disease")));
        r.variant = cs.value("variant", std::string());
        if (!r.variant.empty()) c.variant(r.variant);
        c.case_studies.push_back(std::move(r));
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }
  if (!(c.fraction > 0 && c.fraction < 1)) throw ConfigError("fraction must lie in (0, 1)");
  for (const auto& m : c.models) m.validate();
  c.walks.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path);
}

std::string canonical_json(const ExperimentConfig& c) {
  ordered_json j;
  j["seed"] = c.seed;
  j["deterministic"] = c.deterministic;
  j["workers"] = c.deterministic ? 1 : c.workers;
  j["task"] = std::string(to_string(c.task));
  for (auto d : c.directions) j["directions"].push_back(std::string(to_string(d)));
  j["dataset"]["pairs"] = digest_or_missing(c.pairs);
  j["dataset"]["negatives"] = c.negatives ? digest_or_missing(*c.negatives) : "generated";
  j["dataset"]["negative_count"] = c.negative_count ? json(*c.negative_count) : json(nullptr);
  j["dataset"]["fraction"] = c.fraction;
  for (const auto& o : c.ontologies) {
    ordered_json x;
    x["tag"] = o.tag;
    x["name"] = o.name;
    x["triples"] = digest_or_missing(o.triples);
    x["gene_annotations"] = o.gene_annotations ? digest_or_missing(*o.gene_annotations) : "";
    x["disease_annotations"] =
        o.disease_annotations ? digest_or_missing(*o.disease_annotations) : "";
    j["ontologies"].push_back(x);
  }
  j["links"] = ordered_json::array();
  for (const auto& l : c.links) {
    j["links"].push_back({{"tag", l.tag}, {"relation", l.relation}, {"file", digest_or_missing(l.file)}});
  }
  for (const auto& v : c.variants) j["variants"].push_back(v.tag);
  j["models"] = ordered_json::array();
  for (const auto& m : c.models) j["models"].push_back(ordered_json::parse(config_to_json(c.model_config(m))));
  j["top_k"] = c.top_k ? json(*c.top_k) : json(nullptr);
  j["walks"] = ordered_json::parse(walk_config_to_json(c.walk_config()));
  for (auto a : c.aggregations) j["aggregations"].push_back(std::string(to_string(a)));
  j["classifiers"] = ordered_json::array();
  for (const auto& s : c.classifiers) {
    j["classifiers"].push_back(ordered_json::parse(classifier_spec_to_json(c.classifier_spec(s))));
  }
  j["hits_denominator"] = std::string(to_string(c.denominator));
  return j.dump();
}

std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 computation failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 15]);
  }
  return out;
}

std::string file_digest(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  std::ostringstream text;
  text << in.rdbuf();
  return sha256_hex(text.str());
}

}  // namespace gdakg
