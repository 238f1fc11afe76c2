#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gdakg/classify.hpp"
#include "gdakg/embedding.hpp"
#include "gdakg/evaluation.hpp"
#include "gdakg/walker.hpp"

namespace gdakg {

// One ontology and the annotation files that point into it.
struct OntologySource {
  std::string tag;   // letter used in variant recipes, e.g. "G"
  std::string name;  // annotation relation suffix, e.g. "GO"
  std::filesystem::path triples;
  std::optional<std::filesystem::path> gene_annotations;
  std::optional<std::filesystem::path> disease_annotations;
};

// Cross-ontology edges (logical definitions, mappings).
struct LinkSource {
  std::string tag;       // e.g. "L"
  std::string relation;  // e.g. "logicalDefinition"
  std::filesystem::path file;
};

struct RecipePart {
  std::string tag;
  bool diseases_only = false;  // "H*": skip the gene annotations of H
};

// Parsed "G+H*+D+L+M". The tag is the recipe text itself.
struct VariantRecipe {
  std::string tag;
  std::vector<RecipePart> ontologies;
  std::vector<std::string> links;
};

enum class Task : std::uint8_t { LinkPrediction, NodePairClassification, Both };

std::string_view to_string(Task t);
Task parse_task(std::string_view text);

struct CaseStudyRequest {
  std::string entity;
  QueryDirection direction = QueryDirection::GeneToDisease;
  std::string variant;  // empty: first variant
};

struct ExperimentConfig {
  std::filesystem::path source;  // config file, if any; relative paths resolve against it

  std::filesystem::path pairs;
  std::optional<std::filesystem::path> negatives;  // generated when absent
  std::optional<std::size_t> negative_count;       // default: one per positive
  double fraction = 0.7;

  std::vector<OntologySource> ontologies;
  std::vector<LinkSource> links;
  std::vector<VariantRecipe> variants;

  Task task = Task::Both;
  std::vector<QueryDirection> directions{QueryDirection::GeneToDisease,
                                         QueryDirection::DiseaseToGene};

  std::vector<ModelConfig> models;
  std::optional<std::size_t> top_k;

  WalkConfig walks;
  std::vector<AggregationOp> aggregations{AggregationOp::Hadamard};
  std::vector<ClassifierSpec> classifiers;

  HitsDenominator denominator = HitsDenominator::PerAssociation;
  std::vector<CaseStudyRequest> case_studies;

  std::uint64_t seed = 1;
  bool deterministic = false;
  int workers = 1;
  std::filesystem::path output = "out";

  bool wants_lp() const { return task != Task::NodePairClassification; }
  bool wants_clf() const { return task != Task::LinkPrediction; }
  const VariantRecipe& variant(std::string_view tag) const;
  // Effective settings after the global seed and worker policy.
  ModelConfig model_config(const ModelConfig& m) const;
  WalkConfig walk_config() const;
  ClassifierSpec classifier_spec(const ClassifierSpec& c) const;
};

// Parses `recipe` against the configured ontology and link tags.
VariantRecipe parse_recipe(std::string_view recipe, const std::vector<OntologySource>& ontologies,
                           const std::vector<LinkSource>& links);

ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& source = {});
ExperimentConfig load_config(const std::filesystem::path& path);

// Canonical JSON of the resolved config (absolute paths, every default
// filled in). Equal configs give equal text.
std::string canonical_json(const ExperimentConfig& config);

std::string classifier_spec_to_json(const ClassifierSpec& spec);
ClassifierSpec classifier_spec_from_json(const std::string& text);

// Hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);
// Hex SHA-256 of a file's bytes.
std::string file_digest(const std::filesystem::path& path);

}  // namespace gdakg
