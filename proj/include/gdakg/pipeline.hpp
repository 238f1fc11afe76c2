#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gdakg/config.hpp"
#include "gdakg/error.hpp"
#include "gdakg/evaluation.hpp"
#include "gdakg/kg_store.hpp"
#include "gdakg/split.hpp"

namespace gdakg {

// A failure inside one pipeline stage.
class StageError : public Error {
 public:
  StageError(std::string stage, std::string digest, const std::string& what)
      : Error("stage " + stage + " failed (config " + digest.substr(0, 12) + "): " + what),
        stage_(std::move(stage)),
        digest_(std::move(digest)) {}
  const std::string& stage() const { return stage_; }
  const std::string& digest() const { return digest_; }

 private:
  std::string stage_;
  std::string digest_;
};

// Both graphs of one variant over a shared catalog. The split is resolved
// against the same catalog.
struct VariantGraphs {
  std::shared_ptr<Catalog> catalog;
  SplitDataset split;
  std::optional<KnowledgeGraph> classification;  // no association edges
  std::optional<KnowledgeGraph> link_prediction;  // plus train positives
};

VariantGraphs assemble_variant(const ExperimentConfig& config, const VariantRecipe& recipe,
                               const std::filesystem::path& split_dir);

// Every problem found in `config` (missing files, unknown components,
// infeasible negatives, cached artifacts disagreeing with the config).
std::vector<std::string> validate(const ExperimentConfig& config);

// Stage runner over one output directory. Holds the directory lock for its
// lifetime. Stages reuse artifacts whose recorded digest still matches.
class Pipeline {
 public:
  explicit Pipeline(ExperimentConfig config);
  ~Pipeline();
  Pipeline(const Pipeline&) = delete;
  Pipeline& operator=(const Pipeline&) = delete;

  const ExperimentConfig& config() const { return config_; }
  const std::string& config_digest() const { return digest_; }

  void split();
  void build_kg(const std::string& variant);
  void train_lp(const std::string& variant);
  void train_walks(const std::string& variant);
  void classify(const std::string& variant);
  // Ranks from stored artifacts; writes report.json and report.tsv.
  EvalReport evaluate();
  // split, build-kg, training, classification, evaluation and the
  // configured case studies.
  EvalReport run();
  // Writes case_studies/<...>.tsv and returns its text.
  std::string case_study(const CaseStudyRequest& request);

  // Wall time per stage of this process, written to timings.json.
  void write_timings() const;

  std::filesystem::path split_dir() const;
  std::filesystem::path kg_dir(const std::string& variant) const;
  std::filesystem::path model_path(const std::string& variant, ModelKind kind) const;
  std::filesystem::path table_path(const std::string& variant) const;
  std::filesystem::path predictions_path(const std::string& variant, const std::string& method) const;

 private:
  struct Lock;
  template <class F>
  void stage(const std::string& name, const std::filesystem::path& dir, const std::string& digest,
             F&& body);
  std::string split_digest() const;
  std::string kg_digest(const VariantRecipe& recipe) const;
  std::string model_digest(const VariantRecipe& recipe, const ModelConfig& m) const;
  std::string walks_digest(const VariantRecipe& recipe) const;
  std::string clf_digest(const VariantRecipe& recipe, AggregationOp op,
                         const ClassifierSpec& spec) const;
  std::vector<EvalRow> evaluate_variant(const VariantRecipe& recipe);

  ExperimentConfig config_;
  std::string digest_;
  std::unique_ptr<Lock> lock_;
  std::vector<std::pair<std::string, double>> timings_;
};

std::string method_name(AggregationOp op, const ClassifierSpec& spec);
// Directory-safe form of a variant tag ("G+H*" -> "G+Hstar").
std::string variant_dir_name(std::string_view tag);

}  // namespace gdakg
