// gdakg: gene-disease association benchmark driver.

#include <CLI11.hpp>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "gdakg/config.hpp"
#include "gdakg/pipeline.hpp"

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  bool deterministic = false;
  std::string out;
  std::string variant;
  std::string direction;
  std::string entity;
};

gdakg::ExperimentConfig effective_config(const Options& o) {
  auto c = gdakg::load_config(o.config);
  if (o.seed) c.seed = *o.seed;
  if (o.deterministic) c.deterministic = true;
  if (!o.out.empty()) c.output = o.out;
  if (!o.direction.empty()) {
    if (o.direction == "both") {
      c.directions = {gdakg::QueryDirection::GeneToDisease, gdakg::QueryDirection::DiseaseToGene};
    } else {
      c.directions = {gdakg::parse_direction(o.direction)};
    }
  }
  if (!o.variant.empty()) {
    c.variants = {c.variant(o.variant)};
    std::erase_if(c.case_studies, [&](const gdakg::CaseStudyRequest& r) {
      return !r.variant.empty() && r.variant != o.variant;
    });
  }
  return c;
}

std::vector<std::string> selected_variants(const gdakg::ExperimentConfig& c, const Options& o) {
  if (!o.variant.empty()) return {o.variant};
  std::vector<std::string> v;
  for (const auto& r : c.variants) v.push_back(r.tag);
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gene-disease association benchmark: link prediction vs node-pair classification"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "Override the global seed");
    sub->add_flag("--deterministic", o.deterministic, "Single-threaded, bit-reproducible run");
    sub->add_option("--out", o.out, "Output directory (overrides the config)");
    sub->add_option("--variant", o.variant, "Restrict to one KG variant, e.g. G+H+D+L");
    sub->add_option("--direction", o.direction, "gene-disease, disease-gene or both")
        ->check(CLI::IsMember({"gene-disease", "disease-gene", "both"}));
  };

  auto* split = app.add_subcommand("split", "Generate negatives and the train/test split");
  auto* build = app.add_subcommand("build-kg", "Assemble KG variants and export numeric files");
  auto* train_lp = app.add_subcommand("train-lp", "Train link-prediction embeddings");
  auto* train_walks = app.add_subcommand("train-walks", "Train walk-based entity embeddings");
  auto* classify = app.add_subcommand("classify", "Fit classifiers and predict test pairs");
  auto* evaluate = app.add_subcommand("evaluate", "Rank test pairs and write the report");
  auto* run = app.add_subcommand("run", "Run every stage");
  auto* validate = app.add_subcommand("validate", "Check a config without running it");
  auto* study = app.add_subcommand("case-study", "Per-entity rank table across methods");
  for (auto* s : {split, build, train_lp, train_walks, classify, evaluate, run, validate, study}) {
    add_common(s);
  }
  study->add_option("--entity", o.entity, "Query gene or disease")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    const auto config = effective_config(o);
    if (validate->parsed()) {
      const auto diagnostics = gdakg::validate(config);
      for (const auto& d : diagnostics) std::cout << d << '\n';
      return diagnostics.empty() ? 0 : 1;
    }

    gdakg::Pipeline pipeline(config);
    const auto variants = selected_variants(config, o);
    auto finish = [&] { pipeline.write_timings(); };

    if (split->parsed()) {
      pipeline.split();
    } else if (build->parsed()) {
      for (const auto& v : variants) pipeline.build_kg(v);
    } else if (train_lp->parsed()) {
      for (const auto& v : variants) pipeline.train_lp(v);
    } else if (train_walks->parsed()) {
      for (const auto& v : variants) pipeline.train_walks(v);
    } else if (classify->parsed()) {
      for (const auto& v : variants) pipeline.classify(v);
    } else if (evaluate->parsed() || run->parsed()) {
      const auto report = run->parsed() ? pipeline.run() : pipeline.evaluate();
      std::cout << gdakg::report_to_tsv(report);
    } else if (study->parsed()) {
      gdakg::CaseStudyRequest req;
      req.entity = o.entity;
      req.variant = o.variant;
      req.direction = config.directions.front();
      std::cout << pipeline.case_study(req);
    }
    finish();
  } catch (const gdakg::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
