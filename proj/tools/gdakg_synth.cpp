// Writes the planted-structure toy dataset and a matching config.

#include <CLI11.hpp>
#include <iostream>

#include "gdakg/error.hpp"
#include "gdakg/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate a synthetic gene-disease benchmark"};
  gdakg::SyntheticSpec spec;
  std::string out = "synthetic";
  app.add_option("--out", out, "Output directory");
  app.add_option("--classes", spec.classes_per_ontology, "Classes per ontology");
  app.add_option("--genes", spec.genes);
  app.add_option("--diseases", spec.diseases);
  app.add_option("--blocks", spec.blocks);
  app.add_option("--diseases-per-gene", spec.diseases_per_gene);
  app.add_option("--terms", spec.terms_per_entity, "Annotation terms per entity");
  app.add_option("--noise", spec.noise, "Chance of an off-block annotation term");
  app.add_option("--links", spec.links, "Logical definitions and mappings, each");
  app.add_option("--seed", spec.seed);
  CLI11_PARSE(app, argc, argv);
  try {
    gdakg::write_synthetic(out, spec);
  } catch (const gdakg::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
