#pragma once

#include <cstdint>
#include <filesystem>

namespace gdakg {

// Planted-structure toy dataset. Genes and diseases are dealt round-robin
// into blocks; every block owns one subtree per ontology, and entities are
// annotated mostly with terms of their block. Associations only join a gene
// to diseases of its own block.
struct SyntheticSpec {
  int classes_per_ontology = 200;
  int genes = 60;
  int diseases = 40;
  int blocks = 10;
  int diseases_per_gene = 3;
  int terms_per_entity = 6;
  double noise = 0.05;  // chance that a term is drawn from the whole ontology
  int links = 12;      // logical definitions and mappings, each
  std::uint64_t seed = 7;
};

// Writes go.tsv, hp.tsv, go_genes.tsv, hp_genes.tsv, hp_diseases.tsv,
// ld.tsv, map.tsv, pairs.tsv and a config.json running every method. The
// config shrinks the link-prediction models to 50 dimensions and 300
// epochs and raises the SGD step sizes, which converge too slowly on a
// graph this small at their published values.
void write_synthetic(const std::filesystem::path& dir, const SyntheticSpec& spec);

}  // namespace gdakg
