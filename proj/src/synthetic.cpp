#include "gdakg/synthetic.hpp"

#include <cstdio>
#include <json.hpp>
#include <set>
#include <string>
#include <vector>

#include "gdakg/error.hpp"
#include "gdakg/rng.hpp"
#include "text.hpp"

namespace gdakg {
namespace {

std::string numbered(const char* prefix, int i, int width = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s%0*d", prefix, width, i);
  return buf;
}

// Class 0 is the root, classes 1..blocks are block roots, every further
// class hangs below an earlier class of its block.
struct Tree {
  std::vector<std::string> names;
  std::vector<int> parent;
  std::vector<std::vector<int>> block_classes;  // excludes the shared root
};

Tree make_tree(const char* prefix, const SyntheticSpec& s, Rng& rng) {
  Tree t;
  t.block_classes.resize(static_cast<std::size_t>(s.blocks));
  for (int c = 0; c < s.classes_per_ontology; ++c) {
    t.names.push_back(numbered(prefix, c));
    if (c == 0) {
      t.parent.push_back(-1);
    } else if (c <= s.blocks) {
      t.parent.push_back(0);
      t.block_classes[static_cast<std::size_t>(c - 1)].push_back(c);
    } else {
      auto& members = t.block_classes[static_cast<std::size_t>(c % s.blocks)];
      t.parent.push_back(members[rng.index(members.size())]);
      members.push_back(c);
    }
  }
  return t;
}

void write_tree(const std::filesystem::path& path, const Tree& t) {
  auto out = detail::open_output(path);
  for (std::size_t c = 1; c < t.names.size(); ++c) {
    out << t.names[c] << "\tsubClassOf\t" << t.names[static_cast<std::size_t>(t.parent[c])] << '\n';
  }
  detail::check_written(out, path);
}

std::vector<int> pick_terms(const Tree& t, int block, const SyntheticSpec& s, Rng& rng) {
  std::set<int> terms;
  const auto& own = t.block_classes[static_cast<std::size_t>(block)];
  while (static_cast<int>(terms.size()) < s.terms_per_entity) {
    if (rng.coin(s.noise)) {
      terms.insert(1 + static_cast<int>(rng.index(t.names.size() - 1)));
    } else {
      terms.insert(own[rng.index(own.size())]);
    }
  }
  return {terms.begin(), terms.end()};
}

void write_annotations(const std::filesystem::path& path, const std::vector<std::string>& entities,
                       int blocks, const Tree& t, const SyntheticSpec& s, Rng& rng) {
  auto out = detail::open_output(path);
  for (std::size_t i = 0; i < entities.size(); ++i) {
    out << entities[i] << '\t';
    const auto terms = pick_terms(t, static_cast<int>(i % static_cast<std::size_t>(blocks)), s, rng);
    for (std::size_t k = 0; k < terms.size(); ++k) {
      out << (k ? " " : "") << t.names[static_cast<std::size_t>(terms[k])];
    }
    out << '\n';
  }
  detail::check_written(out, path);
}

void write_links(const std::filesystem::path& path, const Tree& a, const Tree& b,
                 const SyntheticSpec& s, Rng& rng) {
  auto out = detail::open_output(path);
  std::set<std::pair<int, int>> seen;
  while (static_cast<int>(seen.size()) < s.links) {
    const int block = static_cast<int>(rng.index(static_cast<std::size_t>(s.blocks)));
    const auto& ca = a.block_classes[static_cast<std::size_t>(block)];
    const auto& cb = b.block_classes[static_cast<std::size_t>(block)];
    const int x = ca[rng.index(ca.size())];
    const int y = cb[rng.index(cb.size())];
    if (seen.insert({x, y}).second) {
      out << a.names[static_cast<std::size_t>(x)] << '\t' << b.names[static_cast<std::size_t>(y)]
          << '\n';
    }
  }
  detail::check_written(out, path);
}

}  // namespace

void write_synthetic(const std::filesystem::path& dir, const SyntheticSpec& s) {
  if (s.blocks < 1 || s.classes_per_ontology <= s.blocks + s.blocks ||
      s.genes < s.blocks || s.diseases < s.blocks) {
    throw ConfigError("synthetic spec: need more classes, genes and diseases than blocks");
  }
  if (s.diseases_per_gene > s.diseases / s.blocks) {
    throw ConfigError("synthetic spec: diseases_per_gene exceeds the block size");
  }
  std::filesystem::create_directories(dir);
  Rng rng(s.seed);
  const Tree go = make_tree("GO_", s, rng);
  const Tree hp = make_tree("HP_", s, rng);
  write_tree(dir / "go.tsv", go);
  write_tree(dir / "hp.tsv", hp);

  std::vector<std::string> genes, diseases;
  for (int g = 0; g < s.genes; ++g) genes.push_back(numbered("gene_", g, 3));
  for (int d = 0; d < s.diseases; ++d) diseases.push_back(numbered("disease_", d, 3));
  write_annotations(dir / "go_genes.tsv", genes, s.blocks, go, s, rng);
  write_annotations(dir / "hp_genes.tsv", genes, s.blocks, hp, s, rng);
  write_annotations(dir / "hp_diseases.tsv", diseases, s.blocks, hp, s, rng);
  write_links(dir / "ld.tsv", go, hp, s, rng);
  write_links(dir / "map.tsv", go, hp, s, rng);

  {
    const auto path = dir / "pairs.tsv";
    auto out = detail::open_output(path);
    for (int g = 0; g < s.genes; ++g) {
      const int block = g % s.blocks;
      std::vector<int> members;
      for (int d = block; d < s.diseases; d += s.blocks) members.push_back(d);
      rng.shuffle(std::span(members));
      for (int k = 0; k < s.diseases_per_gene; ++k) {
        out << genes[static_cast<std::size_t>(g)] << '\t'
            << diseases[static_cast<std::size_t>(members[static_cast<std::size_t>(k)])] << "\t1\n";
      }
    }
    detail::check_written(out, path);
  }

  nlohmann::ordered_json c;
  c["seed"] = 1;
  c["deterministic"] = true;
  c["workers"] = 1;
  c["output"] = "out";
  c["task"] = "both";
  c["directions"] = "both";
  c["dataset"] = {{"pairs", "pairs.tsv"}, {"fraction", 0.7}};
  c["ontologies"] = nlohmann::ordered_json::array(
      {{{"tag", "G"}, {"name", "GO"}, {"triples", "go.tsv"}, {"gene_annotations", "go_genes.tsv"}},
       {{"tag", "H"},
        {"name", "HP"},
        {"triples", "hp.tsv"},
        {"gene_annotations", "hp_genes.tsv"},
        {"disease_annotations", "hp_diseases.tsv"}}});
  c["links"] = nlohmann::ordered_json::array(
      {{{"tag", "L"}, {"relation", "logicalDefinition"}, {"file", "ld.tsv"}},
       {{"tag", "M"}, {"relation", "ontologyMapping"}, {"file", "map.tsv"}}});
  c["variants"] = {"G+H+L+M"};
  c["link_prediction"] = {
      {"defaults", {{"dim", 50}, {"epochs", 300}}},
      {"models",
       {{{"kind", "TransE"}, {"alpha", 0.1}},
        {{"kind", "TransD"}, {"alpha", 0.1}},
        {{"kind", "TransH"}, {"alpha", 0.03}},
        "DistMult",
        "HolE",
        "ComplEx"}},
      {"top_k", 10}};
  c["classification"] = {{"aggregations", {"Hadamard", "Average"}},
                         {"classifiers", {"XGB", "RF", "MLP", "NB"}}};
  c["evaluation"] = {{"hits_denominator", "per-association"}};
  const auto path = dir / "config.json";
  auto out = detail::open_output(path);
  out << c.dump(2) << '\n';
  detail::check_written(out, path);
}

}  // namespace gdakg
