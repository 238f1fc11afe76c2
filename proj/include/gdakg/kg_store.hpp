#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gdakg/split.hpp"
#include "gdakg/types.hpp"
#include "gdakg/vocab.hpp"

namespace gdakg {

// Reads `subject<TAB>predicate<TAB>object` lines. Subjects and objects are
// registered as ontology classes unless already known. Blank lines are
// skipped; line order is preserved.
std::vector<Triple> load_triples(const std::filesystem::path& path, Catalog& catalog);

// Reads cross-ontology link lines (`classA<TAB>classB`, or a 3-column triple
// whose predicate is ignored) and labels every link with `relation`.
std::vector<Triple> load_links(const std::filesystem::path& path, std::string_view relation,
                               Catalog& catalog);

struct Annotation {
  EntityId entity = 0;
  std::vector<EntityId> terms;  // first-seen order, duplicate-free
};

// All annotations read from one file. Every (entity, term) pair becomes an
// `hasAnnotation_<source>` triple.
struct AnnotationSet {
  std::string source;
  EntityKind kind = EntityKind::Gene;
  RelationId relation = 0;
  std::vector<Annotation> entries;

  std::size_t pair_count() const;
};

// Reads `entity<TAB>term1 term2 ...` lines. Repeated entity lines are merged
// by set union; a term equal to its entity is a ParseError.
AnnotationSet load_annotations(const std::filesystem::path& path, EntityKind kind,
                               std::string_view source, Catalog& catalog);

struct KgIngredients {
  std::vector<Triple> ontology;
  std::vector<AnnotationSet> annotations;
  std::vector<Triple> extra_links;
  // Positive training pairs; present only for link-prediction graphs.
  std::optional<std::vector<GdaPair>> training_edges;
};

struct KgStats {
  std::size_t triples = 0;
  std::size_t classes = 0;
  std::size_t annotated_genes = 0;
  std::size_t annotated_diseases = 0;
  std::size_t logical_definitions = 0;
  std::size_t ontology_mappings = 0;
  std::size_t associations = 0;
  std::map<std::string, std::size_t> per_relation;
};

struct OutEdge {
  RelationId relation = 0;
  EntityId tail = 0;
};

// Immutable, deduplicated triple store with an out-adjacency index. Safe to
// share across threads once built.
class KnowledgeGraph {
 public:
  KnowledgeGraph(std::shared_ptr<const Catalog> catalog, std::vector<Triple> triples,
                 std::string variant);

  const Catalog& catalog() const { return *catalog_; }
  std::shared_ptr<const Catalog> shared_catalog() const { return catalog_; }
  const std::string& variant() const { return variant_; }

  std::span<const Triple> triples() const { return triples_; }
  std::span<const OutEdge> out_edges(EntityId entity) const;
  bool contains(const Triple& t) const;
  // True when `entity` heads at least one annotation triple.
  bool annotated(EntityId entity) const;

  std::size_t entity_count() const { return catalog_->entity_count(); }
  std::size_t relation_count() const { return catalog_->relation_count(); }
  KgStats stats() const;

 private:
  std::shared_ptr<const Catalog> catalog_;
  std::vector<Triple> triples_;
  std::vector<Triple> sorted_;
  std::vector<std::size_t> offsets_;
  std::vector<OutEdge> edges_;
  std::vector<bool> annotated_;
  std::string variant_;
};

// Combines ontology triples, annotation triples, LD/MAP links and, when
// present, one association triple per positive training pair. Duplicates
// are dropped, keeping first occurrence order.
KnowledgeGraph assemble_kg(std::shared_ptr<const Catalog> catalog, const KgIngredients& parts,
                           std::string variant);

// Numeric files consumed by the link-prediction trainer.
struct NumericKg {
  std::vector<std::string> entities;
  std::vector<std::string> relations;
  std::vector<EntityId> association_entities;
  std::vector<Triple> train;
  std::vector<Triple> test;
};

// Writes entity2id.txt, relation2id.txt, association_entities.txt,
// train2id.txt (every KG triple) and test2id.txt (test positives as
// association triples). Triple files start with their count and hold
// `head tail relation` rows.
void export_numeric(const KnowledgeGraph& kg, const SplitDataset& split,
                    const std::filesystem::path& out_dir);
NumericKg load_numeric(const std::filesystem::path& dir);

}  // namespace gdakg
