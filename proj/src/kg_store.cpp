#include "gdakg/kg_store.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "gdakg/error.hpp"
#include "text.hpp"

namespace gdakg {
namespace {

struct TripleHash {
  std::size_t operator()(const Triple& t) const {
    std::uint64_t h = (static_cast<std::uint64_t>(t.head) << 32) ^ t.tail;
    h ^= static_cast<std::uint64_t>(t.relation) * 0x9e3779b97f4a7c15ULL;
    return std::hash<std::uint64_t>{}(h);
  }
};

bool is_annotation_relation(const Catalog& catalog, RelationId r) {
  return catalog.relations().name_of(r).starts_with(kAnnotationRelationPrefix);
}

void write_id_file(const std::filesystem::path& path, std::span<const std::string> names) {
  auto out = detail::open_output(path);
  for (std::size_t i = 0; i < names.size(); ++i) out << names[i] << '\t' << i << '\n';
  detail::check_written(out, path);
}

void write_triple_file(const std::filesystem::path& path, std::span<const Triple> triples) {
  auto out = detail::open_output(path);
  out << triples.size() << '\n';
  for (const auto& t : triples) out << t.head << ' ' << t.tail << ' ' << t.relation << '\n';
  detail::check_written(out, path);
}

std::vector<std::string> read_id_file(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  std::vector<std::string> names;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = detail::strip_cr(raw);
    if (line.empty()) continue;
    const auto fields = detail::split_on(line, '\t');
    if (fields.size() != 2) throw ParseError(path.string(), line_no, "expected name<TAB>id");
    if (fields[1] != std::to_string(names.size())) {
      throw ParseError(path.string(), line_no, "ids must be contiguous from 0");
    }
    names.emplace_back(fields[0]);
  }
  return names;
}

std::vector<Triple> read_triple_file(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  std::size_t count = 0;
  if (!(in >> count)) throw ParseError(path.string(), 1, "missing triple count");
  std::vector<Triple> triples(count);
  for (std::size_t i = 0; i < count; ++i) {
    auto& t = triples[i];
    if (!(in >> t.head >> t.tail >> t.relation)) {
      throw ParseError(path.string(), i + 2, "expected 'head tail relation'");
    }
  }
  return triples;
}

}  // namespace

std::vector<Triple> load_triples(const std::filesystem::path& path, Catalog& catalog) {
  auto in = detail::open_input(path);
  std::vector<Triple> triples;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = detail::strip_cr(raw);
    if (detail::is_blank(line)) continue;
    const auto fields = detail::split_on(line, '\t');
    if (fields.size() != 3) {
      throw ParseError(path.string(), line_no,
                       "expected 3 tab-separated fields, got " + std::to_string(fields.size()));
    }
    const EntityId head = catalog.intern_entity(fields[0]);
    const RelationId rel = catalog.add_relation(fields[1]);
    const EntityId tail = catalog.intern_entity(fields[2]);
    triples.push_back({head, rel, tail});
  }
  return triples;
}

std::vector<Triple> load_links(const std::filesystem::path& path, std::string_view relation,
                               Catalog& catalog) {
  auto in = detail::open_input(path);
  const RelationId rel = catalog.add_relation(relation);
  std::vector<Triple> triples;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = detail::strip_cr(raw);
    if (detail::is_blank(line)) continue;
    const auto fields = detail::split_on(line, '\t');
    if (fields.size() != 2 && fields.size() != 3) {
      throw ParseError(path.string(), line_no,
                       "expected 2 or 3 tab-separated fields, got " + std::to_string(fields.size()));
    }
    triples.push_back(
        {catalog.intern_entity(fields.front()), rel, catalog.intern_entity(fields.back())});
  }
  return triples;
}

std::size_t AnnotationSet::pair_count() const {
  std::size_t n = 0;
  for (const auto& e : entries) n += e.terms.size();
  return n;
}

AnnotationSet load_annotations(const std::filesystem::path& path, EntityKind kind,
                               std::string_view source, Catalog& catalog) {
  AnnotationSet set;
  set.source = std::string(source);
  set.kind = kind;
  set.relation = catalog.add_relation(std::string(kAnnotationRelationPrefix) + set.source);

  auto in = detail::open_input(path);
  std::unordered_map<EntityId, std::size_t> slot;
  std::vector<std::unordered_set<EntityId>> seen;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = detail::strip_cr(raw);
    if (detail::is_blank(line)) continue;
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos) {
      throw ParseError(path.string(), line_no, "expected entity<TAB>terms");
    }
    const auto entity_name = line.substr(0, tab);
    const auto terms = detail::split_whitespace(line.substr(tab + 1));
    const EntityId entity = catalog.add_entity(entity_name, kind);
    auto [it, inserted] = slot.try_emplace(entity, set.entries.size());
    if (inserted) {
      set.entries.push_back({entity, {}});
      seen.emplace_back();
    }
    auto& entry = set.entries[it->second];
    auto& entry_seen = seen[it->second];
    for (const auto term_name : terms) {
      if (term_name == entity_name) {
        throw ParseError(path.string(), line_no,
                         "self-annotation of '" + std::string(entity_name) + "'");
      }
      const EntityId term = catalog.intern_entity(term_name);
      if (entry_seen.insert(term).second) entry.terms.push_back(term);
    }
  }
  return set;
}

KnowledgeGraph::KnowledgeGraph(std::shared_ptr<const Catalog> catalog, std::vector<Triple> triples,
                               std::string variant)
    : catalog_(std::move(catalog)), variant_(std::move(variant)) {
  const std::size_t n_entities = catalog_->entity_count();
  const std::size_t n_relations = catalog_->relation_count();
  std::unordered_set<Triple, TripleHash> seen;
  triples_.reserve(triples.size());
  for (const auto& t : triples) {
    if (t.head >= n_entities || t.tail >= n_entities || t.relation >= n_relations) {
      throw ConsistencyError("triple references an id outside the catalog");
    }
    if (seen.insert(t).second) triples_.push_back(t);
  }
  sorted_ = triples_;
  std::sort(sorted_.begin(), sorted_.end());

  offsets_.assign(n_entities + 1, 0);
  for (const auto& t : triples_) ++offsets_[t.head + 1];
  for (std::size_t i = 0; i < n_entities; ++i) offsets_[i + 1] += offsets_[i];
  edges_.resize(triples_.size());
  std::vector<std::size_t> cursor(offsets_.begin(), offsets_.end() - 1);
  for (const auto& t : triples_) edges_[cursor[t.head]++] = {t.relation, t.tail};

  annotated_.assign(n_entities, false);
  std::vector<bool> annotation_rel(n_relations);
  for (RelationId r = 0; r < n_relations; ++r) annotation_rel[r] = is_annotation_relation(*catalog_, r);
  for (const auto& t : triples_) {
    if (annotation_rel[t.relation]) annotated_[t.head] = true;
  }
}

std::span<const OutEdge> KnowledgeGraph::out_edges(EntityId entity) const {
  if (entity + 1 >= offsets_.size()) return {};
  return std::span(edges_).subspan(offsets_[entity], offsets_[entity + 1] - offsets_[entity]);
}

bool KnowledgeGraph::contains(const Triple& t) const {
  return std::binary_search(sorted_.begin(), sorted_.end(), t);
}

bool KnowledgeGraph::annotated(EntityId entity) const {
  return entity < annotated_.size() && annotated_[entity];
}

KgStats KnowledgeGraph::stats() const {
  KgStats s;
  s.triples = triples_.size();
  const auto& rels = catalog_->relations();
  const auto ld = rels.find(kLogicalDefinitionRelation);
  const auto map = rels.find(kOntologyMappingRelation);
  std::vector<std::size_t> per_rel(relation_count());
  std::vector<bool> used(entity_count());
  for (const auto& t : triples_) {
    ++per_rel[t.relation];
    used[t.head] = used[t.tail] = true;
  }
  for (RelationId r = 0; r < per_rel.size(); ++r) {
    if (per_rel[r] > 0) s.per_relation[rels.name_of(r)] = per_rel[r];
  }
  s.logical_definitions = ld ? per_rel[*ld] : 0;
  s.ontology_mappings = map ? per_rel[*map] : 0;
  s.associations = per_rel[catalog_->association()];
  for (EntityId e = 0; e < entity_count(); ++e) {
    const auto kind = catalog_->kind(e);
    if (kind == EntityKind::OntologyClass && used[e]) ++s.classes;
    if (kind == EntityKind::Gene && annotated_[e]) ++s.annotated_genes;
    if (kind == EntityKind::Disease && annotated_[e]) ++s.annotated_diseases;
  }
  return s;
}

KnowledgeGraph assemble_kg(std::shared_ptr<const Catalog> catalog, const KgIngredients& parts,
                           std::string variant) {
  const Catalog& cat = *catalog;
  std::vector<Triple> triples = parts.ontology;
  std::vector<bool> annotated(cat.entity_count(), false);
  for (const auto& set : parts.annotations) {
    for (const auto& entry : set.entries) {
      if (!entry.terms.empty()) annotated.at(entry.entity) = true;
      for (EntityId term : entry.terms) triples.push_back({entry.entity, set.relation, term});
    }
  }
  for (const auto& link : parts.extra_links) {
    if (cat.kind(link.head) != EntityKind::OntologyClass ||
        cat.kind(link.tail) != EntityKind::OntologyClass) {
      throw ConsistencyError("link " + cat.entities().name_of(link.head) + " -> " +
                             cat.entities().name_of(link.tail) +
                             " must connect two ontology classes");
    }
    triples.push_back(link);
  }
  if (parts.training_edges) {
    std::ostringstream offending;
    std::size_t bad = 0;
    for (const auto& p : *parts.training_edges) {
      const bool ok = p.positive() && p.gene < cat.entity_count() &&
                      p.disease < cat.entity_count() && cat.kind(p.gene) == EntityKind::Gene &&
                      cat.kind(p.disease) == EntityKind::Disease && annotated[p.gene] &&
                      annotated[p.disease];
      if (!ok) {
        if (bad < 10) {
          offending << (bad ? ", " : "") << "("
                    << (p.gene < cat.entity_count() ? cat.entities().name_of(p.gene) : "?") << ", "
                    << (p.disease < cat.entity_count() ? cat.entities().name_of(p.disease) : "?")
                    << ")";
        }
        ++bad;
        continue;
      }
      triples.push_back({p.gene, cat.association(), p.disease});
    }
    if (bad > 0) {
      throw ConsistencyError(std::to_string(bad) +
                             " training edge(s) reference negative, unknown or unannotated "
                             "entities: " + offending.str());
    }
  }
  return KnowledgeGraph(std::move(catalog), std::move(triples), std::move(variant));
}

void export_numeric(const KnowledgeGraph& kg, const SplitDataset& split,
                    const std::filesystem::path& out_dir) {
  const Catalog& cat = kg.catalog();
  std::vector<Triple> test;
  for (const auto* part : {&split.train_pos, &split.train_neg, &split.test_pos, &split.test_neg}) {
    for (const auto& p : *part) {
      if (p.gene >= cat.entity_count() || p.disease >= cat.entity_count() ||
          cat.kind(p.gene) != EntityKind::Gene || cat.kind(p.disease) != EntityKind::Disease) {
        throw ConsistencyError("split pair (" + std::to_string(p.gene) + ", " +
                               std::to_string(p.disease) + ") is not a gene-disease pair of KG " +
                               kg.variant());
      }
    }
  }
  for (const auto& p : split.test_pos) test.push_back({p.gene, cat.association(), p.disease});

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

  write_id_file(out_dir / "entity2id.txt", cat.entities().names());
  write_id_file(out_dir / "relation2id.txt", cat.relations().names());
  {
    const auto path = out_dir / "association_entities.txt";
    auto out = detail::open_output(path);
    for (EntityId e = 0; e < cat.entity_count(); ++e) {
      if (cat.kind(e) != EntityKind::OntologyClass) {
        out << cat.entities().name_of(e) << '\t' << e << '\n';
      }
    }
    detail::check_written(out, path);
  }
  write_triple_file(out_dir / "train2id.txt", kg.triples());
  write_triple_file(out_dir / "test2id.txt", test);
}

NumericKg load_numeric(const std::filesystem::path& dir) {
  NumericKg kg;
  kg.entities = read_id_file(dir / "entity2id.txt");
  kg.relations = read_id_file(dir / "relation2id.txt");
  {
    const auto path = dir / "association_entities.txt";
    auto in = detail::open_input(path);
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
      ++line_no;
      const auto fields = detail::split_on(detail::strip_cr(raw), '\t');
      if (fields.size() == 1 && fields[0].empty()) continue;
      if (fields.size() != 2) throw ParseError(path.string(), line_no, "expected name<TAB>id");
      kg.association_entities.push_back(static_cast<EntityId>(std::stoul(std::string(fields[1]))));
    }
  }
  kg.train = read_triple_file(dir / "train2id.txt");
  kg.test = read_triple_file(dir / "test2id.txt");
  for (const auto* list : {&kg.train, &kg.test}) {
    for (const auto& t : *list) {
      if (t.head >= kg.entities.size() || t.tail >= kg.entities.size() ||
          t.relation >= kg.relations.size()) {
        throw ConsistencyError("numeric triple references an unknown id in " + dir.string());
      }
    }
  }
  return kg;
}

}  // namespace gdakg
