#include "gdakg/vocab.hpp"

#include "gdakg/error.hpp"

namespace gdakg {

std::string_view to_string(EntityKind kind) {
  switch (kind) {
    case EntityKind::OntologyClass:
      return "class";
    case EntityKind::Gene:
      return "gene";
    case EntityKind::Disease:
      return "disease";
  }
  return "class";
}

EntityKind parse_entity_kind(std::string_view text) {
  if (text == "gene") return EntityKind::Gene;
  if (text == "disease") return EntityKind::Disease;
  if (text == "class") return EntityKind::OntologyClass;
  throw ConfigError("unknown entity kind '" + std::string(text) + "'");
}

std::uint32_t Vocabulary::intern(std::string_view name) {
  std::string key(name);
  if (auto it = ids_.find(key); it != ids_.end()) return it->second;
  const auto id = static_cast<std::uint32_t>(names_.size());
  names_.push_back(key);
  ids_.emplace(std::move(key), id);
  return id;
}

std::optional<std::uint32_t> Vocabulary::find(std::string_view name) const {
  if (auto it = ids_.find(std::string(name)); it != ids_.end()) return it->second;
  return std::nullopt;
}

std::uint32_t Vocabulary::id_of(std::string_view name) const {
  if (auto id = find(name)) return *id;
  throw ConsistencyError("unknown identifier '" + std::string(name) + "'");
}

const std::string& Vocabulary::name_of(std::uint32_t id) const {
  if (id >= names_.size()) {
    throw ConsistencyError("id " + std::to_string(id) + " out of range (size " +
                           std::to_string(names_.size()) + ")");
  }
  return names_[id];
}

Catalog::Catalog() { association_ = relations_.intern(kAssociationRelation); }

EntityId Catalog::add_entity(std::string_view name, EntityKind kind) {
  const EntityId id = entities_.intern(name);
  if (id == kinds_.size()) {
    kinds_.push_back(kind);
    return id;
  }
  EntityKind& current = kinds_[id];
  if (current == kind || kind == EntityKind::OntologyClass) return id;
  if (current == EntityKind::OntologyClass) {
    current = kind;
    return id;
  }
  throw ConsistencyError("entity '" + std::string(name) + "' registered as both " +
                         std::string(to_string(current)) + " and " + std::string(to_string(kind)));
}

EntityId Catalog::intern_entity(std::string_view name) {
  return add_entity(name, EntityKind::OntologyClass);
}

}  // namespace gdakg
