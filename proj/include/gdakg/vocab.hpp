#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "gdakg/types.hpp"

namespace gdakg {

// Bijection between strings and dense ids assigned at first sight.
class Vocabulary {
 public:
  std::uint32_t intern(std::string_view name);
  std::optional<std::uint32_t> find(std::string_view name) const;
  // Throws ConsistencyError for unknown names.
  std::uint32_t id_of(std::string_view name) const;
  const std::string& name_of(std::uint32_t id) const;

  std::size_t size() const { return names_.size(); }
  std::span<const std::string> names() const { return names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::uint32_t> ids_;
};

// Entity and relation vocabularies of one KG build, plus the kind of every
// entity. The association relation is always registered, as relation 0.
class Catalog {
 public:
  Catalog();

  // Registers `name` with `kind`. An entity first seen as an ontology class
  // may later be promoted to Gene or Disease; Gene/Disease conflicts throw.
  EntityId add_entity(std::string_view name, EntityKind kind);
  // Registers `name` as an ontology class unless it is already known.
  EntityId intern_entity(std::string_view name);
  RelationId add_relation(std::string_view name) { return relations_.intern(name); }

  EntityKind kind(EntityId id) const { return kinds_.at(id); }
  std::span<const EntityKind> kinds() const { return kinds_; }

  const Vocabulary& entities() const { return entities_; }
  const Vocabulary& relations() const { return relations_; }
  std::size_t entity_count() const { return entities_.size(); }
  std::size_t relation_count() const { return relations_.size(); }

  RelationId association() const { return association_; }

 private:
  Vocabulary entities_;
  Vocabulary relations_;
  std::vector<EntityKind> kinds_;
  RelationId association_ = 0;
};

}  // namespace gdakg
