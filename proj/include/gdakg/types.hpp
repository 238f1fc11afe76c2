#pragma once

#include <compare>
#include <cstdint>
#include <string_view>

namespace gdakg {

// Dense handles, contiguous from 0 within one Catalog.
using EntityId = std::uint32_t;
using RelationId = std::uint32_t;

enum class EntityKind : std::uint8_t { OntologyClass, Gene, Disease };

std::string_view to_string(EntityKind kind);
EntityKind parse_entity_kind(std::string_view text);

struct Triple {
  EntityId head = 0;
  RelationId relation = 0;
  EntityId tail = 0;

  friend auto operator<=>(const Triple&, const Triple&) = default;
};

enum class Label : std::uint8_t { Negative = 0, Positive = 1 };

// A labeled gene-disease pair. Both ids refer to the same Catalog.
struct GdaPair {
  EntityId gene = 0;
  EntityId disease = 0;
  Label label = Label::Positive;

  bool positive() const { return label == Label::Positive; }
  friend auto operator<=>(const GdaPair&, const GdaPair&) = default;
};

// Relation labels with fixed meaning across every KG variant.
inline constexpr std::string_view kAssociationRelation = "association";
inline constexpr std::string_view kLogicalDefinitionRelation = "logicalDefinition";
inline constexpr std::string_view kOntologyMappingRelation = "ontologyMapping";
inline constexpr std::string_view kAnnotationRelationPrefix = "hasAnnotation_";

}  // namespace gdakg
