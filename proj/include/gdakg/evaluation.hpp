#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "gdakg/classify.hpp"
#include "gdakg/link_prediction.hpp"
#include "gdakg/vocab.hpp"

namespace gdakg {

// Unranked truths get this rank.
inline constexpr int kPenaltyRank = 1000;

enum class QueryDirection : std::uint8_t { GeneToDisease, DiseaseToGene };

inline constexpr QueryDirection kQueryDirections[] = {QueryDirection::GeneToDisease,
                                                      QueryDirection::DiseaseToGene};

std::string_view to_string(QueryDirection d);  // "gene-disease" / "disease-gene"
QueryDirection parse_direction(std::string_view text);
// Gene queries predict association tails, disease queries predict heads.
Direction lp_direction(QueryDirection d);
EntityKind query_kind(QueryDirection d);
EntityKind target_kind(QueryDirection d);

enum class RankingSource : std::uint8_t { LinkPrediction, NodePairClassification };

struct UnifiedRanking {
  EntityId query = 0;
  QueryDirection direction = QueryDirection::GeneToDisease;
  RankingSource source = RankingSource::LinkPrediction;
  std::string method;
  std::vector<ScoredCandidate> candidates;  // descending likelihood

  // 1-based rank of `e`, if listed.
  std::optional<int> rank_of(EntityId e) const;
};

// Order-preserving restriction to `test_entities`. With `top_k` set only the
// first top_k survivors are kept.
UnifiedRanking unify_lp(const CandidateRanking& ranking, QueryDirection direction,
                        const std::unordered_set<EntityId>& test_entities, std::string method,
                        std::optional<std::size_t> top_k = std::nullopt);

// Every test partner of `query`, ordered by p_pos descending then id.
// Throws ConfigError when no row contains the query.
UnifiedRanking unify_clf(std::span<const PredictionRow> predictions, EntityId query,
                         QueryDirection direction, std::string method);

struct RankRecord {
  EntityId query = 0;
  EntityId truth = 0;
  int rank = kPenaltyRank;
  bool found = false;
  friend bool operator==(const RankRecord&, const RankRecord&) = default;
};

std::vector<RankRecord> extract_ranks(const UnifiedRanking& ranking,
                                      std::span<const EntityId> truths);

enum class HitsDenominator : std::uint8_t {
  PerAssociation,  // mean over records
  PerQuery,        // mean over queries of each query's hit fraction
};

std::string_view to_string(HitsDenominator d);
HitsDenominator parse_denominator(std::string_view text);

// Throws ConfigError on empty records or k < 1.
double hits_at_k(std::span<const RankRecord> records, int k,
                 HitsDenominator mode = HitsDenominator::PerAssociation);

struct EvalRow {
  std::string variant;
  std::string method;
  QueryDirection direction = QueryDirection::GeneToDisease;
  double hits1 = 0.0;
  double hits3 = 0.0;
  double hits10 = 0.0;
  std::size_t queries = 0;
  std::size_t records = 0;
  std::size_t found = 0;
  friend bool operator==(const EvalRow&, const EvalRow&) = default;
};

EvalRow summarize(std::string variant, std::string method, QueryDirection direction,
                  std::span<const RankRecord> records, HitsDenominator mode);

struct EvalReport {
  std::string config_digest;
  std::map<std::string, std::uint64_t> seeds;
  HitsDenominator denominator = HitsDenominator::PerAssociation;
  std::vector<EvalRow> rows;
  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

// Nested as {"results": {variant: {method: {direction: {...}}}}}.
std::string report_to_json(const EvalReport& report);
EvalReport report_from_json(const std::string& text);
// One line per (direction, variant); one hits@1/3/10 column triple per method.
std::string report_to_tsv(const EvalReport& report);

struct CaseStudyTable {
  EntityId query = 0;
  std::vector<std::string> methods;
  std::vector<EntityId> truths;                  // one per row
  std::vector<std::vector<std::optional<int>>> ranks;  // [row][method]
};

// Rows ordered by the first method's rank (unranked last, then by id).
CaseStudyTable case_study(EntityId query, std::span<const UnifiedRanking> methods,
                          std::span<const EntityId> truths);
// Header "entity<TAB>method..." then one row per truth, "-" for unranked.
std::string case_study_to_tsv(const CaseStudyTable& table, const Catalog& catalog);

}  // namespace gdakg
