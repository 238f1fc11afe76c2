#include "gdakg/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <json.hpp>
#include <set>
#include <sstream>
#include <unordered_map>

#include "gdakg/error.hpp"

namespace gdakg {

std::string_view to_string(QueryDirection d) {
  return d == QueryDirection::GeneToDisease ? "gene-disease" : "disease-gene";
}

QueryDirection parse_direction(std::string_view text) {
  if (text == "gene-disease") return QueryDirection::GeneToDisease;
  if (text == "disease-gene") return QueryDirection::DiseaseToGene;
  throw ConfigError("unknown direction '" + std::string(text) +
                    "' (expected gene-disease or disease-gene)");
}

Direction lp_direction(QueryDirection d) {
  return d == QueryDirection::GeneToDisease ? Direction::PredictTail : Direction::PredictHead;
}

EntityKind query_kind(QueryDirection d) {
  return d == QueryDirection::GeneToDisease ? EntityKind::Gene : EntityKind::Disease;
}

EntityKind target_kind(QueryDirection d) {
  return d == QueryDirection::GeneToDisease ? EntityKind::Disease : EntityKind::Gene;
}

std::optional<int> UnifiedRanking::rank_of(EntityId e) const {
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (candidates[i].entity == e) return static_cast<int>(i + 1);
  }
  return std::nullopt;
}

UnifiedRanking unify_lp(const CandidateRanking& ranking, QueryDirection direction,
                        const std::unordered_set<EntityId>& test_entities, std::string method,
                        std::optional<std::size_t> top_k) {
  UnifiedRanking out;
  out.query = ranking.query;
  out.direction = direction;
  out.source = RankingSource::LinkPrediction;
  out.method = std::move(method);
  for (const auto& c : ranking.candidates) {
    if (top_k && out.candidates.size() >= *top_k) break;
    if (test_entities.contains(c.entity)) out.candidates.push_back(c);
  }
  return out;
}

UnifiedRanking unify_clf(std::span<const PredictionRow> predictions, EntityId query,
                         QueryDirection direction, std::string method) {
  UnifiedRanking out;
  out.query = query;
  out.direction = direction;
  out.source = RankingSource::NodePairClassification;
  out.method = std::move(method);
  std::unordered_map<EntityId, double> best;
  for (const auto& row : predictions) {
    const bool gene_query = direction == QueryDirection::GeneToDisease;
    const EntityId q = gene_query ? row.pair.gene : row.pair.disease;
    if (q != query) continue;
    const EntityId partner = gene_query ? row.pair.disease : row.pair.gene;
    auto [it, inserted] = best.emplace(partner, row.p_positive);
    if (!inserted) it->second = std::max(it->second, row.p_positive);
  }
  if (best.empty()) {
    throw ConfigError("query entity " + std::to_string(query) + " has no predictions");
  }
  for (const auto& [e, p] : best) out.candidates.push_back({e, p});
  std::sort(out.candidates.begin(), out.candidates.end(),
            [](const ScoredCandidate& a, const ScoredCandidate& b) {
              if (a.score != b.score) return a.score > b.score;
              return a.entity < b.entity;
            });
  return out;
}

std::vector<RankRecord> extract_ranks(const UnifiedRanking& ranking,
                                      std::span<const EntityId> truths) {
  std::unordered_map<EntityId, int> position;
  for (std::size_t i = 0; i < ranking.candidates.size(); ++i) {
    position.emplace(ranking.candidates[i].entity, static_cast<int>(i + 1));
  }
  std::vector<RankRecord> out;
  out.reserve(truths.size());
  for (EntityId t : truths) {
    RankRecord r{ranking.query, t, kPenaltyRank, false};
    if (auto it = position.find(t); it != position.end()) {
      r.rank = it->second;
      r.found = true;
    }
    out.push_back(r);
  }
  return out;
}

std::string_view to_string(HitsDenominator d) {
  return d == HitsDenominator::PerAssociation ? "per-association" : "per-query";
}

HitsDenominator parse_denominator(std::string_view text) {
  if (text == "per-association") return HitsDenominator::PerAssociation;
  if (text == "per-query") return HitsDenominator::PerQuery;
  throw ConfigError("unknown hits denominator '" + std::string(text) + "'");
}

double hits_at_k(std::span<const RankRecord> records, int k, HitsDenominator mode) {
  if (records.empty()) throw ConfigError("hits@k of an empty record set");
  if (k < 1) throw ConfigError("hits@k needs k >= 1");
  if (mode == HitsDenominator::PerAssociation) {
    std::size_t hits = 0;
    for (const auto& r : records) hits += r.rank <= k ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(records.size());
  }
  std::map<EntityId, std::pair<std::size_t, std::size_t>> per_query;  // hits, total
  for (const auto& r : records) {
    auto& [h, n] = per_query[r.query];
    h += r.rank <= k ? 1 : 0;
    ++n;
  }
  double s = 0.0;
  for (const auto& [_, hn] : per_query) {
    s += static_cast<double>(hn.first) / static_cast<double>(hn.second);
  }
  return s / static_cast<double>(per_query.size());
}

EvalRow summarize(std::string variant, std::string method, QueryDirection direction,
                  std::span<const RankRecord> records, HitsDenominator mode) {
  EvalRow row;
  row.variant = std::move(variant);
  row.method = std::move(method);
  row.direction = direction;
  row.hits1 = hits_at_k(records, 1, mode);
  row.hits3 = hits_at_k(records, 3, mode);
  row.hits10 = hits_at_k(records, 10, mode);
  std::set<EntityId> queries;
  for (const auto& r : records) {
    queries.insert(r.query);
    row.found += r.found ? 1 : 0;
  }
  row.queries = queries.size();
  row.records = records.size();
  return row;
}

std::string report_to_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["config_digest"] = report.config_digest;
  j["seeds"] = report.seeds;
  j["hits_denominator"] = std::string(to_string(report.denominator));
  nlohmann::ordered_json results = nlohmann::ordered_json::object();
  for (const auto& r : report.rows) {
    results[r.variant][r.method][std::string(to_string(r.direction))] = {
        {"hits@1", r.hits1}, {"hits@3", r.hits3},   {"hits@10", r.hits10},
        {"queries", r.queries}, {"records", r.records}, {"found", r.found}};
  }
  j["results"] = results;
  return j.dump(2) + "\n";
}

EvalReport report_from_json(const std::string& text) {
  EvalReport report;
  try {
    const auto j = nlohmann::ordered_json::parse(text);
    report.config_digest = j.at("config_digest").get<std::string>();
    report.seeds = j.at("seeds").get<std::map<std::string, std::uint64_t>>();
    report.denominator = parse_denominator(j.at("hits_denominator").get<std::string>());
    for (const auto& [variant, methods] : j.at("results").items()) {
      for (const auto& [method, dirs] : methods.items()) {
        for (const auto& [dir, v] : dirs.items()) {
          EvalRow r;
          r.variant = variant;
          r.method = method;
          r.direction = parse_direction(dir);
          r.hits1 = v.at("hits@1").get<double>();
          r.hits3 = v.at("hits@3").get<double>();
          r.hits10 = v.at("hits@10").get<double>();
          r.queries = v.at("queries").get<std::size_t>();
          r.records = v.at("records").get<std::size_t>();
          r.found = v.at("found").get<std::size_t>();
          report.rows.push_back(std::move(r));
        }
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed report: ") + e.what());
  }
  return report;
}

namespace {

std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

}  // namespace

std::string report_to_tsv(const EvalReport& report) {
  std::vector<std::string> methods, variants;
  auto remember = [](std::vector<std::string>& v, const std::string& s) {
    if (std::find(v.begin(), v.end(), s) == v.end()) v.push_back(s);
  };
  for (const auto& r : report.rows) {
    remember(methods, r.method);
    remember(variants, r.variant);
  }
  std::ostringstream out;
  out << "direction\tvariant";
  for (const auto& m : methods) out << '\t' << m << "@1\t" << m << "@3\t" << m << "@10";
  out << '\n';
  for (auto dir : kQueryDirections) {
    for (const auto& v : variants) {
      bool any = false;
      std::ostringstream line;
      line << to_string(dir) << '\t' << v;
      for (const auto& m : methods) {
        auto it = std::find_if(report.rows.begin(), report.rows.end(), [&](const EvalRow& r) {
          return r.direction == dir && r.variant == v && r.method == m;
        });
        if (it == report.rows.end()) {
          line << "\t\t\t";
        } else {
          any = true;
          line << '\t' << fixed3(it->hits1) << '\t' << fixed3(it->hits3) << '\t'
               << fixed3(it->hits10);
        }
      }
      if (any) out << line.str() << '\n';
    }
  }
  return out.str();
}

CaseStudyTable case_study(EntityId query, std::span<const UnifiedRanking> methods,
                          std::span<const EntityId> truths) {
  CaseStudyTable t;
  t.query = query;
  for (const auto& m : methods) {
    if (m.query != query) {
      throw ConfigError("case study: ranking '" + m.method + "' is for a different query");
    }
    t.methods.push_back(m.method);
  }
  std::vector<std::vector<RankRecord>> per_method;
  for (const auto& m : methods) per_method.push_back(extract_ranks(m, truths));

  std::vector<std::size_t> order(truths.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  if (!methods.empty()) {
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      const auto& ra = per_method[0][a];
      const auto& rb = per_method[0][b];
      if (ra.rank != rb.rank) return ra.rank < rb.rank;
      return truths[a] < truths[b];
    });
  }
  for (auto i : order) {
    t.truths.push_back(truths[i]);
    std::vector<std::optional<int>> row;
    for (const auto& recs : per_method) {
      row.push_back(recs[i].found ? std::optional<int>(recs[i].rank) : std::nullopt);
    }
    t.ranks.push_back(std::move(row));
  }
  return t;
}

std::string case_study_to_tsv(const CaseStudyTable& table, const Catalog& catalog) {
  std::ostringstream out;
  out << "entity";
  for (const auto& m : table.methods) out << '\t' << m;
  out << '\n';
  for (std::size_t i = 0; i < table.truths.size(); ++i) {
    out << catalog.entities().name_of(table.truths[i]);
    for (const auto& cell : table.ranks[i]) {
      out << '\t';
      if (cell) {
        out << *cell;
      } else {
        out << '-';
      }
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace gdakg
