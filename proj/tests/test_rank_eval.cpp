#include <doctest.h>

#include <algorithm>
#include <memory>
#include <numeric>

#include "gdakg/error.hpp"
#include "gdakg/evaluation.hpp"
#include "support.hpp"

using namespace gdakg;

namespace {

UnifiedRanking listed(std::vector<EntityId> ids, EntityId query = 99) {
  UnifiedRanking r;
  r.query = query;
  double s = 1.0;
  for (auto id : ids) r.candidates.push_back({id, s -= 0.01});
  return r;
}

CandidateRanking lp_ranking(std::vector<EntityId> ids) {
  CandidateRanking r;
  double s = 1.0;
  for (auto id : ids) r.candidates.push_back({id, s -= 0.01});
  return r;
}

std::vector<EntityId> order(const UnifiedRanking& r) {
  std::vector<EntityId> out;
  for (const auto& c : r.candidates) out.push_back(c.entity);
  return out;
}

PredictionRow row(EntityId g, EntityId d, double p, Label label = Label::Negative) {
  return {{g, d, label}, 1 - p, p, p > 0.5};
}

}  // namespace

TEST_CASE("unify_lp filters in order and is idempotent") {
  const auto r = unify_lp(lp_ranking({5, 9, 2}), QueryDirection::GeneToDisease, {2, 9}, "TransE");
  CHECK(order(r) == std::vector<EntityId>{9, 2});
  CHECK(r.method == "TransE");
  CHECK(r.source == RankingSource::LinkPrediction);
  CHECK(unify_lp(lp_ranking({5, 9, 2}), QueryDirection::GeneToDisease, {7, 8}, "x").candidates.empty());

  CandidateRanking again;
  again.candidates = r.candidates;
  CHECK(order(unify_lp(again, QueryDirection::GeneToDisease, {2, 9}, "TransE")) == order(r));

  const auto top = unify_lp(lp_ranking({1, 2, 3, 4, 5}), QueryDirection::GeneToDisease, {1, 3, 4, 5}, "x", 2);
  CHECK(order(top) == std::vector<EntityId>{1, 3});
}

TEST_CASE("ranking the full pool then filtering equals ranking the test pool") {
  Rng rng(3);
  for (auto kind : kLinkPredictionModels) {
    const auto m = testing::random_model(kind, 30, 2, 6, 5);
    for (int trial = 0; trial < 10; ++trial) {
      const auto query = static_cast<EntityId>(rng.index(30));
      std::vector<EntityId> full(30);
      std::iota(full.begin(), full.end(), 0);
      std::vector<EntityId> test;
      for (EntityId e = 0; e < 30; ++e) {
        if (rng.coin(0.4)) test.push_back(e);
      }
      if (test.empty() || (test.size() == 1 && test[0] == query)) continue;
      const std::unordered_set<EntityId> test_set(test.begin(), test.end());
      for (auto dir : kQueryDirections) {
        const auto via_full = unify_lp(rank_candidates(m, query, 1, lp_direction(dir), full), dir, test_set, "m");
        const auto direct = unify_lp(rank_candidates(m, query, 1, lp_direction(dir), test), dir, test_set, "m");
        CHECK(via_full.candidates == direct.candidates);
      }
    }
  }
}

TEST_CASE("unify_clf orders a query's test pairs by probability") {
  const std::vector<PredictionRow> preds{row(1, 10, 0.9), row(1, 11, 0.2), row(2, 10, 0.7)};
  const auto r = unify_clf(preds, 1, QueryDirection::GeneToDisease, "Hadamard+XGB");
  CHECK(order(r) == std::vector<EntityId>{10, 11});
  CHECK(r.source == RankingSource::NodePairClassification);

  const auto by_disease = unify_clf(preds, 10, QueryDirection::DiseaseToGene, "m");
  CHECK(order(by_disease) == std::vector<EntityId>{1, 2});

  const std::vector<PredictionRow> tied{row(1, 12, 0.5), row(1, 10, 0.5), row(1, 11, 0.5)};
  CHECK(order(unify_clf(tied, 1, QueryDirection::GeneToDisease, "m")) == std::vector<EntityId>{10, 11, 12});

  CHECK_THROWS_AS(unify_clf(preds, 3, QueryDirection::GeneToDisease, "m"), ConfigError);

  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<PredictionRow> many;
    for (EntityId g = 0; g < 5; ++g) {
      for (EntityId d = 100; d < 110; ++d) {
        if (rng.coin(0.5)) many.push_back(row(g, d, rng.uniform()));
      }
    }
    for (EntityId g = 0; g < 5; ++g) {
      const auto n = std::count_if(many.begin(), many.end(), [&](const PredictionRow& p) { return p.pair.gene == g; });
      if (n == 0) continue;
      CHECK(unify_clf(many, g, QueryDirection::GeneToDisease, "m").candidates.size() == static_cast<std::size_t>(n));
    }
  }
}

TEST_CASE("extract_ranks and the penalty rank") {
  const auto r = listed({1, 2, 3});
  const std::vector<EntityId> b{2};
  const auto rb = extract_ranks(r, b);
  REQUIRE(rb.size() == 1);
  CHECK(rb[0].rank == 2);
  CHECK(rb[0].found);

  const std::vector<EntityId> absent{7};
  const auto ra = extract_ranks(r, absent);
  CHECK(ra[0].rank == 1000);
  CHECK_FALSE(ra[0].found);

  const std::vector<EntityId> ac{1, 3};
  const auto rac = extract_ranks(r, ac);
  CHECK(rac[0].rank == 1);
  CHECK(rac[1].rank == 3);
}

TEST_CASE("hits@k worked examples") {
  const std::vector<RankRecord> mixed{{1, 1, 1, true}, {1, 2, 4, true}, {1, 3, 1000, false}};
  CHECK(hits_at_k(mixed, 3) == doctest::Approx(1.0 / 3.0));
  const std::vector<RankRecord> ones{{1, 1, 1, true}, {2, 1, 1, true}};
  CHECK(hits_at_k(ones, 1) == 1.0);
  const std::vector<RankRecord> none{{1, 1, 1000, false}, {2, 1, 1000, false}};
  CHECK(hits_at_k(none, 10) == 0.0);
  CHECK_THROWS_AS(hits_at_k(std::vector<RankRecord>{}, 1), ConfigError);
  CHECK_THROWS_AS(hits_at_k(ones, 0), ConfigError);

  // query 1: 1 of 1 hit; query 2: 1 of 3 hit
  const std::vector<RankRecord> uneven{
      {1, 5, 1, true}, {2, 6, 1, true}, {2, 7, 50, true}, {2, 8, 1000, false}};
  CHECK(hits_at_k(uneven, 1, HitsDenominator::PerAssociation) == doctest::Approx(0.5));
  CHECK(hits_at_k(uneven, 1, HitsDenominator::PerQuery) == doctest::Approx((1.0 + 1.0 / 3.0) / 2));
}

TEST_CASE("hits@k equals brute-force enumeration") {
  Rng rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<EntityId> pool(30);
    std::iota(pool.begin(), pool.end(), 0);
    rng.shuffle(std::span(pool));
    const std::vector<EntityId> cands(pool.begin(), pool.begin() + static_cast<long>(rng.index(21)));
    std::vector<EntityId> truths;
    const auto n_truth = 1 + rng.index(5);
    rng.shuffle(std::span(pool));
    truths.assign(pool.begin(), pool.begin() + static_cast<long>(n_truth));
    const auto records = extract_ranks(listed(cands), truths);
    double prev = 0;
    for (int k : {1, 3, 10}) {
      const double h = hits_at_k(records, k);
      CHECK(h == testing::brute_hits(cands, truths, k));
      CHECK(h >= prev);
      prev = h;
    }
    for (const auto& r : records) {
      if (!r.found) CHECK(r.rank == kPenaltyRank);
    }
  }
}

TEST_CASE("summaries and reports") {
  const std::vector<RankRecord> recs{{1, 5, 1, true}, {1, 6, 4, true}, {2, 6, 1000, false}};
  const auto row = summarize("G+H", "TransE", QueryDirection::GeneToDisease, recs,
                             HitsDenominator::PerAssociation);
  CHECK(row.queries == 2);
  CHECK(row.records == 3);
  CHECK(row.found == 2);
  CHECK(row.hits1 == doctest::Approx(1.0 / 3));
  CHECK(row.hits10 == doctest::Approx(2.0 / 3));

  EvalReport report;
  report.config_digest = "abc";
  report.seeds = {{"split", 1}, {"walks", 2}};
  report.rows = {row, summarize("G+H", "Hadamard+XGB", QueryDirection::DiseaseToGene, recs,
                                HitsDenominator::PerAssociation)};
  const auto json = report_to_json(report);
  CHECK(report_from_json(json) == report);
  CHECK(report_to_json(report_from_json(json)) == json);

  const auto tsv = report_to_tsv(report);
  CHECK(tsv.find("TransE@1") != std::string::npos);
  CHECK(tsv.find("Hadamard+XGB@10") != std::string::npos);
  CHECK(tsv.find("0.333") != std::string::npos);
}

TEST_CASE("case-study tables") {
  Catalog cat;
  const auto q = cat.add_entity("g", EntityKind::Gene);
  const auto d1 = cat.add_entity("d1", EntityKind::Disease);
  const auto d2 = cat.add_entity("d2", EntityKind::Disease);
  const auto d3 = cat.add_entity("d3", EntityKind::Disease);
  auto clf = listed({d2, d3, d1}, q);
  clf.method = "Hadamard+XGB";
  clf.source = RankingSource::NodePairClassification;
  auto lp = listed({d1}, q);
  lp.method = "TransE";
  const std::vector<UnifiedRanking> methods{clf, lp};
  const std::vector<EntityId> truths{d1, d2};
  const auto table = case_study(q, methods, truths);
  CHECK(table.truths.size() == truths.size());
  CHECK(table.truths[0] == d2);
  CHECK(table.ranks[0][0] == 1);
  CHECK_FALSE(table.ranks[0][1].has_value());
  CHECK(table.ranks[1][1] == 1);
  const auto tsv = case_study_to_tsv(table, cat);
  CHECK(tsv == "entity\tHadamard+XGB\tTransE\nd2\t1\t-\nd1\t3\t1\n");
}
