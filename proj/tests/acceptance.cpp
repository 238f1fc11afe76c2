// Acceptance checks; one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gdakg/config.hpp"
#include "gdakg/evaluation.hpp"
#include "gdakg/pipeline.hpp"
#include "gdakg/split.hpp"
#include "gdakg/synthetic.hpp"
#include "support.hpp"

using namespace gdakg;
using Clock = std::chrono::steady_clock;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void report(const char* name, const std::function<Verdict()>& check) {
  Verdict v;
  try {
    v = check();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  if (!v.pass) ++failures;
  std::printf("%s  %s: %s\n", v.pass ? "PASS" : "FAIL", name, v.detail.c_str());
  std::fflush(stdout);
}

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Verdict scoring_oracles() {
  const auto start = Clock::now();
  double worst = 0;
  std::size_t checked = 0;
  for (auto kind : kLinkPredictionModels) {
    for (std::size_t dim : {2u, 8u, 64u}) {
      const auto m = testing::random_model(kind, 50, 5, dim, 1000 + dim);
      Rng rng(dim * 13 + static_cast<std::size_t>(kind));
      for (int i = 0; i < 1000; ++i) {
        const auto t = testing::random_triple(m, rng);
        worst = std::max(worst, std::abs(score(m, t.head, t.relation, t.tail) -
                                         testing::naive::score(m, t.head, t.relation, t.tail)));
        ++checked;
      }
    }
  }
  const double took = seconds_since(start);
  return {worst < 1e-9 && took < 10.0,
          fmt("%zu triples, max |lib - naive| = %.2e, %.2f s", checked, worst, took)};
}

Verdict reductions() {
  Rng rng(77);
  double dev_complex = 0, dev_transd = 0, dev_transh = 0;
  for (int i = 0; i < 100; ++i) {
    const std::size_t dim = 2 + rng.index(63);
    const auto seed = static_cast<std::uint64_t>(i);

    auto cx = testing::random_model(ModelKind::ComplEx, 6, 2, dim, seed);
    std::fill(cx.entity_aux.data.begin(), cx.entity_aux.data.end(), 0.0);
    std::fill(cx.relation_aux.data.begin(), cx.relation_aux.data.end(), 0.0);
    auto dm = init_model(ModelKind::DistMult, 6, 2, dim, seed);
    dm.entity = cx.entity;
    dm.relation = cx.relation;
    auto t = testing::random_triple(cx, rng);
    dev_complex = std::max(dev_complex, std::abs(score(cx, t.head, t.relation, t.tail) -
                                                 score(dm, t.head, t.relation, t.tail)));

    auto td = testing::random_model(ModelKind::TransD, 6, 2, dim, seed);
    std::fill(td.entity_aux.data.begin(), td.entity_aux.data.end(), 0.0);
    auto te = init_model(ModelKind::TransE, 6, 2, dim, seed);
    te.entity = td.entity;
    te.relation = td.relation;
    t = testing::random_triple(td, rng);
    const double d_te = distance(te, t.head, t.relation, t.tail);
    dev_transd = std::max(dev_transd, std::abs(distance(td, t.head, t.relation, t.tail) - d_te * d_te));

    // Unit normals with head and tail rows moved onto the hyperplane.
    auto th = testing::random_model(ModelKind::TransH, 6, 2, dim, seed);
    t = testing::random_triple(th, rng);
    auto w = th.relation_aux.row(t.relation);
    const double wn = std::sqrt(std::inner_product(w.begin(), w.end(), w.begin(), 0.0));
    for (auto& v : w) v /= wn;
    for (EntityId e : {t.head, t.tail}) {
      auto row = th.entity.row(e);
      const double p = std::inner_product(w.begin(), w.end(), row.begin(), 0.0);
      for (std::size_t k = 0; k < dim; ++k) row[k] -= p * w[k];
    }
    auto te2 = init_model(ModelKind::TransE, 6, 2, dim, seed);
    te2.entity = th.entity;
    te2.relation = th.relation;
    const double d_te2 = distance(te2, t.head, t.relation, t.tail);
    dev_transh = std::max(dev_transh, std::abs(distance(th, t.head, t.relation, t.tail) - d_te2 * d_te2));
  }
  const bool ok = dev_complex < 1e-9 && dev_transd < 1e-9 && dev_transh < 1e-9;
  return {ok, fmt("max deviation ComplEx->DistMult %.2e, TransD->TransE %.2e, TransH->TransE-l2^2 %.2e",
                  dev_complex, dev_transd, dev_transh)};
}

Verdict gradient_checks() {
  const auto start = Clock::now();
  double worst = 0;
  std::string worst_model;
  for (auto kind : kLinkPredictionModels) {
    for (std::uint64_t i = 0; i < 50; ++i) {
      const double e = testing::gradient_check_instance(kind, 8, 500 + i);
      if (e > worst) {
        worst = e;
        worst_model = std::string(to_string(kind));
      }
    }
  }
  const double took = seconds_since(start);
  return {worst < 1e-4 && took < 30.0,
          fmt("6 models x 50 instances at dim 8, max relative error %.2e (%s), %.2f s", worst,
              worst_model.c_str(), took)};
}

Verdict hits_oracle() {
  Rng rng(2024);
  int mismatches = 0, non_monotone = 0, penalties = 0;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<EntityId> pool(40);
    std::iota(pool.begin(), pool.end(), 0);
    rng.shuffle(std::span(pool));
    const std::vector<EntityId> cands(pool.begin(), pool.begin() + static_cast<long>(1 + rng.index(20)));
    rng.shuffle(std::span(pool));
    const std::vector<EntityId> truths(pool.begin(), pool.begin() + static_cast<long>(1 + rng.index(5)));
    UnifiedRanking r;
    double s = 0;
    for (auto c : cands) r.candidates.push_back({c, s -= 1});
    const auto records = extract_ranks(r, truths);
    for (const auto& rec : records) penalties += rec.rank == kPenaltyRank;
    double prev = 0;
    for (int k : {1, 3, 10}) {
      const double h = hits_at_k(records, k);
      mismatches += h != testing::brute_hits(cands, truths, k);
      non_monotone += h < prev;
      prev = h;
    }
  }
  return {mismatches == 0 && non_monotone == 0 && penalties > 0,
          fmt("200 instances, %d mismatches, %d monotonicity violations, %d penalty records",
              mismatches, non_monotone, penalties)};
}

Verdict split_reproduction() {
  Rng rng(5);
  std::set<std::pair<EntityId, EntityId>> seen;
  std::vector<GdaPair> pos;
  while (pos.size() < 8189) {
    const auto g = static_cast<EntityId>(rng.index(400));
    const auto d = static_cast<EntityId>(400 + rng.index(300));
    if (seen.insert({g, d}).second) pos.push_back({g, d, Label::Positive});
  }
  auto pairs = pos;
  const auto neg = generate_negatives(pos, pos.size(), 1);
  pairs.insert(pairs.end(), neg.begin(), neg.end());
  const auto a = split_pairs(pairs, 0.7, 1);
  const auto b = split_pairs(pairs, 0.7, 1);
  std::set<std::pair<EntityId, EntityId>> all;
  bool disjoint = true;
  for (const auto* part : {&a.train_pos, &a.train_neg, &a.test_pos, &a.test_neg}) {
    for (const auto& p : *part) disjoint &= all.insert({p.gene, p.disease}).second;
  }
  const bool exact = disjoint && all.size() == pairs.size();
  const bool ok = a.train_pos.size() == 5732 && a == b && exact;
  return {ok, fmt("train positives %zu, test positives %zu, rerun identical: %s, exact partition: %s",
                  a.train_pos.size(), a.test_pos.size(), a == b ? "yes" : "no", exact ? "yes" : "no")};
}

// Pearson statistic over marginal counts, divided by the finite population
// factor since negatives are drawn without replacement.
double chi_square_p(const std::map<EntityId, double>& observed, const std::map<EntityId, double>& allowed,
                    double drawn, double population) {
  double stat = 0;
  for (const auto& [e, slots] : allowed) {
    const double expected = drawn * slots / population;
    const auto it = observed.find(e);
    const double o = it == observed.end() ? 0.0 : it->second;
    stat += (o - expected) * (o - expected) / expected;
  }
  stat /= (population - drawn) / (population - 1);
  const boost::math::chi_squared dist(static_cast<double>(allowed.size() - 1));
  return boost::math::cdf(boost::math::complement(dist, stat));
}

Verdict negative_sampling() {
  Rng rng(11);
  std::set<std::pair<EntityId, EntityId>> positive;
  std::vector<GdaPair> pos;
  constexpr EntityId kGenes = 150, kDiseases = 120;
  while (pos.size() < 3000) {
    const auto g = static_cast<EntityId>(rng.index(kGenes));
    const auto d = static_cast<EntityId>(kGenes + rng.index(kDiseases));
    if (positive.insert({g, d}).second) pos.push_back({g, d, Label::Positive});
  }
  const auto neg = generate_negatives(pos, 10000, 3);
  std::size_t collisions = 0;
  std::set<std::pair<EntityId, EntityId>> distinct;
  std::map<EntityId, double> gene_obs, disease_obs, gene_slots, disease_slots;
  for (const auto& n : neg) {
    collisions += positive.contains({n.gene, n.disease});
    distinct.insert({n.gene, n.disease});
    gene_obs[n.gene] += 1;
    disease_obs[n.disease] += 1;
  }
  for (EntityId g = 0; g < kGenes; ++g) gene_slots[g] = kDiseases;
  for (EntityId d = kGenes; d < kGenes + kDiseases; ++d) disease_slots[d] = kGenes;
  for (const auto& p : pos) {
    gene_slots[p.gene] -= 1;
    disease_slots[p.disease] -= 1;
  }
  const double population = static_cast<double>(kGenes) * kDiseases - static_cast<double>(pos.size());
  const double p_gene = chi_square_p(gene_obs, gene_slots, 10000, population);
  const double p_disease = chi_square_p(disease_obs, disease_slots, 10000, population);
  const bool ok = neg.size() == 10000 && collisions == 0 && distinct.size() == neg.size() &&
                  p_gene > 0.01 && p_disease > 0.01;
  return {ok, fmt("%zu negatives, %zu collisions, %zu duplicates, chi-square p (genes) %.3f, p (diseases) %.3f",
                  neg.size(), collisions, neg.size() - distinct.size(), p_gene, p_disease)};
}

struct Benchmark {
  testing::TempDir dir{"acceptance"};
  ExperimentConfig config;
  std::unique_ptr<Pipeline> pipeline;
  EvalReport report;
  double seconds = 0;
};

Verdict synthetic_benchmark(Benchmark& b) {
  const auto start = Clock::now();
  write_synthetic(b.dir.path(), SyntheticSpec{});
  b.config = load_config(b.dir / "config.json");
  b.config.output = b.dir / "out";
  b.config.deterministic = true;
  b.pipeline = std::make_unique<Pipeline>(b.config);
  b.report = b.pipeline->run();
  b.seconds = seconds_since(start);

  Catalog cat;
  const auto split = load_split(b.pipeline->split_dir(), cat);
  std::set<EntityId> targets;
  for (const auto* part : {&split.test_pos, &split.test_neg}) {
    for (const auto& p : *part) targets.insert(p.disease);
  }
  const double baseline = std::min(1.0, 10.0 / static_cast<double>(targets.size()));

  bool ok = b.seconds < 300.0;
  std::ostringstream lp, clf;
  for (const auto& row : b.report.rows) {
    if (row.direction != QueryDirection::GeneToDisease) continue;
    for (auto kind : kLinkPredictionModels) {
      if (row.method != to_string(kind)) continue;
      const double ratio = row.hits10 / baseline;
      ok &= ratio >= 3.0;
      lp << ' ' << row.method << ' ' << fmt("%.2fx", ratio);
    }
  }
  bool clf_seen = false;
  for (const auto& row : b.report.rows) {
    if (row.method != "Hadamard+XGB") continue;
    clf_seen = true;
    ok &= row.hits10 >= 0.8 && row.found == row.records;
    clf << ' ' << to_string(row.direction) << fmt(" %.3f", row.hits10) << " (" << row.found << '/'
        << row.records << " ranked)";
  }
  ok &= clf_seen;
  return {ok, fmt("baseline hits@10 %.3f (%zu test diseases); LP hits@10 vs baseline:%s; "
                  "Hadamard+XGB hits@10:%s; %.1f s",
                  baseline, targets.size(), lp.str().c_str(), clf.str().c_str(), b.seconds)};
}

Verdict case_study_format(Benchmark& b) {
  if (!b.pipeline) return {false, "benchmark pipeline unavailable"};
  Catalog cat;
  const auto split = load_split(b.pipeline->split_dir(), cat);
  std::map<std::string, std::size_t> truths;
  for (const auto& p : split.test_pos) ++truths[cat.entities().name_of(p.gene)];
  const auto best = std::max_element(truths.begin(), truths.end(),
                                     [](const auto& x, const auto& y) { return x.second < y.second; });
  CaseStudyRequest req;
  req.entity = best->first;
  const auto tsv = b.pipeline->case_study(req);

  std::vector<std::vector<std::string>> table;
  std::istringstream in(tsv);
  for (std::string line; std::getline(in, line);) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    for (std::string cell; std::getline(ls, cell, '\t');) cells.push_back(cell);
    table.push_back(cells);
  }
  std::set<std::string> lp_methods;
  for (auto k : kLinkPredictionModels) lp_methods.insert(std::string(to_string(k)));
  bool ok = !table.empty() && table[0][0] == "entity";
  int dashes = 0, clf_dashes = 0;
  for (std::size_t r = 1; r < table.size(); ++r) {
    ok &= table[r].size() == table[0].size();
    for (std::size_t c = 1; c < table[r].size(); ++c) {
      const auto& cell = table[r][c];
      if (cell == "-") {
        ++dashes;
        if (!lp_methods.contains(table[0][c])) ++clf_dashes;
      } else {
        ok &= !cell.empty() && std::all_of(cell.begin(), cell.end(), ::isdigit) && std::stoi(cell) >= 1;
      }
    }
  }
  const std::size_t rows = table.empty() ? 0 : table.size() - 1;
  ok &= clf_dashes == 0 && rows == best->second;
  return {ok, fmt("%s: %zu rows for %zu true associations, %zu columns, %d '-' cells (%d outside LP columns)",
                  best->first.c_str(), rows, best->second, table.empty() ? 0 : table[0].size() - 1,
                  dashes, clf_dashes)};
}

}  // namespace

int main() {
  report("scoring-oracles", scoring_oracles);
  report("algebraic-reductions", reductions);
  report("gradient-checks", gradient_checks);
  report("hits-at-k-oracle", hits_oracle);
  report("split-reproduction", split_reproduction);
  Benchmark bench;
  report("synthetic-benchmark", [&] { return synthetic_benchmark(bench); });
  report("negative-sampling", negative_sampling);
  report("case-study-format", [&] { return case_study_format(bench); });
  return failures == 0 ? 0 : 1;
}
