#include "gdakg/split.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <string>
#include <unordered_set>

#include "gdakg/error.hpp"
#include "gdakg/rng.hpp"
#include "text.hpp"

namespace gdakg {
namespace {

std::uint64_t pack(EntityId gene, EntityId disease) {
  return (static_cast<std::uint64_t>(gene) << 32) | disease;
}

std::vector<EntityId> sorted_unique(std::vector<EntityId> ids) {
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

std::size_t cut_point(double fraction, std::size_t n) {
  // The epsilon absorbs representation error such as 0.7 * 10 = 6.999...
  return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 1e-9));
}

Label parse_label(std::string_view text, const std::filesystem::path& path, std::size_t line) {
  if (text == "1" || text == "positive") return Label::Positive;
  if (text == "0" || text == "negative") return Label::Negative;
  throw ParseError(path.string(), line, "unknown label '" + std::string(text) + "'");
}

const char* kSplitFiles[] = {"train_pos.tsv", "train_neg.tsv", "test_pos.tsv", "test_neg.tsv"};

}  // namespace

std::vector<GdaPair> SplitDataset::train() const {
  std::vector<GdaPair> out = train_pos;
  out.insert(out.end(), train_neg.begin(), train_neg.end());
  return out;
}

std::vector<GdaPair> SplitDataset::test() const {
  std::vector<GdaPair> out = test_pos;
  out.insert(out.end(), test_neg.begin(), test_neg.end());
  return out;
}

std::size_t max_negative_count(std::span<const GdaPair> positives) {
  std::vector<EntityId> genes, diseases;
  std::unordered_set<std::uint64_t> known;
  for (const auto& p : positives) {
    genes.push_back(p.gene);
    diseases.push_back(p.disease);
    known.insert(pack(p.gene, p.disease));
  }
  return sorted_unique(std::move(genes)).size() * sorted_unique(std::move(diseases)).size() -
         known.size();
}

std::vector<GdaPair> generate_negatives(std::span<const GdaPair> positives, std::size_t count,
                                        std::uint64_t seed) {
  if (count == 0) return {};
  std::vector<EntityId> genes, diseases;
  std::unordered_set<std::uint64_t> known;
  for (const auto& p : positives) {
    genes.push_back(p.gene);
    diseases.push_back(p.disease);
    known.insert(pack(p.gene, p.disease));
  }
  genes = sorted_unique(std::move(genes));
  diseases = sorted_unique(std::move(diseases));
  const std::size_t feasible = genes.size() * diseases.size() - known.size();
  if (count > feasible) {
    throw ConfigError("cannot draw " + std::to_string(count) +
                      " negatives: at most " + std::to_string(feasible) + " are feasible");
  }

  Rng rng(seed);
  std::vector<GdaPair> out;
  out.reserve(count);
  if (2 * count <= feasible) {
    // Sparse regime: rejection sampling over the cross product.
    std::unordered_set<std::uint64_t> chosen;
    while (out.size() < count) {
      const EntityId g = genes[rng.index(genes.size())];
      const EntityId d = diseases[rng.index(diseases.size())];
      const auto key = pack(g, d);
      if (known.contains(key) || !chosen.insert(key).second) continue;
      out.push_back({g, d, Label::Negative});
    }
    return out;
  }
  // Dense regime: enumerate the complement and take a random prefix.
  std::vector<GdaPair> pool;
  pool.reserve(feasible);
  for (EntityId g : genes) {
    for (EntityId d : diseases) {
      if (!known.contains(pack(g, d))) pool.push_back({g, d, Label::Negative});
    }
  }
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + rng.index(pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(count);
  return pool;
}

SplitDataset split_pairs(std::span<const GdaPair> pairs, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw ConfigError("split fraction must lie in (0, 1), got " + std::to_string(fraction));
  }
  std::vector<GdaPair> pos, neg;
  std::unordered_set<std::uint64_t> seen_pos, seen_neg;
  for (const auto& p : pairs) {
    const auto key = pack(p.gene, p.disease);
    if (p.positive()) {
      if (seen_neg.contains(key)) throw ConsistencyError("pair labeled both positive and negative");
      if (seen_pos.insert(key).second) pos.push_back(p);
    } else {
      if (seen_pos.contains(key)) throw ConsistencyError("pair labeled both positive and negative");
      if (seen_neg.insert(key).second) neg.push_back(p);
    }
  }
  if (pos.empty()) throw ConfigError("cannot split: no positive pairs");
  if (neg.empty()) throw ConfigError("cannot split: no negative pairs");

  Rng rng(seed);
  rng.shuffle(std::span(pos));
  rng.shuffle(std::span(neg));

  SplitDataset out;
  out.seed = seed;
  out.fraction = fraction;
  const auto pos_cut = cut_point(fraction, pos.size());
  const auto neg_cut = cut_point(fraction, neg.size());
  out.train_pos.assign(pos.begin(), pos.begin() + pos_cut);
  out.test_pos.assign(pos.begin() + pos_cut, pos.end());
  out.train_neg.assign(neg.begin(), neg.begin() + neg_cut);
  out.test_neg.assign(neg.begin() + neg_cut, neg.end());
  return out;
}

std::vector<GdaPair> load_pairs(const std::filesystem::path& path, Catalog& catalog) {
  auto in = detail::open_input(path);
  std::vector<GdaPair> pairs;
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
    GdaPair p;
    p.gene = catalog.add_entity(fields[0], EntityKind::Gene);
    p.disease = catalog.add_entity(fields[1], EntityKind::Disease);
    p.label = fields.size() == 3 ? parse_label(fields[2], path, line_no) : Label::Positive;
    pairs.push_back(p);
  }
  return pairs;
}

void save_pairs(const std::filesystem::path& path, std::span<const GdaPair> pairs,
                const Catalog& catalog) {
  auto out = detail::open_output(path);
  const auto& names = catalog.entities();
  for (const auto& p : pairs) {
    out << names.name_of(p.gene) << '\t' << names.name_of(p.disease) << '\t'
        << (p.positive() ? 1 : 0) << '\n';
  }
  detail::check_written(out, path);
}

void save_split(const SplitDataset& split, const Catalog& catalog,
                const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const std::vector<GdaPair>* parts[] = {&split.train_pos, &split.train_neg, &split.test_pos,
                                         &split.test_neg};
  nlohmann::ordered_json counts;
  for (int i = 0; i < 4; ++i) {
    save_pairs(dir / kSplitFiles[i], *parts[i], catalog);
    std::string key(kSplitFiles[i]);
    counts[key.substr(0, key.size() - 4)] = parts[i]->size();
  }
  nlohmann::ordered_json meta;
  meta["seed"] = split.seed;
  meta["fraction"] = split.fraction;
  meta["counts"] = counts;
  auto out = detail::open_output(dir / "split.json");
  out << meta.dump(2) << '\n';
  detail::check_written(out, dir / "split.json");
}

bool split_exists(const std::filesystem::path& dir) {
  if (!std::filesystem::exists(dir / "split.json")) return false;
  for (const char* f : kSplitFiles) {
    if (!std::filesystem::exists(dir / f)) return false;
  }
  return true;
}

SplitDataset load_split(const std::filesystem::path& dir, Catalog& catalog) {
  auto in = detail::open_input(dir / "split.json");
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError((dir / "split.json").string(), 0, e.what());
  }
  SplitDataset split;
  split.seed = meta.at("seed").get<std::uint64_t>();
  split.fraction = meta.at("fraction").get<double>();
  std::vector<GdaPair>* parts[] = {&split.train_pos, &split.train_neg, &split.test_pos,
                                   &split.test_neg};
  for (int i = 0; i < 4; ++i) *parts[i] = load_pairs(dir / kSplitFiles[i], catalog);
  return split;
}

}  // namespace gdakg
