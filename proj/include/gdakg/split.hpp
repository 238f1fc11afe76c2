#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "gdakg/types.hpp"
#include "gdakg/vocab.hpp"

namespace gdakg {

// Stratified train/test partition of labeled gene-disease pairs. The four
// lists are pairwise disjoint and their union is the input.
struct SplitDataset {
  std::vector<GdaPair> train_pos;
  std::vector<GdaPair> train_neg;
  std::vector<GdaPair> test_pos;
  std::vector<GdaPair> test_neg;
  std::uint64_t seed = 0;
  double fraction = 0.7;

  std::vector<GdaPair> train() const;
  std::vector<GdaPair> test() const;
  std::size_t size() const {
    return train_pos.size() + train_neg.size() + test_pos.size() + test_neg.size();
  }

  friend bool operator==(const SplitDataset&, const SplitDataset&) = default;
};

// Number of gene-disease pairs over the genes and diseases of `positives`
// that are not themselves positives.
std::size_t max_negative_count(std::span<const GdaPair> positives);

// Draws `count` distinct negatives uniformly from the cross product of the
// genes and diseases occurring in `positives`, excluding every positive.
// Throws ConfigError when count exceeds max_negative_count().
std::vector<GdaPair> generate_negatives(std::span<const GdaPair> positives, std::size_t count,
                                        std::uint64_t seed);

// Shuffles positives and negatives independently (positives first, one
// generator) and cuts each at floor(fraction * n).
SplitDataset split_pairs(std::span<const GdaPair> pairs, double fraction, std::uint64_t seed);

// Reads `gene<TAB>disease[<TAB>label]` rows, registering genes and diseases
// in `catalog`. A missing label means positive. Labels are 1/0 or
// positive/negative.
std::vector<GdaPair> load_pairs(const std::filesystem::path& path, Catalog& catalog);
void save_pairs(const std::filesystem::path& path, std::span<const GdaPair> pairs,
                const Catalog& catalog);

// Persists the split as train_pos.tsv, train_neg.tsv, test_pos.tsv,
// test_neg.tsv and a split.json sidecar {seed, fraction, counts}.
void save_split(const SplitDataset& split, const Catalog& catalog,
                const std::filesystem::path& dir);
SplitDataset load_split(const std::filesystem::path& dir, Catalog& catalog);
bool split_exists(const std::filesystem::path& dir);

}  // namespace gdakg
