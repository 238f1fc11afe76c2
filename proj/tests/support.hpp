#pragma once

#include <algorithm>
#include <atomic>
#include <complex>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <unistd.h>
#include <vector>

#include "gdakg/embedding.hpp"
#include "gdakg/rng.hpp"

namespace testing {

namespace fs = std::filesystem;

// Scratch directory removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "t") {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("gdakg_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline fs::path write_file(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream(path, std::ios::binary) << text;
  return path;
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Naive reference scorers, written from the textbook definitions and
// independent of the library's residual and FFT code paths.
namespace naive {

using Vec = std::vector<double>;

inline Vec row(const gdakg::Matrix& m, std::size_t i) {
  auto r = m.row(i);
  return {r.begin(), r.end()};
}

inline double l2sq(const Vec& v) {
  double s = 0;
  for (double x : v) s += x * x;
  return s;
}

// (h ⋆ t)_k = sum_i h_i t_{(k+i) mod d}
inline Vec correlation(const Vec& h, const Vec& t) {
  const std::size_t d = h.size();
  Vec out(d, 0.0);
  for (std::size_t k = 0; k < d; ++k) {
    for (std::size_t i = 0; i < d; ++i) out[k] += h[i] * t[(k + i) % d];
  }
  return out;
}

inline double transe(const Vec& h, const Vec& r, const Vec& t, bool l1) {
  double s = 0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double e = h[i] + r[i] - t[i];
    s += l1 ? std::abs(e) : e * e;
  }
  return l1 ? -s : -std::sqrt(s);
}

// Projection matrix M = r_p e_p^T + I applied explicitly.
inline Vec transd_project(const Vec& e, const Vec& ep, const Vec& rp) {
  const std::size_t d = e.size();
  Vec out(d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const double m = rp[i] * ep[j] + (i == j ? 1.0 : 0.0);
      out[i] += m * e[j];
    }
  }
  return out;
}

inline double transd(const Vec& h, const Vec& hp, const Vec& r, const Vec& rp, const Vec& t,
                     const Vec& tp) {
  const Vec hh = transd_project(h, hp, rp);
  const Vec tt = transd_project(t, tp, rp);
  Vec e(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) e[i] = hh[i] + r[i] - tt[i];
  return -l2sq(e);
}

inline double transh(const Vec& h, const Vec& w, const Vec& d_r, const Vec& t) {
  double wh = 0, wt = 0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    wh += w[i] * h[i];
    wt += w[i] * t[i];
  }
  Vec e(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) e[i] = (h[i] - wh * w[i]) + d_r[i] - (t[i] - wt * w[i]);
  return -l2sq(e);
}

inline double distmult(const Vec& h, const Vec& r, const Vec& t) {
  double s = 0;
  for (std::size_t i = 0; i < h.size(); ++i) s += h[i] * r[i] * t[i];
  return s;
}

inline double hole(const Vec& h, const Vec& r, const Vec& t) {
  const Vec c = correlation(h, t);
  double s = 0;
  for (std::size_t i = 0; i < h.size(); ++i) s += r[i] * c[i];
  return s;
}

// Re(<h, r, conj(t)>)
inline double complex_(const Vec& hr, const Vec& hi, const Vec& rr, const Vec& ri, const Vec& tr,
                       const Vec& ti) {
  std::complex<double> s = 0;
  for (std::size_t k = 0; k < hr.size(); ++k) {
    s += std::complex<double>(hr[k], hi[k]) * std::complex<double>(rr[k], ri[k]) *
         std::conj(std::complex<double>(tr[k], ti[k]));
  }
  return s.real();
}

inline double score(const gdakg::EmbeddingModel& m, std::size_t h, std::size_t r, std::size_t t) {
  using gdakg::ModelKind;
  switch (m.kind) {
    case ModelKind::TransE:
      return transe(row(m.entity, h), row(m.relation, r), row(m.entity, t),
                    m.norm == gdakg::NormKind::L1);
    case ModelKind::TransD:
      return transd(row(m.entity, h), row(m.entity_aux, h), row(m.relation, r),
                    row(m.relation_aux, r), row(m.entity, t), row(m.entity_aux, t));
    case ModelKind::TransH:
      return transh(row(m.entity, h), row(m.relation_aux, r), row(m.relation, r), row(m.entity, t));
    case ModelKind::DistMult:
      return distmult(row(m.entity, h), row(m.relation, r), row(m.entity, t));
    case ModelKind::HolE:
      return hole(row(m.entity, h), row(m.relation, r), row(m.entity, t));
    case ModelKind::ComplEx:
      return complex_(row(m.entity, h), row(m.entity_aux, h), row(m.relation, r),
                      row(m.relation_aux, r), row(m.entity, t), row(m.entity_aux, t));
    default:
      return 0.0;
  }
}

}  // namespace naive

// init_model's shapes with every block redrawn uniformly in [-1, 1].
inline gdakg::EmbeddingModel random_model(gdakg::ModelKind kind, std::size_t entities,
                                          std::size_t relations, std::size_t dim,
                                          std::uint64_t seed) {
  auto m = gdakg::init_model(kind, entities, relations, dim, seed);
  gdakg::Rng rng(seed * 7919 + 17);
  for (auto* b : {&m.entity, &m.relation, &m.entity_aux, &m.relation_aux}) {
    for (auto& v : b->data) v = rng.uniform(-1.0, 1.0);
  }
  return m;
}

inline gdakg::Triple random_triple(const gdakg::EmbeddingModel& m, gdakg::Rng& rng) {
  return {static_cast<gdakg::EntityId>(rng.index(m.entity_count())),
          static_cast<gdakg::RelationId>(rng.index(m.relation_count())),
          static_cast<gdakg::EntityId>(rng.index(m.entity_count()))};
}

// Relative l2 error between accumulate_pair_gradient and central finite
// differences of pair_loss over every parameter of the model.
inline double gradient_relative_error(gdakg::EmbeddingModel m, const gdakg::ModelConfig& config,
                                      const gdakg::Triple& pos, const gdakg::Triple& neg,
                                      double step = 1e-5) {
  using gdakg::Block;
  gdakg::SparseGradient sparse(m.dim);
  gdakg::accumulate_pair_gradient(m, config, pos, neg, sparse);
  double diff = 0, norm_a = 0, norm_n = 0;
  for (Block b : {Block::Entity, Block::Relation, Block::EntityAux, Block::RelationAux}) {
    auto& data = m.block(b).data;
    std::vector<double> analytic(data.size(), 0.0);
    for (const auto& e : sparse.entries()) {
      if (e.block != b) continue;
      const auto v = sparse.values(e);
      for (std::size_t k = 0; k < m.dim; ++k) analytic[e.index * m.dim + k] += v[k];
    }
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double keep = data[i];
      data[i] = keep + step;
      const double up = gdakg::pair_loss(m, config, pos, neg);
      data[i] = keep - step;
      const double down = gdakg::pair_loss(m, config, pos, neg);
      data[i] = keep;
      const double numeric = (up - down) / (2 * step);
      diff += (analytic[i] - numeric) * (analytic[i] - numeric);
      norm_a += analytic[i] * analytic[i];
      norm_n += numeric * numeric;
    }
  }
  const double scale = std::max(std::sqrt(std::max(norm_a, norm_n)), 1e-12);
  return std::sqrt(diff) / scale;
}

// One gradient-check instance: random model at `dim`, a positive triple and
// a one-sided corruption of it. Margins are set so the hinge is active.
inline double gradient_check_instance(gdakg::ModelKind kind, std::size_t dim, std::uint64_t seed) {
  gdakg::Rng rng(seed);
  const auto m = random_model(kind, 5, 2, dim, seed);
  const auto pos = random_triple(m, rng);
  auto neg = pos;
  do {
    (rng.coin(0.5) ? neg.head : neg.tail) = static_cast<gdakg::EntityId>(rng.index(5));
  } while (neg == pos);
  auto config = gdakg::ModelConfig::defaults(kind);
  config.dim = dim;
  if (config.uses_margin_loss()) {
    config.margin = std::abs(gdakg::score(m, pos.head, pos.relation, pos.tail) -
                             gdakg::score(m, neg.head, neg.relation, neg.tail)) + 1.0;
  }
  return gradient_relative_error(m, config, pos, neg);
}

// hits@k by direct enumeration: for every truth, walk the candidate list to
// find its position; absent truths count as misses.
inline double brute_hits(const std::vector<std::uint32_t>& candidates,
                         const std::vector<std::uint32_t>& truths, int k) {
  int hits = 0;
  for (auto truth : truths) {
    for (std::size_t pos = 0; pos < candidates.size(); ++pos) {
      if (candidates[pos] == truth) {
        hits += static_cast<int>(pos) + 1 <= k;
        break;
      }
    }
  }
  return static_cast<double>(hits) / static_cast<double>(truths.size());
}

}  // namespace testing
