#include "placemap/matcher.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "placemap/error.hpp"
#include "placemap/parallel.hpp"
#include "placemap/simd/kernels.hpp"

namespace placemap {

std::string_view to_string(Strategy s) noexcept {
  switch (s) {
    case Strategy::Subspace: return "qr";
    case Strategy::Pooling: return "pooling";
    case Strategy::Dmat: return "dmat";
    case Strategy::Sum: return "sum";
    case Strategy::Lse: return "lse";
  }
  return "?";
}

Strategy parse_strategy(std::string_view s) {
  if (s == "qr" || s == "subspace" || s == "svd") return Strategy::Subspace;
  if (s == "pooling") return Strategy::Pooling;
  if (s == "dmat") return Strategy::Dmat;
  if (s == "sum") return Strategy::Sum;
  if (s == "lse") return Strategy::Lse;
  raise(ErrorKind::Config, "unknown strategy '" + std::string(s) + "'");
}

std::vector<Strategy> parse_strategies(const std::string& csv) {
  std::vector<Strategy> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const Strategy s = parse_strategy(item);
    if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
  }
  if (out.empty()) raise(ErrorKind::Config, "no strategies selected");
  return out;
}

void BaselineConfig::validate() const {
  if (lse_top_c < 1) raise(ErrorKind::Config, "lse_top_c must be at least 1");
  if (!(lse_beta > 0.0) || !std::isfinite(lse_beta)) raise(ErrorKind::Config, "lse_beta must be positive");
}

std::vector<std::string> MatchResult::top_places(std::size_t k) const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < std::min(k, ranking.size()); ++i) out.push_back(place_at(i));
  return out;
}

// ---------------------------------------------------------------------------

ReferenceSet ReferenceSet::from_dataset(const Dataset& dataset, const ReferenceFilter& filter) {
  struct Col {
    std::string id;
    std::optional<double> heading;
    std::size_t row;
  };
  std::map<std::string, std::vector<Col>> grouped;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const ImageRecord& r = dataset.record(i);
    if (filter.accepts(r)) grouped[r.place_id].push_back({r.image_id, r.heading_deg, i});
  }
  ReferenceSet s;
  s.n_ = dataset.dim();
  auto ids = std::make_shared<std::vector<std::string>>();
  for (auto& [place, cols] : grouped) {
    std::sort(cols.begin(), cols.end(), [](const Col& a, const Col& b) { return a.id < b.id; });
    ids->push_back(place);
    for (const Col& c : cols) {
      s.ids_.push_back(c.id);
      s.headings_.push_back(c.heading);
      const auto d = dataset.descriptor(c.row);
      s.values_.insert(s.values_.end(), d.begin(), d.end());
    }
    s.begin_.push_back(s.ids_.size());
  }
  s.places_ = std::move(ids);
  return s;
}

std::optional<std::size_t> ReferenceSet::find_place(const std::string& place_id) const {
  const auto it = std::lower_bound(places_->begin(), places_->end(), place_id);
  if (it == places_->end() || *it != place_id) return std::nullopt;
  return static_cast<std::size_t>(it - places_->begin());
}

PlaceMatrix ReferenceSet::place_matrix(std::size_t p) const {
  const std::size_t b = begin_[p];
  const std::size_t m = begin_[p + 1] - b;
  std::vector<double> data(values_.begin() + static_cast<std::ptrdiff_t>(b * n_),
                           values_.begin() + static_cast<std::ptrdiff_t>((b + m) * n_));
  std::vector<std::string> ids(ids_.begin() + static_cast<std::ptrdiff_t>(b),
                               ids_.begin() + static_cast<std::ptrdiff_t>(b + m));
  std::optional<std::vector<double>> hs = std::vector<double>{};
  for (std::size_t c = b; c < b + m; ++c) {
    if (!headings_[c]) {
      hs.reset();
      break;
    }
    hs->push_back(*headings_[c]);
  }
  return PlaceMatrix((*places_)[p], n_, m, std::move(data), std::move(ids), std::move(hs));
}

QuerySet queries_from_dataset(const Dataset& dataset) {
  QuerySet qs;
  qs.ids.reserve(dataset.size());
  for (const auto& r : dataset.manifest.records) qs.ids.push_back(r.image_id);
  qs.rows = descriptors_in_record_order(dataset);
  return qs;
}

QuerySet make_queries(std::vector<std::string> ids, std::span<const std::vector<double>> vectors) {
  if (ids.size() != vectors.size()) raise(ErrorKind::Shape, "query id count differs from vector count");
  const std::size_t n = vectors.empty() ? 0 : vectors[0].size();
  std::vector<float> values;
  values.reserve(vectors.size() * n);
  for (const auto& v : vectors) {
    if (v.size() != n) raise(ErrorKind::Shape, "queries have differing dimensions");
    for (double x : normalize(v)) values.push_back(static_cast<float>(x));
  }
  return QuerySet{std::move(ids), DescriptorMatrix(vectors.size(), n, std::move(values))};
}

// ---------------------------------------------------------------------------

namespace {

constexpr std::size_t kQueryChunk = 32;

void sort_ranking(std::vector<std::pair<std::uint32_t, double>>& r) {
  std::sort(r.begin(), r.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
}

// Same order as sort_ranking for input already ascending by place index:
// a stable LSD radix sort on descending-order score keys, so equal scores
// keep index order. Bytes shared by every key are skipped.
void radix_sort_ranking(std::vector<std::pair<std::uint32_t, double>>& r) {
  const std::size_t len = r.size();
  std::vector<std::uint64_t> keys(len);
  std::vector<std::uint32_t> idx(len);
  for (std::size_t i = 0; i < len; ++i) {
    const double x = r[i].second == 0.0 ? 0.0 : r[i].second;  // -0 ties +0
    const auto b = std::bit_cast<std::uint64_t>(x);
    const std::uint64_t ascending = (b >> 63) ? ~b : b | (std::uint64_t{1} << 63);
    keys[i] = ~ascending;
    idx[i] = static_cast<std::uint32_t>(i);
  }
  std::vector<std::uint64_t> keys2(len);
  std::vector<std::uint32_t> idx2(len);
  for (int shift = 0; shift < 64; shift += 8) {
    std::size_t count[257] = {};
    for (std::uint64_t k : keys) ++count[((k >> shift) & 0xff) + 1];
    if (count[((keys[0] >> shift) & 0xff) + 1] == len) continue;
    for (int d = 0; d < 256; ++d) count[d + 1] += count[d];
    for (std::size_t i = 0; i < len; ++i) {
      const std::size_t dst = count[(keys[i] >> shift) & 0xff]++;
      keys2[dst] = keys[i];
      idx2[dst] = idx[i];
    }
    keys.swap(keys2);
    idx.swap(idx2);
  }
  std::vector<std::pair<std::uint32_t, double>> out(len);
  for (std::size_t i = 0; i < len; ++i) out[i] = r[idx[i]];
  r.swap(out);
}

// Runs `chunk_fn(q0, nq, scores, rankings)` over query chunks. scores is
// place-major (scores[p * nq + q]) and is sorted into one ranking per query
// unless chunk_fn already filled rankings[q].
template <class ChunkFn>
BatchOutput run_batch(const QuerySet& queries, std::size_t n, const PlaceTable& places,
                      Strategy strategy, unsigned threads, ChunkFn&& chunk_fn) {
  const auto t0 = std::chrono::steady_clock::now();
  if (queries.size() > 0 && queries.rows.dim() != n) {
    raise(ErrorKind::Shape, "query dimension " + std::to_string(queries.rows.dim()) +
                                " differs from map dimension " + std::to_string(n));
  }
  if (queries.rows.count() != queries.size()) raise(ErrorKind::Shape, "query id/row count mismatch");
  BatchOutput out;
  out.results.resize(queries.size());
  const std::size_t chunks = (queries.size() + kQueryChunk - 1) / kQueryChunk;
  const std::size_t np = places->size();
  parallel_for(chunks, resolve_threads(threads), [&](std::size_t c) {
    const std::size_t q0 = c * kQueryChunk;
    const std::size_t nq = std::min(kQueryChunk, queries.size() - q0);
    std::vector<double> scores(np * nq);
    std::vector<std::vector<std::pair<std::uint32_t, double>>> rankings(nq);
    chunk_fn(q0, nq, scores, rankings);
    for (std::size_t q = 0; q < nq; ++q) {
      MatchResult& r = out.results[q0 + q];
      r.query_id = queries.ids[q0 + q];
      r.strategy = strategy;
      r.places = places;
      if (!rankings[q].empty()) {
        r.ranking = std::move(rankings[q]);
        continue;
      }
      r.ranking.resize(np);
      for (std::size_t p = 0; p < np; ++p) {
        r.ranking[p] = {static_cast<std::uint32_t>(p), scores[p * nq + q]};
      }
      radix_sort_ranking(r.ranking);
    }
  });
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out.ms_per_query = queries.size() ? out.wall_seconds * 1e3 / static_cast<double>(queries.size()) : 0.0;
  return out;
}

double log_sum_exp(std::span<const double> sims, double beta) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double s : sims) mx = std::max(mx, beta * s);
  double acc = 0.0;
  for (double s : sims) acc += std::exp(beta * s - mx);
  return mx + std::log(acc);
}

}  // namespace

BatchOutput batch_match(const MapIndex& map, const QuerySet& queries, unsigned threads) {
  if (map.place_count() == 0) raise(ErrorKind::EmptyMap, "map has no places");
  const auto& k = simd::kernels();
  const std::size_t n = map.dimension();
  const auto places = std::make_shared<const std::vector<std::string>>(map.place_ids());
  std::size_t max_rank = 0;
  for (const auto& e : map.entries()) max_rank = std::max<std::size_t>(max_rank, e->rank);

  return run_batch(queries, n, places, Strategy::Subspace, threads,
                   [&](std::size_t q0, std::size_t nq, std::vector<double>& scores, auto&) {
    const float* qrows = queries.rows.values().data() + q0 * n;
    std::fill(scores.begin(), scores.end(), -1.0);
    std::vector<double> dots(max_rank * nq);
    for (std::size_t e = 0; e < map.subspace_count(); ++e) {
      const MapSubspace& s = map.subspace(e);
      k.dot_block_f32(s.q.data(), s.rank, qrows, nq, n, dots.data());
      // ||P d||^2 = c^T G^-1 c with c = B^T d for the stored basis B.
      const double* ginv = map.gram_inverse(e).data();
      const std::size_t r = s.rank;
      double* best = scores.data() + map.entry_place(e) * nq;
      for (std::size_t q = 0; q < nq; ++q) {
        double ss = 0.0;
        for (std::size_t j = 0; j < r; ++j) {
          double t = 0.0;
          for (std::size_t c = 0; c < r; ++c) t += ginv[j * r + c] * dots[c * nq + q];
          ss += dots[j * nq + q] * t;
        }
        if (r == n) ss = 1.0;  // whole space: exact, as in project()
        best[q] = std::max(best[q], std::sqrt(std::max(ss, 0.0)));
      }
    }
  });
}

BatchOutput batch_match(const ReferenceSet& refs, const QuerySet& queries, Strategy strategy,
                        const BaselineConfig& cfg, unsigned threads) {
  if (strategy == Strategy::Subspace) {
    raise(ErrorKind::Config, "subspace strategy needs a map, not raw references");
  }
  cfg.validate();
  if (refs.place_count() == 0) raise(ErrorKind::EmptyMap, "reference set has no places");
  const auto& k = simd::kernels();
  const std::size_t n = refs.dimension();
  const std::size_t np = refs.place_count();

  // Bundles for the summation strategy: f32 sums, norms from the double sum.
  std::vector<float> bundles;
  std::vector<double> bundle_norm;
  if (strategy == Strategy::Sum) {
    bundles.resize(np * n);
    bundle_norm.resize(np);
    std::vector<double> acc(n);
    for (std::size_t p = 0; p < np; ++p) {
      std::fill(acc.begin(), acc.end(), 0.0);
      for (std::size_t c = refs.place_begin(p); c < refs.place_begin(p + 1); ++c) {
        const auto col = refs.column(c);
        for (std::size_t i = 0; i < n; ++i) acc[i] += col[i];
      }
      double ss = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        ss += acc[i] * acc[i];
        bundles[p * n + i] = static_cast<float>(acc[i]);
      }
      bundle_norm[p] = std::sqrt(ss);
    }
  }

  return run_batch(queries, n, refs.places(), strategy, threads,
                   [&](std::size_t q0, std::size_t nq, std::vector<double>& scores, auto& rankings) {
    const float* qrows = queries.rows.values().data() + q0 * n;
    if (strategy == Strategy::Sum) {
      std::vector<double> dots(nq);
      for (std::size_t p = 0; p < np; ++p) {
        k.dot_block_f32(bundles.data() + p * n, 1, qrows, nq, n, dots.data());
        for (std::size_t q = 0; q < nq; ++q) {
          if (bundle_norm[p] == 0.0) {
            scores[p * nq + q] = kMinimalScore;
          } else {
            scores[p * nq + q] = cfg.sum_renormalize ? dots[q] / bundle_norm[p] : dots[q];
          }
        }
      }
      return;
    }

    std::vector<double> sims(refs.column_count() * nq);
    k.dot_block_f32(refs.values().data(), refs.column_count(), qrows, nq, n, sims.data());
    for (std::size_t p = 0; p < np; ++p) {
      const std::size_t b = refs.place_begin(p);
      const std::size_t e = refs.place_begin(p + 1);
      for (std::size_t q = 0; q < nq; ++q) {
        double best = -std::numeric_limits<double>::infinity();
        double sum = 0.0;
        for (std::size_t c = b; c < e; ++c) {
          best = std::max(best, sims[c * nq + q]);
          sum += sims[c * nq + q];
        }
        scores[p * nq + q] = strategy == Strategy::Dmat ? sum / static_cast<double>(e - b) : best;
      }
    }
    if (strategy != Strategy::Lse) return;

    // Rerank the pooling head; the tail keeps pooling order and scores.
    const std::size_t head = std::min(cfg.lse_top_c, np);
    std::vector<std::pair<std::uint32_t, double>> order(np);
    std::vector<double> place_sims;
    for (std::size_t q = 0; q < nq; ++q) {
      for (std::size_t p = 0; p < np; ++p) order[p] = {static_cast<std::uint32_t>(p), scores[p * nq + q]};
      sort_ranking(order);
      std::vector<std::pair<std::uint32_t, double>> reranked(order.begin(), order.begin() + head);
      for (auto& [p, score] : reranked) {
        place_sims.clear();
        for (std::size_t c = refs.place_begin(p); c < refs.place_begin(p + 1); ++c) {
          place_sims.push_back(sims[c * nq + q]);
        }
        score = log_sum_exp(place_sims, cfg.lse_beta);
      }
      sort_ranking(reranked);
      reranked.insert(reranked.end(), order.begin() + static_cast<std::ptrdiff_t>(head), order.end());
      rankings[q] = std::move(reranked);
    }
  });
}

namespace {

QuerySet single_query(std::span<const double> query, std::string id) {
  const std::vector<double> v(query.begin(), query.end());
  return make_queries({std::move(id)}, std::span<const std::vector<double>>(&v, 1));
}

}  // namespace

MatchResult match_subspace(const MapIndex& map, std::span<const double> query, std::string query_id) {
  return std::move(batch_match(map, single_query(query, std::move(query_id)), 1).results[0]);
}

MatchResult match_pooling(const ReferenceSet& refs, std::span<const double> query, std::string query_id) {
  return std::move(
      batch_match(refs, single_query(query, std::move(query_id)), Strategy::Pooling, {}, 1).results[0]);
}

MatchResult match_dmat_avg(const ReferenceSet& refs, std::span<const double> query, std::string query_id) {
  return std::move(
      batch_match(refs, single_query(query, std::move(query_id)), Strategy::Dmat, {}, 1).results[0]);
}

MatchResult match_sum_desc(const ReferenceSet& refs, std::span<const double> query,
                           const BaselineConfig& cfg, std::string query_id) {
  return std::move(
      batch_match(refs, single_query(query, std::move(query_id)), Strategy::Sum, cfg, 1).results[0]);
}

MatchResult match_lse_rerank(const ReferenceSet& refs, std::span<const double> query,
                             const BaselineConfig& cfg, std::string query_id) {
  return std::move(
      batch_match(refs, single_query(query, std::move(query_id)), Strategy::Lse, cfg, 1).results[0]);
}

std::string to_json_line(const MatchResult& r, std::size_t top) {
  nlohmann::json j;
  j["query_id"] = r.query_id;
  j["strategy"] = std::string(to_string(r.strategy));
  nlohmann::json list = nlohmann::json::array();
  for (std::size_t i = 0; i < std::min(top, r.ranking.size()); ++i) {
    const double s = r.score_at(i);
    list.push_back({r.place_at(i), s == kMinimalScore ? nlohmann::json(nullptr) : nlohmann::json(s)});
  }
  j["top"] = std::move(list);
  return j.dump();
}

}  // namespace placemap
