#pragma once

// Query-to-place ranking under the subspace score and four baselines.
//
// Every strategy ranks every place exactly once, higher score first, equal
// scores by ascending place_id. A single-query call is a batch of one, so
// batch results always equal sequential results.

#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "placemap/descriptor_store.hpp"
#include "placemap/map_index.hpp"

namespace placemap {

enum class Strategy : std::uint8_t { Subspace, Pooling, Dmat, Sum, Lse };

std::string_view to_string(Strategy s) noexcept;  // "qr" "pooling" "dmat" "sum" "lse"
Strategy parse_strategy(std::string_view s);
std::vector<Strategy> parse_strategies(const std::string& csv);

struct BaselineConfig {
  std::size_t lse_top_c = 25;
  double lse_beta = 1.0;
  bool sum_renormalize = true;

  void validate() const;
  bool operator==(const BaselineConfig&) const = default;
};

// Score given to a summed bundle that cancelled to zero.
inline constexpr double kMinimalScore = std::numeric_limits<double>::lowest();

using PlaceTable = std::shared_ptr<const std::vector<std::string>>;

struct MatchResult {
  std::string query_id;
  Strategy strategy = Strategy::Subspace;
  PlaceTable places;  // ascending place ids; ranking refers to it by index
  std::vector<std::pair<std::uint32_t, double>> ranking;

  const std::string& place_at(std::size_t rank) const { return (*places)[ranking[rank].first]; }
  double score_at(std::size_t rank) const { return ranking[rank].second; }
  std::vector<std::string> top_places(std::size_t k) const;
};

// Raw references grouped by place for the baseline strategies. Places are in
// ascending place_id order; columns within a place in ascending image_id.
class ReferenceSet {
 public:
  static ReferenceSet from_dataset(const Dataset& dataset, const ReferenceFilter& filter = {});

  std::size_t dimension() const { return n_; }
  std::size_t place_count() const { return places_->size(); }
  const PlaceTable& places() const { return places_; }
  std::size_t column_count() const { return ids_.size(); }
  // Columns of place p are [place_begin(p), place_begin(p + 1)).
  std::size_t place_begin(std::size_t p) const { return begin_[p]; }
  std::span<const float> column(std::size_t c) const { return {values_.data() + c * n_, n_}; }
  const std::vector<float>& values() const { return values_; }
  const std::string& column_id(std::size_t c) const { return ids_[c]; }
  const std::optional<double>& column_heading(std::size_t c) const { return headings_[c]; }
  std::optional<std::size_t> find_place(const std::string& place_id) const;

  // Unit-column matrix of place p, for the normal-equation oracle.
  PlaceMatrix place_matrix(std::size_t p) const;

  std::size_t memory_bytes() const { return values_.size() * sizeof(float); }

 private:
  std::size_t n_ = 0;
  PlaceTable places_ = std::make_shared<const std::vector<std::string>>();
  std::vector<std::size_t> begin_{0};
  std::vector<std::string> ids_;
  std::vector<std::optional<double>> headings_;
  std::vector<float> values_;
};

// Unit f32 query rows with identifiers.
struct QuerySet {
  std::vector<std::string> ids;
  DescriptorMatrix rows;

  std::size_t size() const { return ids.size(); }
};

QuerySet queries_from_dataset(const Dataset& dataset);
QuerySet make_queries(std::vector<std::string> ids, std::span<const std::vector<double>> vectors);

struct BatchOutput {
  std::vector<MatchResult> results;
  double wall_seconds = 0.0;
  double ms_per_query = 0.0;  // amortized over the batch
};

BatchOutput batch_match(const MapIndex& map, const QuerySet& queries, unsigned threads = 0);
BatchOutput batch_match(const ReferenceSet& refs, const QuerySet& queries, Strategy strategy,
                        const BaselineConfig& cfg = {}, unsigned threads = 0);

// Single-query conveniences; the query is normalized first.
MatchResult match_subspace(const MapIndex& map, std::span<const double> query,
                           std::string query_id = "");
MatchResult match_pooling(const ReferenceSet& refs, std::span<const double> query,
                          std::string query_id = "");
MatchResult match_dmat_avg(const ReferenceSet& refs, std::span<const double> query,
                           std::string query_id = "");
MatchResult match_sum_desc(const ReferenceSet& refs, std::span<const double> query,
                           const BaselineConfig& cfg = {}, std::string query_id = "");
MatchResult match_lse_rerank(const ReferenceSet& refs, std::span<const double> query,
                             const BaselineConfig& cfg = {}, std::string query_id = "");

// {"query_id":..., "strategy":..., "top":[[place_id, score], ...]}
std::string to_json_line(const MatchResult& r, std::size_t top);

}  // namespace placemap
