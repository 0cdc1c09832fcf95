#pragma once

// Ground truth, Recall@K and sweep drivers.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "placemap/descriptor_store.hpp"
#include "placemap/map_index.hpp"
#include "placemap/matcher.hpp"

namespace placemap {

enum class GroundTruthMode { OneToOne, IndexWindow, Radius };

std::string_view to_string(GroundTruthMode m) noexcept;

// Resolved ground truth: every query id maps to the non-empty set of place
// ids that count as correct for it.
struct GroundTruthSpec {
  GroundTruthMode mode = GroundTruthMode::OneToOne;
  double tolerance = 0.0;  // window in places, or radius in meters
  std::map<std::string, std::vector<std::string>> valid;  // sorted place ids

  std::string describe() const;
};

// The query record's own place_id is the only correct answer.
GroundTruthSpec ground_truth_one_to_one(const Dataset& queries);

// Places within `window` positions of the query's place along the reference
// sequence (sequence_order if present, else record order; a place sits at the
// first appearance of any of its images).
GroundTruthSpec ground_truth_index_window(const Dataset& references, const Dataset& queries,
                                          std::size_t window);

// Places with at least one reference image within `radius_m` of the query.
// Great-circle distance for geographic coordinates, Euclidean for planar.
GroundTruthSpec ground_truth_radius(const Dataset& references, const Dataset& queries,
                                    double radius_m);

double haversine_m(double lat1, double lon1, double lat2, double lon2);

inline const std::vector<std::size_t> kDefaultKs{1, 5, 10, 25};

// Fraction of results with a correct place among the first K, per K.
std::vector<double> recall_at_k(std::span<const MatchResult> results, const GroundTruthSpec& gt,
                                std::span<const std::size_t> ks);

struct RecallRow {
  std::string strategy;
  std::string method;   // map method for qr rows, "references" for baselines
  std::string rank;     // svd rank, "full" for QR maps, empty for baselines
  std::size_t dim = 0;
  std::string subset = "all";
  std::vector<std::size_t> ks;
  std::vector<double> recall;
  std::size_t queries = 0;
  double map_build_s = 0.0;
  double match_ms_per_query = 0.0;
  std::size_t map_mem_bytes = 0;
  std::optional<std::string> error;  // error kind name when the row failed
  std::vector<std::string> notes;

  double recall_for(std::size_t k) const;
};

struct EvalConfig {
  std::vector<Strategy> strategies{Strategy::Subspace, Strategy::Pooling};
  MapBuildConfig map;
  BaselineConfig baseline;
  std::vector<std::size_t> ks = kDefaultKs;
  unsigned threads = 0;

  void validate() const;
  std::string to_json() const;
};

struct EvalReport {
  std::vector<RecallRow> rows;
  std::string config_json;  // echo of EvalConfig plus sweep axes
  std::string ground_truth;
};

// One row per strategy.
std::vector<RecallRow> evaluate(const Dataset& references, const Dataset& queries,
                                const GroundTruthSpec& gt, const EvalConfig& cfg,
                                const std::string& subset_label = "all");

// Subspace rows for each svd rank. A rank above some place's column count
// yields an error row; "m-1" is accepted.
std::vector<RecallRow> sweep_rank(const Dataset& references, const Dataset& queries,
                                  const GroundTruthSpec& gt, std::span<const SvdRank> ranks,
                                  const EvalConfig& cfg);

// All strategies per target dimension; references and queries are reduced
// together (PCA is fit on the references).
std::vector<RecallRow> sweep_dimension(const Dataset& references, const Dataset& queries,
                                       const GroundTruthSpec& gt, std::span<const std::size_t> dims,
                                       ReduceMethod method, const EvalConfig& cfg);

// All strategies per reference subset.
std::vector<RecallRow> sweep_reference_subsets(const Dataset& references, const Dataset& queries,
                                               const GroundTruthSpec& gt,
                                               std::span<const ReferenceFilter> subsets,
                                               const EvalConfig& cfg);

// Every unordered pair of condition tags present in the references.
std::vector<ReferenceFilter> pairwise_condition_subsets(const Dataset& references);

// report.csv: one line per (row, K). With `deterministic`, timing fields are
// left empty so repeated runs are byte-identical.
std::string report_csv(const EvalReport& report, bool deterministic);
std::string report_json(const EvalReport& report, bool deterministic);

}  // namespace placemap
