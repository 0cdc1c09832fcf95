#include <algorithm>
#include <chrono>
#include <set>

#include <json.hpp>

#include "placemap/error.hpp"
#include "placemap/evaluator.hpp"

namespace placemap {

using nlohmann::json;

double RecallRow::recall_for(std::size_t k) const {
  for (std::size_t i = 0; i < ks.size(); ++i) {
    if (ks[i] == k) return recall[i];
  }
  raise(ErrorKind::Parameter, "row has no recall for K=" + std::to_string(k));
}

void EvalConfig::validate() const {
  if (strategies.empty()) raise(ErrorKind::Config, "no strategies selected");
  if (ks.empty()) raise(ErrorKind::Config, "no K values given");
  for (std::size_t k : ks) {
    if (k < 1) raise(ErrorKind::Config, "K values must be at least 1");
  }
  if (!std::is_sorted(ks.begin(), ks.end()) ||
      std::adjacent_find(ks.begin(), ks.end()) != ks.end()) {
    raise(ErrorKind::Config, "K values must be strictly increasing");
  }
  map.validate();
  baseline.validate();
}

std::string EvalConfig::to_json() const {
  json j;
  json s = json::array();
  for (Strategy st : strategies) s.push_back(std::string(to_string(st)));
  j["strategies"] = s;
  j["ks"] = ks;
  j["map"] = json::parse(map.to_json());
  j["baseline"] = {{"lse_top_c", baseline.lse_top_c},
                   {"lse_beta", baseline.lse_beta},
                   {"sum_renormalize", baseline.sum_renormalize}};
  return j.dump();
}

namespace {

RecallRow blank_row(Strategy s, const EvalConfig& cfg, std::size_t dim, const std::string& subset) {
  RecallRow row;
  row.strategy = std::string(to_string(s));
  if (s == Strategy::Subspace) {
    row.method = std::string(to_string(cfg.map.method));
    row.rank = cfg.map.method == MapMethod::Svd ? cfg.map.svd_rank->describe() : "full";
  } else {
    row.method = "references";
  }
  row.dim = dim;
  row.subset = subset;
  row.ks = cfg.ks;
  return row;
}

RecallRow error_row(RecallRow row, const Error& e) {
  row.error = std::string(to_string(e.kind()));
  row.notes.push_back(e.what());
  row.recall.assign(row.ks.size(), 0.0);
  return row;
}

}  // namespace

std::vector<RecallRow> evaluate(const Dataset& references, const Dataset& queries,
                                const GroundTruthSpec& gt, const EvalConfig& cfg,
                                const std::string& subset_label) {
  cfg.validate();
  const QuerySet qs = queries_from_dataset(queries);
  std::vector<RecallRow> rows;
  std::optional<ReferenceSet> refs;
  double refs_seconds = 0.0;

  for (Strategy s : cfg.strategies) {
    RecallRow row = blank_row(s, cfg, references.dim(), subset_label);
    row.queries = qs.size();
    BatchOutput out;
    if (s == Strategy::Subspace) {
      BuildStats stats;
      const MapIndex map = build_map(references, cfg.map, &stats);
      row.map_build_s = stats.wall_seconds;
      row.map_mem_bytes = map.memory_bytes();
      if (stats.skipped_places > 0) {
        row.notes.push_back(std::to_string(stats.skipped_places) + " place(s) skipped");
      }
      out = batch_match(map, qs, cfg.threads);
    } else {
      if (!refs) {
        const auto t0 = std::chrono::steady_clock::now();
        refs = ReferenceSet::from_dataset(references, cfg.map.reference_filter);
        refs_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      }
      row.map_build_s = refs_seconds;
      row.map_mem_bytes = refs->memory_bytes();
      out = batch_match(*refs, qs, s, cfg.baseline, cfg.threads);
    }
    row.match_ms_per_query = out.ms_per_query;
    row.recall = recall_at_k(out.results, gt, cfg.ks);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<RecallRow> sweep_rank(const Dataset& references, const Dataset& queries,
                                  const GroundTruthSpec& gt, std::span<const SvdRank> ranks,
                                  const EvalConfig& cfg) {
  std::vector<RecallRow> rows;
  for (const SvdRank& r : ranks) {
    EvalConfig c = cfg;
    c.strategies = {Strategy::Subspace};
    c.map.method = MapMethod::Svd;
    c.map.svd_rank = r;
    try {
      auto got = evaluate(references, queries, gt, c, c.map.reference_filter.describe());
      rows.insert(rows.end(), got.begin(), got.end());
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::Evaluation) throw;
      RecallRow row = blank_row(Strategy::Subspace, c, references.dim(), c.map.reference_filter.describe());
      row.queries = queries.size();
      rows.push_back(error_row(std::move(row), e));
    }
  }
  return rows;
}

std::vector<RecallRow> sweep_dimension(const Dataset& references, const Dataset& queries,
                                       const GroundTruthSpec& gt, std::span<const std::size_t> dims,
                                       ReduceMethod method, const EvalConfig& cfg) {
  std::vector<RecallRow> rows;
  const std::size_t n = references.dim();
  const std::string subset = cfg.map.reference_filter.describe();
  for (std::size_t dim : dims) {
    try {
      if (dim == n) {
        auto got = evaluate(references, queries, gt, cfg, subset);
        rows.insert(rows.end(), got.begin(), got.end());
        continue;
      }
      if (dim == 0 || dim > n) {
        raise(ErrorKind::Parameter, "target dimension " + std::to_string(dim) + " outside [1, " +
                                        std::to_string(n) + "]");
      }
      DescriptorMatrix ref_rows = descriptors_in_record_order(references);
      DescriptorMatrix query_rows = descriptors_in_record_order(queries);
      if (method == ReduceMethod::Slice) {
        ref_rows = reduce_dimension(ref_rows, ReduceMethod::Slice, dim);
        query_rows = reduce_dimension(query_rows, ReduceMethod::Slice, dim);
      } else {
        const PcaProjection pca = PcaProjection::fit(ref_rows, dim);
        ref_rows = pca.apply(ref_rows);
        query_rows = pca.apply(query_rows);
      }
      auto got = evaluate(with_descriptors(references, std::move(ref_rows)),
                          with_descriptors(queries, std::move(query_rows)), gt, cfg, subset);
      rows.insert(rows.end(), got.begin(), got.end());
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::Evaluation) throw;
      for (Strategy s : cfg.strategies) {
        RecallRow row = blank_row(s, cfg, dim, subset);
        row.queries = queries.size();
        rows.push_back(error_row(std::move(row), e));
      }
    }
  }
  return rows;
}

std::vector<RecallRow> sweep_reference_subsets(const Dataset& references, const Dataset& queries,
                                               const GroundTruthSpec& gt,
                                               std::span<const ReferenceFilter> subsets,
                                               const EvalConfig& cfg) {
  std::vector<RecallRow> rows;
  for (const ReferenceFilter& f : subsets) {
    EvalConfig c = cfg;
    c.map.reference_filter = f;
    try {
      auto got = evaluate(references, queries, gt, c, f.describe());
      rows.insert(rows.end(), got.begin(), got.end());
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::Evaluation) throw;
      for (Strategy s : c.strategies) {
        RecallRow row = blank_row(s, c, references.dim(), f.describe());
        row.queries = queries.size();
        rows.push_back(error_row(std::move(row), e));
      }
    }
  }
  return rows;
}

std::vector<ReferenceFilter> pairwise_condition_subsets(const Dataset& references) {
  std::set<std::string> conditions;
  for (const auto& r : references.manifest.records) {
    if (r.condition) conditions.insert(*r.condition);
  }
  const std::vector<std::string> cs(conditions.begin(), conditions.end());
  std::vector<ReferenceFilter> out;
  for (std::size_t i = 0; i < cs.size(); ++i) {
    for (std::size_t j = i + 1; j < cs.size(); ++j) {
      ReferenceFilter f;
      f.conditions = std::set<std::string>{cs[i], cs[j]};
      out.push_back(std::move(f));
    }
  }
  return out;
}

}  // namespace placemap
