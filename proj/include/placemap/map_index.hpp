#pragma once

// Place maps: one or more factored subspaces per place, in ascending
// place_id order, immutable once built.
//
// Bases are factored in double precision and stored as f32, the same
// footprint as the raw descriptors they replace.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "placemap/descriptor_store.hpp"
#include "placemap/subspace.hpp"

namespace placemap {

enum class MapMethod : std::uint8_t { QrFull = 0, Qr2vp = 1, Svd = 2 };

std::string_view to_string(MapMethod m) noexcept;
MapMethod parse_map_method(std::string_view s);  // "qr" | "qr_full" | "qr_2vp" | "2vp" | "svd"

// Truncation rank for svd maps: a fixed k, or m-1 per place (at least 1).
struct SvdRank {
  bool minus_one = false;
  std::uint32_t k = 0;

  std::size_t resolve(std::size_t m) const { return minus_one ? (m > 1 ? m - 1 : 1) : k; }
  std::string describe() const;
  static SvdRank parse(std::string_view s);  // "m-1" or a positive integer
  bool operator==(const SvdRank&) const = default;
};

struct MapBuildConfig {
  MapMethod method = MapMethod::QrFull;
  std::optional<SvdRank> svd_rank;
  ReferenceFilter reference_filter;
  double dep_tol = kDefaultDepTol;
  bool store_r_factor = true;
  bool retain_sources = true;
  unsigned threads = 0;  // 0 = resolve_threads(); never affects output

  void validate() const;
  std::string to_json() const;  // threads excluded
  static MapBuildConfig from_json(const std::string& text);
  bool operator==(const MapBuildConfig& o) const {
    return method == o.method && svd_rank == o.svd_rank && reference_filter == o.reference_filter &&
           dep_tol == o.dep_tol && store_r_factor == o.store_r_factor &&
           retain_sources == o.retain_sources;
  }
};

struct MapSubspace {
  std::string place_id;
  std::string tag;
  FactorMethod method = FactorMethod::QrFull;
  std::uint32_t rank = 0;
  std::vector<std::string> column_ids;
  std::optional<std::vector<double>> column_headings;
  std::vector<std::uint32_t> retained;
  std::optional<std::vector<double>> r_factor;         // rank x m, row-major
  std::optional<std::vector<double>> singular_values;  // m
  std::optional<std::vector<float>> sources;           // m columns of length n
  std::vector<float> q;                                // rank columns of length n

  std::size_t column_count() const { return column_ids.size(); }
  std::size_t memory_bytes() const;
  bool operator==(const MapSubspace&) const = default;
};

// Double-precision view of a stored subspace (basis widened from f32).
PlaceSubspace widen(const MapSubspace& s, std::size_t n);

class MapIndex {
 public:
  MapIndex() = default;
  // Entries must be grouped by place in ascending place_id order, with
  // (place_id, tag) unique.
  MapIndex(std::size_t n, MapBuildConfig config,
           std::vector<std::shared_ptr<const MapSubspace>> entries);

  std::size_t dimension() const { return n_; }
  const MapBuildConfig& config() const { return config_; }

  std::size_t subspace_count() const { return entries_.size(); }
  const MapSubspace& subspace(std::size_t i) const { return *entries_[i]; }
  const std::vector<std::shared_ptr<const MapSubspace>>& entries() const { return entries_; }

  std::size_t place_count() const { return place_ids_.size(); }
  const std::vector<std::string>& place_ids() const { return place_ids_; }
  std::size_t entry_place(std::size_t entry) const { return entry_place_[entry]; }
  // Entries of place p are [place_begin(p), place_begin(p + 1)).
  std::size_t place_begin(std::size_t p) const { return place_begin_[p]; }
  std::optional<std::size_t> find_place(const std::string& place_id) const;

  // Inverse Gram matrix of an entry's stored basis, rank x rank row-major.
  // Rounding to f32 leaves the basis slightly non-orthonormal; scoring
  // through this matrix still projects onto the stored span exactly.
  std::span<const double> gram_inverse(std::size_t entry) const {
    return {gram_inv_.data() + gram_offset_[entry], std::size_t{entries_[entry]->rank} * entries_[entry]->rank};
  }

  std::size_t total_basis_columns() const;
  std::size_t memory_bytes() const;

  // Field-wise equality, including configuration.
  bool operator==(const MapIndex& o) const;

 private:
  std::size_t n_ = 0;
  MapBuildConfig config_;
  std::vector<std::shared_ptr<const MapSubspace>> entries_;
  std::vector<std::string> place_ids_;
  std::vector<std::size_t> entry_place_;
  std::vector<std::size_t> place_begin_;
  std::vector<double> gram_inv_;
  std::vector<std::size_t> gram_offset_;
};

struct BuildStats {
  std::size_t decompositions = 0;
  std::size_t places = 0;
  std::size_t skipped_places = 0;
  double wall_seconds = 0.0;
  std::vector<std::string> warnings;
};

MapIndex build_map(const Dataset& dataset, const MapBuildConfig& config,
                   BuildStats* stats = nullptr);

struct ReferenceColumn {
  std::string image_id;
  std::optional<double> heading_deg;
  std::vector<double> values;  // normalized and rounded to f32 on insertion
};

// Rebuilds one place from its retained source columns plus `added`; all other
// entries are shared with `map`. A new place_id inserts a new place.
MapIndex incremental_add(const MapIndex& map, const std::string& place_id,
                         std::span<const ReferenceColumn> added, BuildStats* stats = nullptr);

// .vprmap persistence.
std::vector<std::uint8_t> serialize_map(const MapIndex& map);
MapIndex deserialize_map(std::span<const std::uint8_t> bytes);
void save_map(const MapIndex& map, const std::filesystem::path& path);
MapIndex load_map(const std::filesystem::path& path);

}  // namespace placemap
