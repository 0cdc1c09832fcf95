#pragma once

// Descriptor datasets: a `.vprd` block of little-endian f32 rows plus a JSON
// manifest binding each row to an image and a place.
//
// .vprd layout:  "VPRD" | u32 version (1) | u32 n | u64 count | count*n f32

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace placemap {

inline constexpr std::uint32_t kVprdVersion = 1;
inline constexpr std::uint32_t kManifestVersion = 1;
inline constexpr std::size_t kVprdHeaderBytes = 20;

// Stored descriptors are accepted as unit-norm within this tolerance; f32
// rounding of a normalized vector stays well inside it.
inline constexpr double kUnitTolerance = 1e-6;

struct Coordinates {
  enum class Kind { Geographic, Planar };
  Kind kind = Kind::Planar;
  double a = 0.0;  // lat (deg) or x (m)
  double b = 0.0;  // lon (deg) or y (m)

  bool operator==(const Coordinates&) const = default;
};

struct ImageRecord {
  std::string image_id;
  std::string place_id;
  std::optional<double> heading_deg;
  std::optional<double> pitch_deg;
  std::optional<Coordinates> coords;
  std::optional<std::string> date;
  std::optional<std::string> condition;
  std::uint64_t descriptor_index = 0;

  bool operator==(const ImageRecord&) const = default;
};

struct DatasetManifest {
  std::uint32_t format_version = kManifestVersion;
  std::size_t dimension = 0;
  std::size_t count = 0;
  std::vector<ImageRecord> records;
  std::optional<std::vector<std::string>> sequence_order;

  bool operator==(const DatasetManifest&) const = default;
};

// Row-major block of f32 descriptors: row i is descriptor i.
class DescriptorMatrix {
 public:
  DescriptorMatrix() = default;
  DescriptorMatrix(std::size_t count, std::size_t dim)
      : count_(count), dim_(dim), values_(count * dim, 0.0f) {}
  DescriptorMatrix(std::size_t count, std::size_t dim, std::vector<float> values);

  std::size_t count() const { return count_; }
  std::size_t dim() const { return dim_; }
  std::span<const float> row(std::size_t i) const { return {values_.data() + i * dim_, dim_}; }
  std::span<float> row(std::size_t i) { return {values_.data() + i * dim_, dim_}; }
  const std::vector<float>& values() const { return values_; }

  bool operator==(const DescriptorMatrix&) const = default;

 private:
  std::size_t count_ = 0;
  std::size_t dim_ = 0;
  std::vector<float> values_;
};

struct Dataset {
  DatasetManifest manifest;
  DescriptorMatrix descriptors;

  std::size_t size() const { return manifest.records.size(); }
  std::size_t dim() const { return manifest.dimension; }
  const ImageRecord& record(std::size_t i) const { return manifest.records[i]; }
  std::span<const float> descriptor(std::size_t i) const {
    return descriptors.row(manifest.records[i].descriptor_index);
  }

  bool operator==(const Dataset&) const = default;
};

// Validates manifest/block consistency and normalizes every descriptor.
Dataset load_dataset(const std::filesystem::path& manifest_path,
                     const std::filesystem::path& block_path);
void save_dataset(const Dataset& dataset, const std::filesystem::path& manifest_path,
                  const std::filesystem::path& block_path);

// Directory convention: <dir>/manifest.json + <dir>/descriptors.vprd
Dataset load_dataset_dir(const std::filesystem::path& dir);
void save_dataset_dir(const Dataset& dataset, const std::filesystem::path& dir);

DescriptorMatrix read_vprd(const std::filesystem::path& path);
void write_vprd(const DescriptorMatrix& m, const std::filesystem::path& path);

DatasetManifest parse_manifest(const std::string& json_text);
std::string manifest_to_json(const DatasetManifest& manifest);

// Builds a dataset from in-memory parts, normalizing and validating exactly as
// load_dataset does.
Dataset make_dataset(std::vector<ImageRecord> records, DescriptorMatrix descriptors,
                     std::optional<std::vector<std::string>> sequence_order = std::nullopt);

// Unit-norm copy of v. Vectors already unit within 1e-12 are returned
// unchanged, which makes the operation exactly idempotent.
std::vector<double> normalize(std::span<const double> v);

enum class ReduceMethod { Slice, Pca };

// Uncentered PCA basis (top-k left singular vectors of the fitted matrix).
class PcaProjection {
 public:
  static PcaProjection fit(const DescriptorMatrix& m, std::size_t k);
  DescriptorMatrix apply(const DescriptorMatrix& m) const;
  std::size_t input_dim() const { return n_; }
  std::size_t output_dim() const { return k_; }

 private:
  std::size_t n_ = 0;
  std::size_t k_ = 0;
  std::vector<double> basis_;  // k rows of length n
};

// Output rows are renormalized to unit norm. Requires 1 <= k < n.
DescriptorMatrix reduce_dimension(const DescriptorMatrix& m, ReduceMethod method, std::size_t k);

// Record predicate over optional metadata. An unset field accepts anything;
// a set field rejects records lacking that metadata.
struct ReferenceFilter {
  std::optional<std::set<double>> headings;
  std::optional<std::set<std::string>> dates;
  std::optional<std::set<std::string>> conditions;

  bool accepts(const ImageRecord& r) const;
  bool empty() const { return !headings && !dates && !conditions; }
  std::string describe() const;
  bool operator==(const ReferenceFilter&) const = default;
};

// Parses "condition=c0+c1", "heading=0+90", "date=2019-01-01+2020-01-01";
// several clauses may be joined with ';'.
ReferenceFilter parse_filter(const std::string& spec);

Dataset filter_dataset(const Dataset& dataset, const ReferenceFilter& filter);

// Replaces the descriptor block (same record order, one row per record).
Dataset with_descriptors(const Dataset& dataset, DescriptorMatrix rows_in_record_order);

// Rows of `dataset` gathered in record order.
DescriptorMatrix descriptors_in_record_order(const Dataset& dataset);

}  // namespace placemap
