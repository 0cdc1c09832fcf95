#pragma once

// Hand-rolled generators for property tests. Each case draws from its own
// seeded engine so failures name a reproducible seed.

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "placemap/descriptor_store.hpp"
#include "placemap/error.hpp"
#include "placemap/subspace.hpp"

namespace placemap::testing {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double normal() { return normal_(rng_); }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  std::size_t index(std::size_t lo, std::size_t hi) {  // inclusive
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng_);
  }
  std::mt19937_64& engine() { return rng_; }

  std::vector<double> gaussian(std::size_t n) {
    std::vector<double> v(n);
    for (double& x : v) x = normal();
    return v;
  }
  std::vector<double> unit(std::size_t n) { return normalize(gaussian(n)); }

  // n x m column-major matrix of unit columns.
  std::vector<double> unit_columns(std::size_t n, std::size_t m) {
    std::vector<double> d;
    d.reserve(n * m);
    for (std::size_t j = 0; j < m; ++j) {
      const auto c = unit(n);
      d.insert(d.end(), c.begin(), c.end());
    }
    return d;
  }

  PlaceMatrix place(const std::string& id, std::size_t n, std::size_t m) {
    return PlaceMatrix(id, n, m, unit_columns(n, m));
  }

 private:
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_;
};

inline std::vector<double> basis_vector(std::size_t n, std::size_t i) {
  std::vector<double> e(n, 0.0);
  e[i] = 1.0;
  return e;
}

inline std::vector<double> column_major(const std::vector<std::vector<double>>& cols) {
  std::vector<double> out;
  for (const auto& c : cols) out.insert(out.end(), c.begin(), c.end());
  return out;
}

inline PlaceMatrix place_of(const std::string& id, const std::vector<std::vector<double>>& cols,
                            std::vector<double> headings = {}) {
  std::optional<std::vector<double>> hs;
  if (!headings.empty()) hs = std::move(headings);
  return PlaceMatrix(id, cols[0].size(), cols.size(), column_major(cols), {}, std::move(hs));
}

// Dataset from explicit (place, image, vector) triples; vectors are
// normalized on ingest.
struct Row {
  std::string place;
  std::string image;
  std::vector<double> values;
  std::optional<double> heading = std::nullopt;
  std::optional<std::string> condition = std::nullopt;
};

inline Dataset dataset_of(const std::vector<Row>& rows) {
  std::vector<ImageRecord> records;
  std::vector<float> values;
  const std::size_t n = rows.empty() ? 0 : rows[0].values.size();
  for (const Row& r : rows) {
    ImageRecord rec;
    rec.image_id = r.image;
    rec.place_id = r.place;
    rec.heading_deg = r.heading;
    rec.condition = r.condition;
    rec.descriptor_index = records.size();
    records.push_back(rec);
    for (double x : normalize(r.values)) values.push_back(static_cast<float>(x));
  }
  const std::size_t count = records.size();
  return make_dataset(std::move(records), DescriptorMatrix(count, n, std::move(values)));
}


// Fresh per-test scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() /
                   ("placemap_test_" + std::to_string(::getpid()) + "_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::vector<std::uint8_t> file_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_bytes(const std::filesystem::path& p, const std::vector<std::uint8_t>& b) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
}


// Kind of the placemap::Error thrown by f, or nullopt if nothing was thrown.
inline std::optional<ErrorKind> error_kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return std::nullopt;
}

inline std::string error_message_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

}  // namespace placemap::testing
