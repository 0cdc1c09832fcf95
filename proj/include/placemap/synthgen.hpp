#pragma once

// Seeded synthetic multi-view worlds.
//
// Each place r has a common latent c_r and one latent h_{r,t} per heading t,
// all unit Gaussian draws. A reference at heading t and condition k is
//   normalize(sqrt(s) c_r + sqrt(1 - s) h_{r,t} + sigma * g)
// with s = shared_frac and g a standard normal vector (per-coordinate noise).
// Intermediate queries blend two adjacent heading latents.
//
// Randomness comes from Philox4x32-10 keyed by the seed, with the counter
// addressing (element, place, stream, sub-index), so every value is a pure
// function of the configuration.

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "placemap/descriptor_store.hpp"
#include "placemap/evaluator.hpp"

namespace placemap {

class Philox4x32 {
 public:
  using Block = std::array<std::uint32_t, 4>;

  explicit Philox4x32(std::uint64_t seed)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}
  Philox4x32(std::uint32_t k0, std::uint32_t k1) : key_{k0, k1} {}

  Block operator()(Block counter) const;

  // Uniform in (0, 1] with 53 random bits, from two words.
  static double uniform(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t bits = (std::uint64_t{hi >> 5} << 26) | (lo >> 6);
    return (static_cast<double>(bits) + 1.0) * 0x1.0p-53;
  }

 private:
  std::array<std::uint32_t, 2> key_;
};

enum class QueryMode { Aligned, Intermediate };

struct SynthConfig {
  std::uint64_t seed = 42;
  std::size_t n = 256;
  std::size_t num_places = 200;
  std::vector<double> headings{0.0, 90.0, 180.0, 270.0};
  std::size_t conditions = 2;
  double shared_frac = 0.5;
  double noise_sigma = 0.1;
  QueryMode query_mode = QueryMode::Intermediate;
  std::size_t queries_per_place = 4;

  void validate() const;
  std::string to_json() const;
};

struct SynthWorld {
  Dataset references;
  Dataset queries;
  GroundTruthSpec ground_truth;  // one-to-one: the generating place
};

SynthWorld generate(const SynthConfig& config);

// Writes <dir>/references/, <dir>/queries/ and <dir>/synth_config.json.
void save_world(const SynthWorld& world, const SynthConfig& config, const std::filesystem::path& dir);

std::string synth_place_id(std::size_t r);

}  // namespace placemap
