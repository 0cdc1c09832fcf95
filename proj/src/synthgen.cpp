#include "placemap/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <set>

#include <json.hpp>

#include "placemap/binary_io.hpp"
#include "placemap/error.hpp"
#include "placemap/orientation.hpp"

namespace placemap {

Philox4x32::Block Philox4x32::operator()(Block c) const {
  constexpr std::uint32_t kM0 = 0xD2511F53u;
  constexpr std::uint32_t kM1 = 0xCD9E8D57u;
  constexpr std::uint32_t kW0 = 0x9E3779B9u;
  constexpr std::uint32_t kW1 = 0xBB67AE85u;
  std::uint32_t k0 = key_[0];
  std::uint32_t k1 = key_[1];
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      k0 += kW0;
      k1 += kW1;
    }
    const std::uint64_t p0 = std::uint64_t{kM0} * c[0];
    const std::uint64_t p1 = std::uint64_t{kM1} * c[2];
    c = {static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ k0, static_cast<std::uint32_t>(p1),
         static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ k1, static_cast<std::uint32_t>(p0)};
  }
  return c;
}

void SynthConfig::validate() const {
  if (n < 1) raise(ErrorKind::Config, "synthetic dimension must be at least 1");
  if (num_places < 1) raise(ErrorKind::Config, "need at least one place");
  if (headings.empty()) raise(ErrorKind::Config, "need at least one heading");
  std::set<double> seen;
  for (double h : headings) {
    if (!(h >= 0.0 && h < 360.0)) raise(ErrorKind::Config, "headings must lie in [0, 360)");
    if (!seen.insert(h).second) raise(ErrorKind::Config, "headings must be distinct");
  }
  if (conditions < 1) raise(ErrorKind::Config, "need at least one condition");
  if (!(shared_frac >= 0.0 && shared_frac <= 1.0)) raise(ErrorKind::Config, "shared_frac must lie in [0, 1]");
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) raise(ErrorKind::Config, "noise_sigma must be finite and non-negative");
  if (queries_per_place < 1) raise(ErrorKind::Config, "queries_per_place must be at least 1");
  if (num_places > 999'999'999) raise(ErrorKind::Config, "too many places");
}

std::string SynthConfig::to_json() const {
  nlohmann::json j;
  j["seed"] = seed;
  j["n"] = n;
  j["num_places"] = num_places;
  j["headings"] = headings;
  j["conditions"] = conditions;
  j["shared_frac"] = shared_frac;
  j["noise_sigma"] = noise_sigma;
  j["query_mode"] = query_mode == QueryMode::Aligned ? "aligned" : "intermediate";
  j["queries_per_place"] = queries_per_place;
  j["generator"] = "philox4x32-10";
  return j.dump(2) + "\n";
}

std::string synth_place_id(std::size_t r) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "p%06zu", r);
  return buf;
}

namespace {

enum Stream : std::uint32_t { kCommon = 0, kHeading = 1, kRefNoise = 2, kQueryNoise = 3, kQueryPos = 4 };

// Standard normal vector for one (place, stream, sub) address. Each Philox
// block yields a Box-Muller pair.
void gaussian(const Philox4x32& rng, std::uint32_t place, Stream stream, std::uint32_t sub,
              double scale, std::vector<double>& acc) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  const std::size_t n = acc.size();
  for (std::size_t i = 0; i < n; i += 2) {
    const auto w = rng({static_cast<std::uint32_t>(i / 2), place, stream, sub});
    const double radius = std::sqrt(-2.0 * std::log(Philox4x32::uniform(w[0], w[1])));
    const double angle = kTwoPi * Philox4x32::uniform(w[2], w[3]);
    acc[i] += scale * radius * std::cos(angle);
    if (i + 1 < n) acc[i + 1] += scale * radius * std::sin(angle);
  }
}

std::vector<double> unit_gaussian(const Philox4x32& rng, std::uint32_t place, Stream stream,
                                  std::uint32_t sub, std::size_t n) {
  std::vector<double> v(n, 0.0);
  gaussian(rng, place, stream, sub, 1.0, v);
  return normalize(v);
}

void append_f32(std::vector<float>& out, const std::vector<double>& v) {
  for (double x : normalize(v)) out.push_back(static_cast<float>(x));
}

std::string heading_tag(double h) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "h%03.0f", std::floor(h));
  return buf;
}

}  // namespace

SynthWorld generate(const SynthConfig& cfg) {
  cfg.validate();
  const Philox4x32 rng(cfg.seed);
  const std::size_t n = cfg.n;
  const std::size_t nh = cfg.headings.size();
  const double a = std::sqrt(cfg.shared_frac);
  const double b = std::sqrt(1.0 - cfg.shared_frac);
  const std::size_t grid = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(cfg.num_places))));

  std::vector<std::size_t> order(nh);
  for (std::size_t t = 0; t < nh; ++t) order[t] = t;
  std::sort(order.begin(), order.end(), [&](auto x, auto y) { return cfg.headings[x] < cfg.headings[y]; });

  std::vector<ImageRecord> refs;
  std::vector<float> ref_values;
  std::vector<ImageRecord> queries;
  std::vector<float> query_values;
  refs.reserve(cfg.num_places * nh * cfg.conditions);
  ref_values.reserve(cfg.num_places * nh * cfg.conditions * n);

  std::vector<double> v(n);
  for (std::size_t r = 0; r < cfg.num_places; ++r) {
    const auto place = static_cast<std::uint32_t>(r);
    const std::string pid = synth_place_id(r);
    const Coordinates where{Coordinates::Kind::Planar, 25.0 * static_cast<double>(r % grid),
                            25.0 * static_cast<double>(r / grid)};
    const std::vector<double> common = unit_gaussian(rng, place, kCommon, 0, n);
    std::vector<std::vector<double>> latent(nh);
    for (std::size_t t = 0; t < nh; ++t) {
      latent[t] = unit_gaussian(rng, place, kHeading, static_cast<std::uint32_t>(t), n);
    }

    for (std::size_t t = 0; t < nh; ++t) {
      for (std::size_t k = 0; k < cfg.conditions; ++k) {
        for (std::size_t i = 0; i < n; ++i) v[i] = a * common[i] + b * latent[t][i];
        if (cfg.noise_sigma > 0.0) {
          gaussian(rng, place, kRefNoise, static_cast<std::uint32_t>(t * cfg.conditions + k),
                   cfg.noise_sigma, v);
        }
        ImageRecord rec;
        rec.image_id = pid + "_" + heading_tag(cfg.headings[t]) + "_c" + std::to_string(k);
        rec.place_id = pid;
        rec.heading_deg = cfg.headings[t];
        rec.coords = where;
        rec.date = std::to_string(2015 + k) + "-06-01";
        rec.condition = "c" + std::to_string(k);
        rec.descriptor_index = refs.size();
        refs.push_back(std::move(rec));
        append_f32(ref_values, v);
      }
    }

    for (std::size_t j = 0; j < cfg.queries_per_place; ++j) {
      const auto sub = static_cast<std::uint32_t>(j);
      const auto pos = rng({0, place, kQueryPos, sub});
      const std::size_t t1 = order[j % nh];
      double heading = cfg.headings[t1];
      if (cfg.query_mode == QueryMode::Aligned || nh == 1) {
        for (std::size_t i = 0; i < n; ++i) v[i] = a * common[i] + b * latent[t1][i];
      } else {
        // Position u in [1/3, 2/3] of the way to the next heading; the
        // interpolation weight on the nearer latent is 1 - u.
        const std::size_t t2 = order[(j + 1) % nh];
        const double u = (1.0 + Philox4x32::uniform(pos[0], pos[1])) / 3.0;
        const double gap = wrap_degrees(cfg.headings[t2] - cfg.headings[t1]);
        heading = wrap_degrees(cfg.headings[t1] + u * gap);
        const double lambda = 1.0 - u;
        for (std::size_t i = 0; i < n; ++i) {
          v[i] = a * common[i] + b * (lambda * latent[t1][i] + (1.0 - lambda) * latent[t2][i]);
        }
      }
      if (cfg.noise_sigma > 0.0) gaussian(rng, place, kQueryNoise, sub, cfg.noise_sigma, v);

      const double offset_r = 3.0 * Philox4x32::uniform(pos[2], pos[3]);
      const double offset_a = 2.0 * std::numbers::pi * Philox4x32::uniform(pos[1], pos[0]);
      ImageRecord rec;
      rec.image_id = pid + "_q" + std::to_string(j);
      rec.place_id = pid;
      rec.heading_deg = heading;
      rec.coords = Coordinates{Coordinates::Kind::Planar, where.a + offset_r * std::cos(offset_a),
                               where.b + offset_r * std::sin(offset_a)};
      rec.descriptor_index = queries.size();
      queries.push_back(std::move(rec));
      append_f32(query_values, v);
    }
  }

  SynthWorld w;
  const std::size_t nr = refs.size();
  const std::size_t nq = queries.size();
  w.references = make_dataset(std::move(refs), DescriptorMatrix(nr, n, std::move(ref_values)));
  w.queries = make_dataset(std::move(queries), DescriptorMatrix(nq, n, std::move(query_values)));
  w.ground_truth = ground_truth_one_to_one(w.queries);
  return w;
}

void save_world(const SynthWorld& world, const SynthConfig& config, const std::filesystem::path& dir) {
  save_dataset_dir(world.references, dir / "references");
  save_dataset_dir(world.queries, dir / "queries");
  const std::string text = config.to_json();
  io::write_file((dir / "synth_config.json").string(),
                 {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

}  // namespace placemap
