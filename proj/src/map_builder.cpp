#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "placemap/error.hpp"
#include "placemap/map_index.hpp"
#include "placemap/parallel.hpp"

namespace placemap {

using nlohmann::json;

std::string_view to_string(MapMethod m) noexcept {
  switch (m) {
    case MapMethod::QrFull: return "qr_full";
    case MapMethod::Qr2vp: return "qr_2vp";
    case MapMethod::Svd: return "svd";
  }
  return "?";
}

MapMethod parse_map_method(std::string_view s) {
  if (s == "qr" || s == "qr_full") return MapMethod::QrFull;
  if (s == "qr_2vp" || s == "2vp") return MapMethod::Qr2vp;
  if (s == "svd") return MapMethod::Svd;
  raise(ErrorKind::Config, "unknown map method '" + std::string(s) + "'");
}

std::string SvdRank::describe() const { return minus_one ? "m-1" : std::to_string(k); }

SvdRank SvdRank::parse(std::string_view s) {
  if (s == "m-1" || s == "k-1") return SvdRank{true, 0};
  std::uint32_t k = 0;
  try {
    std::size_t used = 0;
    const long v = std::stol(std::string(s), &used);
    if (used != s.size() || v < 1 || v > 1'000'000) throw std::invalid_argument("range");
    k = static_cast<std::uint32_t>(v);
  } catch (const std::exception&) {
    raise(ErrorKind::Config, "svd rank '" + std::string(s) + "' is neither 'm-1' nor a positive integer");
  }
  return SvdRank{false, k};
}

void MapBuildConfig::validate() const {
  if (method == MapMethod::Svd && !svd_rank) raise(ErrorKind::Config, "svd maps need an svd rank");
  if (method != MapMethod::Svd && svd_rank) {
    raise(ErrorKind::Config, "svd rank given for method " + std::string(to_string(method)));
  }
  if (svd_rank && !svd_rank->minus_one && svd_rank->k < 1) {
    raise(ErrorKind::Config, "svd rank must be at least 1");
  }
  if (!(dep_tol > 0.0 && dep_tol < 1.0)) raise(ErrorKind::Config, "dep_tol must lie in (0, 1)");
}

std::string MapBuildConfig::to_json() const {
  json j;
  j["method"] = std::string(to_string(method));
  j["svd_rank"] = svd_rank ? json(svd_rank->describe()) : json(nullptr);
  j["reference_filter"] = reference_filter.describe();
  j["dep_tol"] = dep_tol;
  j["store_r_factor"] = store_r_factor;
  j["retain_sources"] = retain_sources;
  return j.dump();
}

MapBuildConfig MapBuildConfig::from_json(const std::string& text) {
  MapBuildConfig c;
  try {
    const json j = json::parse(text);
    c.method = parse_map_method(j.at("method").get<std::string>());
    if (!j.at("svd_rank").is_null()) c.svd_rank = SvdRank::parse(j.at("svd_rank").get<std::string>());
    c.reference_filter = parse_filter(j.at("reference_filter").get<std::string>());
    c.dep_tol = j.at("dep_tol").get<double>();
    c.store_r_factor = j.at("store_r_factor").get<bool>();
    c.retain_sources = j.at("retain_sources").get<bool>();
  } catch (const json::exception& e) {
    raise(ErrorKind::Format, std::string("map configuration: ") + e.what());
  } catch (const Error& e) {
    raise(ErrorKind::Format, std::string("map configuration: ") + e.what());
  }
  return c;
}

// ---------------------------------------------------------------------------

std::size_t MapSubspace::memory_bytes() const {
  std::size_t b = place_id.size() + tag.size() + q.size() * sizeof(float) +
                  retained.size() * sizeof(std::uint32_t);
  for (const auto& id : column_ids) b += id.size();
  if (column_headings) b += column_headings->size() * sizeof(double);
  if (r_factor) b += r_factor->size() * sizeof(double);
  if (singular_values) b += singular_values->size() * sizeof(double);
  if (sources) b += sources->size() * sizeof(float);
  return b;
}

namespace {

// out = (B^T B)^-1 for the n x r column-major basis B, via Cholesky.
void inverse_gram(const float* b, std::size_t n, std::size_t r, double* out, const std::string& place_id) {
  std::vector<double> l(r * r, 0.0);
  for (std::size_t j = 0; j < r; ++j) {
    for (std::size_t k = 0; k <= j; ++k) {
      double g = 0.0;
      for (std::size_t i = 0; i < n; ++i) g += static_cast<double>(b[j * n + i]) * b[k * n + i];
      for (std::size_t t = 0; t < k; ++t) g -= l[j * r + t] * l[k * r + t];
      if (j == k) {
        if (!(g > 0.0)) raise(ErrorKind::Data, "place '" + place_id + "' has a singular stored basis");
        l[j * r + j] = std::sqrt(g);
      } else {
        l[j * r + k] = g / l[k * r + k];
      }
    }
  }
  // Columns of L^-1, then out = L^-T L^-1.
  std::vector<double> inv(r * r, 0.0);
  for (std::size_t c = 0; c < r; ++c) {
    for (std::size_t i = c; i < r; ++i) {
      double v = i == c ? 1.0 : 0.0;
      for (std::size_t t = c; t < i; ++t) v -= l[i * r + t] * inv[t * r + c];
      inv[i * r + c] = v / l[i * r + i];
    }
  }
  for (std::size_t j = 0; j < r; ++j) {
    for (std::size_t k = 0; k < r; ++k) {
      double v = 0.0;
      for (std::size_t t = std::max(j, k); t < r; ++t) v += inv[t * r + j] * inv[t * r + k];
      out[j * r + k] = v;
    }
  }
}

}  // namespace

PlaceSubspace widen(const MapSubspace& s, std::size_t n) {
  PlaceSubspace p;
  p.place_id = s.place_id;
  p.tag = s.tag;
  p.method = s.method;
  p.n = n;
  p.rank = s.rank;
  p.q.assign(s.q.begin(), s.q.end());
  p.r_factor = s.r_factor;
  p.retained = s.retained;
  p.column_ids = s.column_ids;
  p.column_headings = s.column_headings;
  p.singular_values = s.singular_values;
  return p;
}

MapIndex::MapIndex(std::size_t n, MapBuildConfig config,
                   std::vector<std::shared_ptr<const MapSubspace>> entries)
    : n_(n), config_(std::move(config)), entries_(std::move(entries)) {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const MapSubspace& e = *entries_[i];
    if (e.q.size() != n_ * e.rank) raise(ErrorKind::Shape, "subspace basis size mismatch");
    if (place_ids_.empty() || place_ids_.back() != e.place_id) {
      if (!place_ids_.empty() && !(place_ids_.back() < e.place_id)) {
        raise(ErrorKind::Format, "map entries not in ascending place order at '" + e.place_id + "'");
      }
      place_ids_.push_back(e.place_id);
      place_begin_.push_back(i);
    } else {
      for (std::size_t j = place_begin_.back(); j < i; ++j) {
        if (entries_[j]->tag == e.tag) {
          raise(ErrorKind::Format, "duplicate subspace tag '" + e.tag + "' in place '" + e.place_id + "'");
        }
      }
    }
    entry_place_.push_back(place_ids_.size() - 1);
    gram_offset_.push_back(gram_inv_.size());
    gram_inv_.resize(gram_inv_.size() + std::size_t{e.rank} * e.rank);
  }
  place_begin_.push_back(entries_.size());
  parallel_for(entries_.size(), resolve_threads(config_.threads), [&](std::size_t i) {
    const MapSubspace& e = *entries_[i];
    inverse_gram(e.q.data(), n_, e.rank, gram_inv_.data() + gram_offset_[i], e.place_id);
  });
}

std::optional<std::size_t> MapIndex::find_place(const std::string& place_id) const {
  const auto it = std::lower_bound(place_ids_.begin(), place_ids_.end(), place_id);
  if (it == place_ids_.end() || *it != place_id) return std::nullopt;
  return static_cast<std::size_t>(it - place_ids_.begin());
}

std::size_t MapIndex::total_basis_columns() const {
  std::size_t c = 0;
  for (const auto& e : entries_) c += e->rank;
  return c;
}

std::size_t MapIndex::memory_bytes() const {
  std::size_t b = 0;
  for (const auto& e : entries_) b += e->memory_bytes();
  return b;
}

bool MapIndex::operator==(const MapIndex& o) const {
  if (n_ != o.n_ || !(config_ == o.config_) || entries_.size() != o.entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (!(*entries_[i] == *o.entries_[i])) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------

namespace {

// Columns of one place, sorted by image id so output ignores record order.
struct PlaceColumns {
  std::string place_id;
  std::vector<std::string> ids;
  std::vector<std::optional<double>> headings;
  std::vector<float> values;  // column-major, n per column
};

void sort_columns(PlaceColumns& pc, std::size_t n) {
  std::vector<std::size_t> order(pc.ids.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return pc.ids[a] < pc.ids[b]; });
  PlaceColumns out{pc.place_id, {}, {}, {}};
  out.values.reserve(pc.values.size());
  for (std::size_t j : order) {
    out.ids.push_back(pc.ids[j]);
    out.headings.push_back(pc.headings[j]);
    out.values.insert(out.values.end(), pc.values.begin() + static_cast<std::ptrdiff_t>(j * n),
                      pc.values.begin() + static_cast<std::ptrdiff_t>((j + 1) * n));
  }
  pc = std::move(out);
}

std::string heading_label(double h) {
  std::ostringstream os;
  os << h;
  return os.str();
}

MapSubspace make_entry(const PlaceColumns& pc, std::span<const std::size_t> cols, std::string tag,
                       std::size_t n, const MapBuildConfig& cfg) {
  const std::size_t m = cols.size();
  std::vector<double> data;
  data.reserve(m * n);
  std::vector<std::string> ids;
  std::vector<float> sources;
  bool all_headings = true;
  std::vector<double> headings;
  for (std::size_t j : cols) {
    const float* src = pc.values.data() + j * n;
    data.insert(data.end(), src, src + n);
    if (cfg.retain_sources) sources.insert(sources.end(), src, src + n);
    ids.push_back(pc.ids[j]);
    if (pc.headings[j]) {
      headings.push_back(*pc.headings[j]);
    } else {
      all_headings = false;
    }
  }
  std::optional<std::vector<double>> hs;
  if (all_headings) hs = std::move(headings);
  if (n < m) {
    raise(ErrorKind::Shape, "place '" + pc.place_id + "' has " + std::to_string(m) +
                                " references but dimension " + std::to_string(n));
  }
  const PlaceMatrix pm(pc.place_id, n, m, std::move(data), ids, hs);

  PlaceSubspace sub;
  if (cfg.method == MapMethod::Svd) {
    sub = factor_svd(pm, cfg.svd_rank->resolve(m), cfg.dep_tol);
  } else {
    sub = factor_qr(pm, cfg.dep_tol);
  }

  MapSubspace e;
  e.place_id = pc.place_id;
  e.tag = std::move(tag);
  e.method = sub.method;
  e.rank = static_cast<std::uint32_t>(sub.rank);
  e.column_ids = std::move(ids);
  e.column_headings = std::move(hs);
  e.retained = std::move(sub.retained);
  if (cfg.store_r_factor) e.r_factor = std::move(sub.r_factor);
  e.singular_values = std::move(sub.singular_values);
  if (cfg.retain_sources) e.sources = std::move(sources);
  e.q.assign(sub.q.begin(), sub.q.end());
  return e;
}

// Heading pairs for multi-subspace places: circular neighbours on a regular
// grid, otherwise each heading's nearest neighbour.
std::vector<std::pair<double, double>> viewpoint_pairs(const std::vector<double>& hs,
                                                       const std::string& place_id,
                                                       std::vector<std::string>& warnings) {
  const std::size_t h = hs.size();
  std::vector<std::pair<double, double>> pairs;
  if (h == 2) return {{hs[0], hs[1]}};
  const double step = 360.0 / static_cast<double>(h);
  bool grid = true;
  for (std::size_t i = 0; i < h; ++i) {
    const double gap = i + 1 < h ? hs[i + 1] - hs[i] : hs[0] + 360.0 - hs[i];
    if (std::abs(gap - step) > 1e-6) grid = false;
  }
  if (grid) {
    for (std::size_t i = 0; i < h; ++i) pairs.emplace_back(hs[i], hs[(i + 1) % h]);
    return pairs;
  }
  warnings.push_back("place '" + place_id + "': headings are not a regular grid; pairing nearest neighbours");
  auto circ = [](double a, double b) {
    const double d = std::fmod(std::abs(a - b), 360.0);
    return std::min(d, 360.0 - d);
  };
  std::vector<std::pair<std::size_t, std::size_t>> seen;
  for (std::size_t i = 0; i < h; ++i) {
    std::size_t best = i == 0 ? 1 : 0;
    for (std::size_t j = 0; j < h; ++j) {
      if (j != i && circ(hs[i], hs[j]) < circ(hs[i], hs[best])) best = j;
    }
    const std::pair<std::size_t, std::size_t> key{std::min(i, best), std::max(i, best)};
    if (std::find(seen.begin(), seen.end(), key) == seen.end()) {
      seen.push_back(key);
      pairs.emplace_back(hs[key.first], hs[key.second]);
    }
  }
  return pairs;
}

std::vector<MapSubspace> build_place(const PlaceColumns& pc, std::size_t n,
                                     const MapBuildConfig& cfg, std::vector<std::string>& warnings) {
  const std::size_t m = pc.ids.size();
  std::vector<std::size_t> all(m);
  std::iota(all.begin(), all.end(), 0);
  if (cfg.method != MapMethod::Qr2vp) return {make_entry(pc, all, "", n, cfg)};

  if (m < 2) {
    warnings.push_back("place '" + pc.place_id + "' has fewer than two references; skipped");
    return {};
  }
  std::vector<double> hs;
  for (const auto& h : pc.headings) hs.push_back(*h);
  std::sort(hs.begin(), hs.end());
  hs.erase(std::unique(hs.begin(), hs.end()), hs.end());
  if (hs.size() == 1) {
    warnings.push_back("place '" + pc.place_id + "' has a single heading; one subspace built");
    return {make_entry(pc, all, heading_label(hs[0]), n, cfg)};
  }
  std::vector<MapSubspace> out;
  for (const auto& [a, b] : viewpoint_pairs(hs, pc.place_id, warnings)) {
    std::vector<std::size_t> cols;
    for (std::size_t j = 0; j < m; ++j) {
      if (*pc.headings[j] == a || *pc.headings[j] == b) cols.push_back(j);
    }
    out.push_back(make_entry(pc, cols, heading_label(a) + "-" + heading_label(b), n, cfg));
  }
  return out;
}

struct BuildOutcome {
  std::vector<std::vector<MapSubspace>> per_place;
  std::vector<std::vector<std::string>> warnings;
};

BuildOutcome factor_places(const std::vector<PlaceColumns>& places, std::size_t n,
                           const MapBuildConfig& cfg) {
  BuildOutcome out;
  out.per_place.resize(places.size());
  out.warnings.resize(places.size());
  parallel_for(places.size(), resolve_threads(cfg.threads), [&](std::size_t i) {
    out.per_place[i] = build_place(places[i], n, cfg, out.warnings[i]);
  });
  return out;
}

}  // namespace

MapIndex build_map(const Dataset& dataset, const MapBuildConfig& config, BuildStats* stats) {
  const auto t0 = std::chrono::steady_clock::now();
  config.validate();
  const std::size_t n = dataset.dim();

  std::set<std::string> all_places;
  for (const auto& r : dataset.manifest.records) all_places.insert(r.place_id);

  std::map<std::string, PlaceColumns> grouped;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const ImageRecord& r = dataset.record(i);
    if (!config.reference_filter.accepts(r)) continue;
    if (config.method == MapMethod::Qr2vp && !r.heading_deg) {
      raise(ErrorKind::Config, "qr_2vp needs headings; image '" + r.image_id + "' has none");
    }
    PlaceColumns& pc = grouped[r.place_id];
    pc.place_id = r.place_id;
    pc.ids.push_back(r.image_id);
    pc.headings.push_back(r.heading_deg);
    const auto d = dataset.descriptor(i);
    pc.values.insert(pc.values.end(), d.begin(), d.end());
  }

  BuildStats local;
  for (const auto& p : all_places) {
    if (!grouped.count(p)) {
      ++local.skipped_places;
      local.warnings.push_back("place '" + p + "' is empty after filtering; skipped");
    }
  }

  std::vector<PlaceColumns> places;
  places.reserve(grouped.size());
  for (auto& [id, pc] : grouped) {
    sort_columns(pc, n);
    places.push_back(std::move(pc));
  }

  BuildOutcome built = factor_places(places, n, config);
  std::vector<std::shared_ptr<const MapSubspace>> entries;
  for (std::size_t i = 0; i < places.size(); ++i) {
    for (auto& w : built.warnings[i]) local.warnings.push_back(std::move(w));
    if (built.per_place[i].empty()) ++local.skipped_places;
    for (auto& e : built.per_place[i]) {
      entries.push_back(std::make_shared<const MapSubspace>(std::move(e)));
      ++local.decompositions;
    }
  }
  MapIndex map(n, config, std::move(entries));
  local.places = map.place_count();
  local.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (stats) *stats = std::move(local);
  return map;
}

MapIndex incremental_add(const MapIndex& map, const std::string& place_id,
                         std::span<const ReferenceColumn> added, BuildStats* stats) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t n = map.dimension();
  const MapBuildConfig& cfg = map.config();

  PlaceColumns pc;
  pc.place_id = place_id;
  const auto existing = map.find_place(place_id);
  if (existing) {
    for (std::size_t e = map.place_begin(*existing); e < map.place_begin(*existing + 1); ++e) {
      const MapSubspace& s = map.subspace(e);
      if (!s.sources) {
        raise(ErrorKind::Capability,
              "place '" + place_id + "' was stored without source columns; cannot extend it");
      }
      for (std::size_t j = 0; j < s.column_count(); ++j) {
        if (std::find(pc.ids.begin(), pc.ids.end(), s.column_ids[j]) != pc.ids.end()) continue;
        pc.ids.push_back(s.column_ids[j]);
        pc.headings.push_back(s.column_headings ? std::optional<double>((*s.column_headings)[j])
                                                : std::nullopt);
        const float* src = s.sources->data() + j * n;
        pc.values.insert(pc.values.end(), src, src + n);
      }
    }
  }
  for (const ReferenceColumn& c : added) {
    if (c.values.size() != n) {
      raise(ErrorKind::Shape, "added column '" + c.image_id + "' has dimension " +
                                  std::to_string(c.values.size()) + ", map has " + std::to_string(n));
    }
    if (std::find(pc.ids.begin(), pc.ids.end(), c.image_id) != pc.ids.end()) {
      raise(ErrorKind::Data, "image id '" + c.image_id + "' already present in place '" + place_id + "'");
    }
    if (cfg.method == MapMethod::Qr2vp && !c.heading_deg) {
      raise(ErrorKind::Config, "qr_2vp needs headings; added image '" + c.image_id + "' has none");
    }
    const std::vector<double> unit = normalize(c.values);
    pc.ids.push_back(c.image_id);
    pc.headings.push_back(c.heading_deg);
    for (double v : unit) pc.values.push_back(static_cast<float>(v));
  }
  sort_columns(pc, n);

  BuildStats local;
  std::vector<MapSubspace> rebuilt;
  if (!pc.ids.empty()) rebuilt = build_place(pc, n, cfg, local.warnings);

  std::vector<std::shared_ptr<const MapSubspace>> entries;
  bool inserted = false;
  auto insert_rebuilt = [&] {
    for (auto& e : rebuilt) {
      entries.push_back(std::make_shared<const MapSubspace>(std::move(e)));
      ++local.decompositions;
    }
    inserted = true;
  };
  for (const auto& e : map.entries()) {
    if (!inserted && !(e->place_id < place_id)) insert_rebuilt();
    if (e->place_id != place_id) entries.push_back(e);
  }
  if (!inserted) insert_rebuilt();

  MapIndex out(n, cfg, std::move(entries));
  local.places = out.place_count();
  local.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (stats) *stats = std::move(local);
  return out;
}

}  // namespace placemap
