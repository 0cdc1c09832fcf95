#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>
#include <unordered_map>

#include "placemap/error.hpp"
#include "placemap/evaluator.hpp"

namespace placemap {

std::string_view to_string(GroundTruthMode m) noexcept {
  switch (m) {
    case GroundTruthMode::OneToOne: return "one_to_one";
    case GroundTruthMode::IndexWindow: return "index_window";
    case GroundTruthMode::Radius: return "radius";
  }
  return "?";
}

std::string GroundTruthSpec::describe() const {
  std::ostringstream os;
  os << to_string(mode);
  if (mode != GroundTruthMode::OneToOne) os << '(' << tolerance << ')';
  return os.str();
}

namespace {

[[noreturn]] void unresolvable(const std::vector<std::string>& ids, const std::string& why) {
  std::string msg = std::to_string(ids.size()) + " quer" + (ids.size() == 1 ? "y" : "ies") +
                    " without ground truth (" + why + "):";
  for (std::size_t i = 0; i < std::min<std::size_t>(ids.size(), 10); ++i) msg += " " + ids[i];
  if (ids.size() > 10) msg += " ...";
  raise(ErrorKind::Evaluation, msg);
}

}  // namespace

GroundTruthSpec ground_truth_one_to_one(const Dataset& queries) {
  GroundTruthSpec gt;
  gt.mode = GroundTruthMode::OneToOne;
  for (const auto& r : queries.manifest.records) gt.valid[r.image_id] = {r.place_id};
  return gt;
}

GroundTruthSpec ground_truth_index_window(const Dataset& references, const Dataset& queries,
                                          std::size_t window) {
  std::unordered_map<std::string, const ImageRecord*> by_id;
  for (const auto& r : references.manifest.records) by_id.emplace(r.image_id, &r);

  std::vector<std::string> sequence;  // places in order of first appearance
  std::unordered_map<std::string, std::size_t> position;
  auto visit = [&](const std::string& place) {
    if (position.emplace(place, sequence.size()).second) sequence.push_back(place);
  };
  if (references.manifest.sequence_order) {
    for (const auto& id : *references.manifest.sequence_order) {
      const auto it = by_id.find(id);
      if (it == by_id.end()) {
        raise(ErrorKind::Evaluation, "sequence_order names unknown image '" + id + "'");
      }
      visit(it->second->place_id);
    }
  }
  for (const auto& r : references.manifest.records) visit(r.place_id);

  GroundTruthSpec gt;
  gt.mode = GroundTruthMode::IndexWindow;
  gt.tolerance = static_cast<double>(window);
  std::vector<std::string> missing;
  for (const auto& q : queries.manifest.records) {
    const auto it = position.find(q.place_id);
    if (it == position.end()) {
      missing.push_back(q.image_id);
      continue;
    }
    const std::size_t lo = it->second > window ? it->second - window : 0;
    const std::size_t hi = std::min(sequence.size() - 1, it->second + window);
    std::vector<std::string> places(sequence.begin() + static_cast<std::ptrdiff_t>(lo),
                                    sequence.begin() + static_cast<std::ptrdiff_t>(hi + 1));
    std::sort(places.begin(), places.end());
    gt.valid[q.image_id] = std::move(places);
  }
  if (!missing.empty()) unresolvable(missing, "place absent from the references");
  return gt;
}

double haversine_m(double lat1, double lon1, double lat2, double lon2) {
  constexpr double kEarthRadius = 6'371'008.8;
  constexpr double rad = std::numbers::pi / 180.0;
  const double dlat = (lat2 - lat1) * rad;
  const double dlon = (lon2 - lon1) * rad;
  const double a = std::sin(dlat / 2) * std::sin(dlat / 2) +
                   std::cos(lat1 * rad) * std::cos(lat2 * rad) * std::sin(dlon / 2) * std::sin(dlon / 2);
  return 2.0 * kEarthRadius * std::asin(std::min(1.0, std::sqrt(a)));
}

GroundTruthSpec ground_truth_radius(const Dataset& references, const Dataset& queries,
                                    double radius_m) {
  if (!(radius_m >= 0.0)) raise(ErrorKind::Config, "radius must be non-negative");
  for (const auto& r : references.manifest.records) {
    if (!r.coords) raise(ErrorKind::Evaluation, "radius ground truth needs coordinates; reference '" + r.image_id + "' has none");
  }
  GroundTruthSpec gt;
  gt.mode = GroundTruthMode::Radius;
  gt.tolerance = radius_m;
  std::vector<std::string> missing;
  for (const auto& q : queries.manifest.records) {
    if (!q.coords) {
      missing.push_back(q.image_id);
      continue;
    }
    std::set<std::string> places;
    for (const auto& r : references.manifest.records) {
      if (r.coords->kind != q.coords->kind) {
        raise(ErrorKind::Evaluation, "query '" + q.image_id + "' and reference '" + r.image_id +
                                         "' use different coordinate kinds");
      }
      const double d = q.coords->kind == Coordinates::Kind::Geographic
                           ? haversine_m(q.coords->a, q.coords->b, r.coords->a, r.coords->b)
                           : std::hypot(q.coords->a - r.coords->a, q.coords->b - r.coords->b);
      if (d <= radius_m) places.insert(r.place_id);
    }
    if (places.empty()) {
      missing.push_back(q.image_id);
      continue;
    }
    gt.valid[q.image_id] = std::vector<std::string>(places.begin(), places.end());
  }
  if (!missing.empty()) unresolvable(missing, "no coordinates or no reference within radius");
  return gt;
}

std::vector<double> recall_at_k(std::span<const MatchResult> results, const GroundTruthSpec& gt,
                                std::span<const std::size_t> ks) {
  std::vector<std::size_t> hits(ks.size(), 0);
  std::vector<std::string> missing;
  for (const MatchResult& r : results) {
    const auto it = gt.valid.find(r.query_id);
    if (it == gt.valid.end()) {
      missing.push_back(r.query_id);
      continue;
    }
    const auto& valid = it->second;
    std::size_t first = r.ranking.size();
    for (std::size_t i = 0; i < r.ranking.size(); ++i) {
      if (std::binary_search(valid.begin(), valid.end(), r.place_at(i))) {
        first = i;
        break;
      }
    }
    for (std::size_t j = 0; j < ks.size(); ++j) {
      if (first < ks[j]) ++hits[j];
    }
  }
  if (!missing.empty()) unresolvable(missing, "unknown query id");
  std::vector<double> out(ks.size(), 0.0);
  if (!results.empty()) {
    for (std::size_t j = 0; j < ks.size(); ++j) {
      out[j] = static_cast<double>(hits[j]) / static_cast<double>(results.size());
    }
  }
  return out;
}

}  // namespace placemap
