#include "placemap/orientation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <limits>
#include <numbers>

#include "placemap/descriptor_store.hpp"
#include "placemap/error.hpp"

namespace placemap {

namespace {
constexpr double kRad = std::numbers::pi / 180.0;
constexpr double kZeroResultant = 1e-12;
}  // namespace

std::string_view to_string(HeadingMethod m) noexcept {
  return m == HeadingMethod::QrCoeff ? "qr_coeff" : "pooling_softmax";
}

double wrap_degrees(double deg) {
  double r = std::fmod(deg, 360.0);
  if (r < 0.0) r += 360.0;
  return r >= 360.0 ? 0.0 : r;
}

// Reduce to a quadrant plus a remainder in [-45, 45] so that multiples of 90
// produce exact zeros and ones.
double sin_deg(double deg) {
  const double r = wrap_degrees(deg);
  const double quadrant = std::nearbyint(r / 90.0);
  const double rem = (r - 90.0 * quadrant) * kRad;
  switch (static_cast<int>(quadrant) & 3) {
    case 0: return std::sin(rem);
    case 1: return std::cos(rem);
    case 2: return -std::sin(rem);
    default: return -std::cos(rem);
  }
}

double cos_deg(double deg) {
  const double r = wrap_degrees(deg);
  const double quadrant = std::nearbyint(r / 90.0);
  const double rem = (r - 90.0 * quadrant) * kRad;
  switch (static_cast<int>(quadrant) & 3) {
    case 0: return std::cos(rem);
    case 1: return -std::sin(rem);
    case 2: return -std::cos(rem);
    default: return std::sin(rem);
  }
}

double angular_error(double a_deg, double b_deg) {
  const double d = wrap_degrees(a_deg - b_deg);
  return std::min(d, 360.0 - d);
}

CircularMean circular_mean(std::span<const double> headings_deg, std::span<const double> weights) {
  if (headings_deg.size() != weights.size() || headings_deg.empty()) {
    raise(ErrorKind::Shape, "circular mean needs one weight per heading");
  }
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) raise(ErrorKind::Domain, "circular mean weights must be finite and non-negative");
    total += w;
  }
  if (!(total > 0.0)) raise(ErrorKind::UndefinedHeading, "circular mean weights sum to zero");
  double s = 0.0;
  double c = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    s += weights[i] * sin_deg(headings_deg[i]);
    c += weights[i] * cos_deg(headings_deg[i]);
  }
  s /= total;
  c /= total;
  CircularMean out;
  out.resultant_length = std::min(1.0, std::hypot(s, c));
  out.theta_deg = out.resultant_length <= kZeroResultant ? 0.0 : wrap_degrees(std::atan2(s, c) / kRad);
  return out;
}

namespace {

// Collapses per-column weights to per-heading weights by `combine`, then
// normalizes and takes the circular mean.
HeadingEstimate finish(std::map<double, std::vector<double>> per_heading, HeadingMethod method,
                       bool average) {
  HeadingEstimate est;
  est.method = method;
  for (auto& [h, ws] : per_heading) {
    if (ws.size() > 1) est.merged_headings = true;
    double v = 0.0;
    for (double w : ws) v += w;
    if (average) v /= static_cast<double>(ws.size());
    est.headings.push_back(h);
    est.weights.push_back(v);
  }
  double total = 0.0;
  for (double w : est.weights) total += w;
  if (!(total > 0.0)) raise(ErrorKind::UndefinedHeading, "no positive heading evidence for this query");
  for (double& w : est.weights) w /= total;
  const CircularMean cm = circular_mean(est.headings, est.weights);
  est.theta_deg = cm.theta_deg;
  est.resultant_length = cm.resultant_length;
  est.zero_confidence = cm.resultant_length <= kZeroResultant;
  return est;
}

}  // namespace

HeadingEstimate estimate_heading_qr(const PlaceSubspace& sub, std::span<const double> query) {
  if (sub.method != FactorMethod::QrFull) {
    raise(ErrorKind::Capability, "heading estimation needs a QR subspace; '" + sub.place_id + "' is truncated SVD");
  }
  if (!sub.r_factor) raise(ErrorKind::Capability, "subspace '" + sub.place_id + "' was stored without its R factor");
  if (!sub.column_headings) raise(ErrorKind::Capability, "subspace '" + sub.place_id + "' has no column headings");
  if (query.size() != sub.n) raise(ErrorKind::Shape, "query dimension differs from subspace dimension");

  const std::size_t k = sub.rank;
  const std::vector<double> d = normalize(query);
  std::vector<double> y(k);
  for (std::size_t j = 0; j < k; ++j) {
    double s = 0.0;
    const auto qj = sub.basis_column(j);
    for (std::size_t i = 0; i < sub.n; ++i) s += qj[i] * d[i];
    y[j] = s;
  }
  // R restricted to the retained columns is upper triangular in pivot order.
  std::vector<double> x(k);
  for (std::size_t i = k; i-- > 0;) {
    double s = y[i];
    for (std::size_t j = i + 1; j < k; ++j) s -= sub.r(i, sub.retained[j]) * x[j];
    const double diag = sub.r(i, sub.retained[i]);
    if (diag == 0.0) raise(ErrorKind::Rank, "R factor of '" + sub.place_id + "' is singular");
    x[i] = s / diag;
  }
  std::map<double, std::vector<double>> per_heading;
  for (std::size_t j = 0; j < k; ++j) {
    per_heading[(*sub.column_headings)[sub.retained[j]]].push_back(std::max(x[j], 0.0));
  }
  return finish(std::move(per_heading), HeadingMethod::QrCoeff, true);
}

HeadingEstimate estimate_heading_pooling(const PlaceMatrix& references, std::span<const double> query,
                                         double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) raise(ErrorKind::Parameter, "softmax temperature must be positive");
  if (!references.column_headings()) {
    raise(ErrorKind::Capability, "place '" + references.place_id() + "' has no column headings");
  }
  if (query.size() != references.n()) raise(ErrorKind::Shape, "query dimension differs from references");
  const std::vector<double> d = normalize(query);

  std::map<double, double> best;
  for (std::size_t j = 0; j < references.m(); ++j) {
    double s = 0.0;
    const auto col = references.column(j);
    for (std::size_t i = 0; i < references.n(); ++i) s += col[i] * d[i];
    const double h = (*references.column_headings())[j];
    const auto it = best.find(h);
    if (it == best.end()) {
      best.emplace(h, s);
    } else {
      it->second = std::max(it->second, s);
    }
  }
  double mx = -std::numeric_limits<double>::infinity();
  for (const auto& [h, s] : best) mx = std::max(mx, s);
  std::map<double, std::vector<double>> per_heading;
  for (const auto& [h, s] : best) per_heading[h].push_back(std::exp((s - mx) / tau));
  HeadingEstimate est = finish(std::move(per_heading), HeadingMethod::PoolingSoftmax, false);
  est.merged_headings = best.size() < references.m();
  return est;
}

double bias_bound(double translation_m, double depth_m) {
  if (!(translation_m >= 0.0) || !(translation_m < depth_m) || !std::isfinite(depth_m)) {
    raise(ErrorKind::Domain, "bias bound needs 0 <= T < D");
  }
  return std::atan(translation_m / std::sqrt(depth_m * depth_m - translation_m * translation_m)) / kRad;
}

}  // namespace placemap
