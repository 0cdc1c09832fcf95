#include "placemap/oracle.hpp"

#include <cmath>
#include <optional>

#include "placemap/error.hpp"

namespace placemap {

namespace {

// In-place lower Cholesky of a symmetric m x m matrix; false on breakdown.
bool cholesky(std::vector<double>& g, std::size_t m) {
  double max_diag = 0.0;
  for (std::size_t i = 0; i < m; ++i) max_diag = std::max(max_diag, g[i * m + i]);
  for (std::size_t j = 0; j < m; ++j) {
    double s = g[j * m + j];
    for (std::size_t p = 0; p < j; ++p) s -= g[j * m + p] * g[j * m + p];
    if (!(s > 1e-14 * max_diag)) return false;
    const double l = std::sqrt(s);
    g[j * m + j] = l;
    for (std::size_t i = j + 1; i < m; ++i) {
      double t = g[i * m + j];
      for (std::size_t p = 0; p < j; ++p) t -= g[i * m + p] * g[j * m + p];
      g[i * m + j] = t / l;
    }
  }
  return true;
}

std::optional<std::vector<double>> solve_normal(const PlaceMatrix& pm,
                                                const std::vector<double>& rhs, double lambda) {
  const std::size_t n = pm.n();
  const std::size_t m = pm.m();
  std::vector<double> g(m * m);
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = 0; b <= a; ++b) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += pm.column(a)[i] * pm.column(b)[i];
      g[a * m + b] = s;
      g[b * m + a] = s;
    }
    g[a * m + a] += lambda;
  }
  if (!cholesky(g, m)) return std::nullopt;
  std::vector<double> x = rhs;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < i; ++p) x[i] -= g[i * m + p] * x[p];
    x[i] /= g[i * m + i];
  }
  for (std::size_t i = m; i-- > 0;) {
    for (std::size_t p = i + 1; p < m; ++p) x[i] -= g[p * m + i] * x[p];
    x[i] /= g[i * m + i];
  }
  return x;
}

}  // namespace

double residual_brute_force(const PlaceMatrix& pm, std::span<const double> query) {
  const std::size_t n = pm.n();
  const std::size_t m = pm.m();
  if (query.size() != n) raise(ErrorKind::Shape, "oracle query dimension mismatch");

  double qq = 0.0;
  for (double v : query) qq += v * v;
  if (qq == 0.0) raise(ErrorKind::Degenerate, "oracle query is the zero vector");
  const double inv = 1.0 / std::sqrt(qq);
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = query[i] * inv;

  std::vector<double> rhs(m);
  for (std::size_t a = 0; a < m; ++a) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += pm.column(a)[i] * d[i];
    rhs[a] = s;
  }

  auto x = solve_normal(pm, rhs, 0.0);
  if (!x) x = solve_normal(pm, rhs, 1e-12);
  if (!x) raise(ErrorKind::Rank, "normal equations singular for place '" + pm.place_id() + "'");

  double res = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double r = d[i];
    for (std::size_t a = 0; a < m; ++a) r -= pm.column(a)[i] * (*x)[a];
    res += r * r;
  }
  return res;
}

std::vector<double> oracle_residuals(std::span<const PlaceMatrix> places,
                                     std::span<const double> query) {
  std::vector<double> out;
  out.reserve(places.size());
  for (const PlaceMatrix& pm : places) out.push_back(residual_brute_force(pm, query));
  return out;
}

OracleMatch oracle_match(std::span<const PlaceMatrix> places, std::span<const double> query) {
  if (places.empty()) raise(ErrorKind::EmptyMap, "oracle over zero places");
  const std::vector<double> res = oracle_residuals(places, query);
  OracleMatch best{0, places[0].place_id(), res[0]};
  for (std::size_t i = 1; i < places.size(); ++i) {
    if (res[i] < best.residual ||
        (res[i] == best.residual && places[i].place_id() < best.place_id)) {
      best = {i, places[i].place_id(), res[i]};
    }
  }
  return best;
}

}  // namespace placemap
