#include "placemap/subspace.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "placemap/descriptor_store.hpp"
#include "placemap/error.hpp"
#include "placemap/simd/kernels.hpp"

namespace placemap {

namespace {

void validate_columns(const std::string& id, std::size_t n, std::size_t m,
                      const std::vector<double>& data, bool require_unit) {
  if (m == 0) raise(ErrorKind::Degenerate, "place '" + id + "' has no columns");
  if (n < m) {
    raise(ErrorKind::Shape, "place '" + id + "' is wide (" + std::to_string(n) + " x " +
                                std::to_string(m) + "); need n >= m");
  }
  if (data.size() != n * m) raise(ErrorKind::Shape, "place '" + id + "' data size mismatch");
  for (std::size_t j = 0; j < m; ++j) {
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double x = data[j * n + i];
      if (!std::isfinite(x)) raise(ErrorKind::Data, "place '" + id + "' has a non-finite entry");
      ss += x * x;
    }
    if (require_unit && std::abs(std::sqrt(ss) - 1.0) > kUnitTolerance) {
      raise(ErrorKind::Data, "place '" + id + "' column " + std::to_string(j) + " is not unit-norm");
    }
  }
}

}  // namespace

PlaceMatrix::PlaceMatrix(std::string place_id, std::size_t n, std::size_t m,
                         std::vector<double> column_major, std::vector<std::string> column_ids,
                         std::optional<std::vector<double>> column_headings)
    : place_id_(std::move(place_id)),
      n_(n),
      m_(m),
      data_(std::move(column_major)),
      column_ids_(std::move(column_ids)),
      column_headings_(std::move(column_headings)) {
  validate_columns(place_id_, n_, m_, data_, true);
  if (column_ids_.empty()) {
    for (std::size_t j = 0; j < m_; ++j) column_ids_.push_back(place_id_ + "#" + std::to_string(j));
  }
  if (column_ids_.size() != m_) raise(ErrorKind::Shape, "column id count mismatch");
  if (column_headings_ && column_headings_->size() != m_) {
    raise(ErrorKind::Shape, "column heading count mismatch");
  }
}

PlaceMatrix PlaceMatrix::normalized(std::string place_id, std::size_t n, std::size_t m,
                                    std::vector<double> column_major,
                                    std::vector<std::string> column_ids,
                                    std::optional<std::vector<double>> column_headings) {
  validate_columns(place_id, n, m, column_major, false);
  for (std::size_t j = 0; j < m; ++j) {
    std::span<const double> col(column_major.data() + j * n, n);
    const std::vector<double> unit = normalize(col);
    std::copy(unit.begin(), unit.end(), column_major.begin() + static_cast<std::ptrdiff_t>(j * n));
  }
  return PlaceMatrix(std::move(place_id), n, m, std::move(column_major), std::move(column_ids),
                     std::move(column_headings));
}

// ---------------------------------------------------------------------------

PlaceSubspace factor_qr(const PlaceMatrix& pm, double dep_tol) {
  const auto& k = simd::kernels();
  const std::size_t n = pm.n();
  const std::size_t m = pm.m();

  std::vector<double> a = pm.data();  // working copy, column-major
  std::vector<std::uint32_t> perm(m);
  std::iota(perm.begin(), perm.end(), 0u);

  std::vector<std::vector<double>> reflectors;
  std::vector<double> taus;
  std::vector<double> diag;
  double max_diag = 0.0;

  auto col = [&](std::size_t j) { return a.data() + j * n; };

  const std::size_t steps = std::min(n, m);
  for (std::size_t s = 0; s < steps; ++s) {
    // Pivot on the largest remaining partial column norm (first wins ties).
    std::size_t best = s;
    double best_norm2 = -1.0;
    for (std::size_t j = s; j < m; ++j) {
      const double norm2 = k.dot_f64(col(j) + s, col(j) + s, n - s);
      if (norm2 > best_norm2) {
        best_norm2 = norm2;
        best = j;
      }
    }
    if (best != s) {
      std::swap_ranges(col(s), col(s) + n, col(best));
      std::swap(perm[s], perm[best]);
    }
    const double norm = std::sqrt(best_norm2);
    if (s == 0) max_diag = norm;
    if (max_diag == 0.0 || norm <= dep_tol * max_diag) break;

    double* x = col(s) + s;
    const std::size_t len = n - s;
    std::vector<double> v(x, x + len);
    const double alpha = x[0] >= 0.0 ? -norm : norm;
    v[0] -= alpha;
    const double tau = 2.0 / k.dot_f64(v.data(), v.data(), len);
    x[0] = alpha;
    std::fill(x + 1, x + len, 0.0);
    for (std::size_t j = s + 1; j < m; ++j) {
      double* y = col(j) + s;
      k.axpy_f64(-tau * k.dot_f64(v.data(), y, len), v.data(), y, len);
    }
    reflectors.push_back(std::move(v));
    taus.push_back(tau);
    diag.push_back(alpha);
  }

  const std::size_t rank = reflectors.size();
  if (rank == 0) {
    raise(ErrorKind::Degenerate, "place '" + pm.place_id() + "' has numerical rank 0");
  }

  PlaceSubspace out;
  out.place_id = pm.place_id();
  out.method = FactorMethod::QrFull;
  out.n = n;
  out.rank = rank;
  out.column_ids = pm.column_ids();
  out.column_headings = pm.column_headings();
  out.retained.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(rank));

  // Q = H_0 ... H_{rank-1} [I; 0], with signs chosen so diag(R) > 0.
  out.q.assign(n * rank, 0.0);
  for (std::size_t j = 0; j < rank; ++j) {
    double* e = out.q.data() + j * n;
    e[j] = 1.0;
    for (std::size_t s = j + 1; s-- > 0;) {
      const std::size_t len = n - s;
      const std::vector<double>& v = reflectors[s];
      k.axpy_f64(-taus[s] * k.dot_f64(v.data(), e + s, len), v.data(), e + s, len);
    }
    if (diag[j] < 0.0) {
      for (std::size_t i = 0; i < n; ++i) e[i] = -e[i];
    }
  }

  std::vector<double> r(rank * m, 0.0);
  for (std::size_t i = 0; i < rank; ++i) {
    const double sign = diag[i] < 0.0 ? -1.0 : 1.0;
    for (std::size_t j = i; j < m; ++j) r[i * m + perm[j]] = sign * col(j)[i];
  }
  out.r_factor = std::move(r);
  return out;
}

// ---------------------------------------------------------------------------

PlaceSubspace factor_svd(const PlaceMatrix& pm, std::size_t rank, double dep_tol) {
  const auto& k = simd::kernels();
  const std::size_t n = pm.n();
  const std::size_t m = pm.m();
  if (rank < 1 || rank > m) {
    raise(ErrorKind::Parameter, "svd rank " + std::to_string(rank) + " outside [1, " +
                                    std::to_string(m) + "] for place '" + pm.place_id() + "'");
  }

  std::vector<double> a = pm.data();
  auto col = [&](std::size_t j) { return a.data() + j * n; };

  // One-sided Jacobi: rotate column pairs until mutually orthogonal.
  constexpr int kMaxSweeps = 80;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < m; ++p) {
      for (std::size_t q = p + 1; q < m; ++q) {
        const double alpha = k.dot_f64(col(p), col(p), n);
        const double beta = k.dot_f64(col(q), col(q), n);
        const double gamma = k.dot_f64(col(p), col(q), n);
        if (gamma == 0.0 || std::abs(gamma) <= 1e-15 * std::sqrt(alpha * beta)) continue;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        double* xp = col(p);
        double* xq = col(q);
        for (std::size_t i = 0; i < n; ++i) {
          const double u = xp[i];
          const double w = xq[i];
          xp[i] = c * u - s * w;
          xq[i] = s * u + c * w;
        }
        rotated = true;
      }
    }
    if (!rotated) break;
  }

  std::vector<double> sigma(m);
  for (std::size_t j = 0; j < m; ++j) sigma[j] = std::sqrt(k.dot_f64(col(j), col(j), n));
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return sigma[x] > sigma[y]; });

  const double top = sigma[order[0]];
  if (top == 0.0) raise(ErrorKind::Degenerate, "place '" + pm.place_id() + "' has numerical rank 0");
  std::size_t numerical_rank = 0;
  while (numerical_rank < m && sigma[order[numerical_rank]] > dep_tol * top) ++numerical_rank;
  const std::size_t keep = std::min(rank, numerical_rank);

  PlaceSubspace out;
  out.place_id = pm.place_id();
  out.method = FactorMethod::SvdTruncated;
  out.n = n;
  out.rank = keep;
  out.column_ids = pm.column_ids();
  out.column_headings = pm.column_headings();
  out.q.assign(n * keep, 0.0);

  std::vector<double> sv(m);
  for (std::size_t j = 0; j < m; ++j) sv[j] = sigma[order[j]];
  out.singular_values = std::move(sv);

  for (std::size_t j = 0; j < keep; ++j) {
    double* u = out.q.data() + j * n;
    const double* src = col(order[j]);
    for (std::size_t i = 0; i < n; ++i) u[i] = src[i] / sigma[order[j]];
    // Two Gram-Schmidt passes against earlier vectors restore orthogonality
    // lost to small singular values.
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t i = 0; i < j; ++i) {
        const double* prev = out.q.data() + i * n;
        k.axpy_f64(-k.dot_f64(prev, u, n), prev, u, n);
      }
    }
    const double norm = std::sqrt(k.dot_f64(u, u, n));
    std::size_t arg = 0;
    for (std::size_t i = 1; i < n; ++i) {
      if (std::abs(u[i]) > std::abs(u[arg])) arg = i;
    }
    const double scale = (u[arg] < 0.0 ? -1.0 : 1.0) / norm;
    for (std::size_t i = 0; i < n; ++i) u[i] *= scale;
  }

  std::vector<double> r(keep * m);
  for (std::size_t i = 0; i < keep; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      r[i * m + j] = k.dot_f64(out.q.data() + i * n, pm.column(j).data(), n);
    }
  }
  out.r_factor = std::move(r);
  return out;
}

// ---------------------------------------------------------------------------

QueryProjection project(const PlaceSubspace& sub, std::span<const double> query) {
  if (query.size() != sub.n) {
    raise(ErrorKind::Shape, "query dimension " + std::to_string(query.size()) +
                                " differs from subspace dimension " + std::to_string(sub.n));
  }
  const std::vector<double> d = normalize(query);
  const auto& k = simd::kernels();
  QueryProjection p;
  p.coords.resize(sub.rank);
  double ss = 0.0;
  for (std::size_t j = 0; j < sub.rank; ++j) {
    p.coords[j] = k.dot_f64(sub.q.data() + j * sub.n, d.data(), sub.n);
    ss += p.coords[j] * p.coords[j];
  }
  // A basis spanning the whole space projects exactly; rounding must not
  // order places that are tied at magnitude one.
  if (sub.rank == sub.n) ss = 1.0;
  p.magnitude = std::sqrt(ss);
  p.residual = 1.0 - ss;
  return p;
}

}  // namespace placemap
