#pragma once

// Per-place factorization and projection primitives.
//
// A place with m reference descriptors of dimension n is the tall matrix
// D = [d1 .. dm] (n x m). Factoring D yields an orthonormal basis Q of its
// column space; a unit query d scores ||Q^T d|| and its least-squares
// residual is 1 - ||Q^T d||^2.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace placemap {

inline constexpr double kDefaultDepTol = 1e-8;

class PlaceMatrix {
 public:
  // `column_major` holds m columns of length n. Columns must be finite and
  // unit-norm within 1e-6, and n >= m >= 1.
  PlaceMatrix(std::string place_id, std::size_t n, std::size_t m, std::vector<double> column_major,
              std::vector<std::string> column_ids = {},
              std::optional<std::vector<double>> column_headings = std::nullopt);

  // Same, but rescales every column to unit norm first.
  static PlaceMatrix normalized(std::string place_id, std::size_t n, std::size_t m,
                                std::vector<double> column_major,
                                std::vector<std::string> column_ids = {},
                                std::optional<std::vector<double>> column_headings = std::nullopt);

  const std::string& place_id() const { return place_id_; }
  std::size_t n() const { return n_; }
  std::size_t m() const { return m_; }
  std::span<const double> column(std::size_t j) const { return {data_.data() + j * n_, n_}; }
  const std::vector<double>& data() const { return data_; }
  const std::vector<std::string>& column_ids() const { return column_ids_; }
  const std::optional<std::vector<double>>& column_headings() const { return column_headings_; }

 private:
  std::string place_id_;
  std::size_t n_;
  std::size_t m_;
  std::vector<double> data_;
  std::vector<std::string> column_ids_;
  std::optional<std::vector<double>> column_headings_;
};

enum class FactorMethod : std::uint8_t { QrFull = 0, SvdTruncated = 1 };

struct PlaceSubspace {
  std::string place_id;
  std::string tag;  // viewpoint-pair label for multi-subspace places, else empty
  FactorMethod method = FactorMethod::QrFull;
  std::size_t n = 0;
  std::size_t rank = 0;
  std::vector<double> q;  // n x rank, column-major, orthonormal columns

  // rank x m, row-major, in original column order: D = Q * R_factor (exactly
  // for QR up to dropped dependent columns' residuals, truncated for SVD).
  std::optional<std::vector<double>> r_factor;

  // QR: original indices of the columns that formed the basis, in pivot
  // order. The square block R_factor[:, retained] is upper triangular.
  std::vector<std::uint32_t> retained;

  std::vector<std::string> column_ids;
  std::optional<std::vector<double>> column_headings;
  std::optional<std::vector<double>> singular_values;  // all m, descending

  std::size_t column_count() const { return column_ids.size(); }
  std::span<const double> basis_column(std::size_t j) const { return {q.data() + j * n, n}; }
  double r(std::size_t i, std::size_t col) const { return (*r_factor)[i * column_count() + col]; }
};

struct QueryProjection {
  std::vector<double> coords;  // Q^T d
  double magnitude = 0.0;      // ||Q^T d||
  double residual = 0.0;       // 1 - magnitude^2
};

// Householder QR with column pivoting. Columns whose pivoted diagonal falls
// below dep_tol * (largest diagonal) are dropped from the basis.
PlaceSubspace factor_qr(const PlaceMatrix& pm, double dep_tol = kDefaultDepTol);

// Top-`rank` left singular vectors (one-sided Jacobi). The rank is clamped to
// the numerical rank of D under the same relative tolerance.
PlaceSubspace factor_svd(const PlaceMatrix& pm, std::size_t rank, double dep_tol = kDefaultDepTol);

// Non-unit queries are normalized first. A basis of rank n returns magnitude
// exactly one.
QueryProjection project(const PlaceSubspace& sub, std::span<const double> query);

}  // namespace placemap
