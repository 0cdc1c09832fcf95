#pragma once

// Reference least-squares path via the normal equations. It shares no code
// with the factorization module and exists to cross-check it.

#include <span>
#include <string>
#include <vector>

#include "placemap/subspace.hpp"

namespace placemap {

// ||d - D x||^2 with x solving (D^T D) x = D^T d. The query is normalized
// first. A Cholesky breakdown retries once with D^T D + 1e-12 I.
double residual_brute_force(const PlaceMatrix& pm, std::span<const double> query);

struct OracleMatch {
  std::size_t index = 0;  // position in the input list
  std::string place_id;
  double residual = 0.0;
};

// Smallest residual wins; equal residuals go to the smaller place_id.
OracleMatch oracle_match(std::span<const PlaceMatrix> places, std::span<const double> query);

// Residual of every place, in input order.
std::vector<double> oracle_residuals(std::span<const PlaceMatrix> places,
                                     std::span<const double> query);

}  // namespace placemap
