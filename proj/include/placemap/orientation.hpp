#pragma once

// Relative heading of a query from per-heading evidence, interpolated by a
// weighted circular mean.

#include <span>
#include <string>
#include <vector>

#include "placemap/subspace.hpp"

namespace placemap {

enum class HeadingMethod { QrCoeff, PoolingSoftmax };

std::string_view to_string(HeadingMethod m) noexcept;

struct HeadingEstimate {
  double theta_deg = 0.0;        // [0, 360)
  std::vector<double> headings;  // unique headings, ascending
  std::vector<double> weights;   // per heading, non-negative, sum 1
  HeadingMethod method = HeadingMethod::QrCoeff;
  double resultant_length = 0.0;  // [0, 1]
  bool zero_confidence = false;   // resultant vanished; theta is arbitrary
  bool merged_headings = false;   // several columns shared a heading
};

struct CircularMean {
  double theta_deg = 0.0;
  double resultant_length = 0.0;
};

// Weights need not be normalized; they must be non-negative with a positive sum.
CircularMean circular_mean(std::span<const double> headings_deg, std::span<const double> weights);

// Exact at multiples of 90 degrees.
double sin_deg(double deg);
double cos_deg(double deg);

// Maps any angle into [0, 360).
double wrap_degrees(double deg);

// Smallest absolute difference between two headings, in [0, 180].
double angular_error(double a_deg, double b_deg);

// Least-squares coefficients x = R^-1 Q^T d over the basis columns, negative
// ones clamped to zero. Needs a QR subspace with R factor and headings.
HeadingEstimate estimate_heading_qr(const PlaceSubspace& sub, std::span<const double> query);

// Softmax over per-heading best cosine similarity with temperature tau.
HeadingEstimate estimate_heading_pooling(const PlaceMatrix& references, std::span<const double> query,
                                         double tau = 0.1);

// Largest heading bias a camera translation T can cause at viewing depth D.
double bias_bound(double translation_m, double depth_m);

}  // namespace placemap
