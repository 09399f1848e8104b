#pragma once

// Randomized property suites shared by the unit tests and the acceptance
// binary. Each returns the number of cases run, failures, and the worst
// observed error against its bound.

#include <cstdint>
#include <string>

namespace paracon::props {

struct SuiteResult {
  int cases = 0;
  int failures = 0;
  double worst = 0.0;  // largest error seen (suite-specific units)
  std::string first_failure;

  bool ok() const { return cases > 0 && failures == 0; }
};

/// Exact derivatives against a 5-point central difference, relative error.
SuiteResult ad_vs_fd(int cases, std::uint64_t seed);

/// Levi-Civita connections of random metrics, sometimes perturbed: the
/// derived flag is decreasing and every level contains the metric whenever
/// the connection is metric.
SuiteResult flag_monotonicity(int cases, std::uint64_t seed);

/// Transport is linear, and a curve followed by its reverse returns every
/// vector.
SuiteResult transport_linearity_and_inverse(int cases, std::uint64_t seed);

/// Transporting the terminal subspace between regular corpus points lands in
/// the terminal subspace there.
SuiteResult wtilde_invariance(int cases, std::uint64_t seed);

/// pd_feasible on random spans of n x n symmetric matrices (n, d <= 2)
/// against a dense scan of the unit circle of coefficients.
SuiteResult pd_vs_circle_grid(int cases, std::uint64_t seed);

/// Rescaling the tracked generator by a positive function leaves every loop
/// period unchanged.
SuiteResult phi_gauge_invariance(int cases, std::uint64_t seed);

}  // namespace paracon::props
