#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace paracon {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

/// Linear subspace of R^N held as an orthonormal basis (N x d).
///
/// `smallest_kept` and `largest_dropped` are the singular values on either
/// side of the rank cut that produced the basis; `threshold` is the cut.
/// A subspace built by hand (not from a rank decision) leaves them at 0.
struct Subspace {
  Mat basis;
  double threshold = 0.0;
  double smallest_kept = 0.0;
  double largest_dropped = 0.0;

  Eigen::Index ambient() const { return basis.rows(); }
  Eigen::Index dim() const { return basis.cols(); }

  static Subspace full(Eigen::Index n);
  static Subspace zero(Eigen::Index n);
  // Orthonormalizes the columns (they must be independent).
  static Subspace span_of(const Mat& columns);
};

/// Common kernel of the given matrices (all with the same column count),
/// from the SVD of their vertical stack. Singular values at or below
/// rank_tol * max(sigma_max, min_reference) are treated as zero; when that
/// reference is below 1e-12 the absolute cut 1e-10 is used instead.
Subspace kernel_intersection(std::span<const Mat> mats, double rank_tol,
                             double min_reference = 0.0);

/// Symmetric (Lowdin) orthonormalization Y (Y^T Y)^{-1/2}. Smooth in Y and
/// the identity on already orthonormal input.
Mat orthonormalize(const Mat& y);

/// Principal angles (radians, ascending) between two subspaces of equal
/// ambient dimension.
std::vector<double> principal_angles(const Mat& a, const Mat& b);

/// Largest angle between a direction of span(a) and span(b): asin of
/// ||(I - B B^T) A||_2 for orthonormal A, B. Zero iff span(a) is contained
/// in span(b).
double containment_angle(const Mat& a, const Mat& b);

}  // namespace paracon
