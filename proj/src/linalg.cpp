#include "paracon/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/SVD>

namespace paracon {

Subspace Subspace::full(Eigen::Index n) { return Subspace{Mat::Identity(n, n)}; }

Subspace Subspace::zero(Eigen::Index n) { return Subspace{Mat(n, 0)}; }

Subspace Subspace::span_of(const Mat& columns) {
  if (columns.cols() == 0) return zero(columns.rows());
  return Subspace{orthonormalize(columns)};
}

Subspace kernel_intersection(std::span<const Mat> mats, double rank_tol, double min_reference) {
  if (mats.empty()) throw std::invalid_argument("kernel_intersection: no matrices");
  const Eigen::Index cols = mats.front().cols();
  Eigen::Index rows = 0;
  for (const auto& m : mats) {
    if (m.cols() != cols) throw std::invalid_argument("kernel_intersection: column mismatch");
    rows += m.rows();
  }
  if (cols == 0) return Subspace::zero(0);

  // Pad to at least `cols` rows so the SVD always returns a full V.
  Mat stacked = Mat::Zero(std::max(rows, cols), cols);
  Eigen::Index r = 0;
  for (const auto& m : mats) {
    stacked.middleRows(r, m.rows()) = m;
    r += m.rows();
  }

  Eigen::JacobiSVD<Mat> svd(stacked, Eigen::ComputeFullV);
  const Vec& sigma = svd.singularValues();
  const double sigma_max = sigma.size() > 0 ? sigma(0) : 0.0;
  const double reference = std::max(sigma_max, min_reference);
  const double threshold = reference < 1e-12 ? 1e-10 : rank_tol * reference;

  Eigen::Index rank = 0;
  while (rank < sigma.size() && sigma(rank) > threshold) ++rank;

  Subspace out;
  out.basis = svd.matrixV().rightCols(cols - rank);
  out.threshold = threshold;
  out.smallest_kept = rank > 0 ? sigma(rank - 1) : 0.0;
  out.largest_dropped = rank < sigma.size() ? sigma(rank) : 0.0;
  return out;
}

Mat orthonormalize(const Mat& y) {
  if (y.cols() == 0) return y;
  const Mat gram = y.transpose() * y;
  Eigen::SelfAdjointEigenSolver<Mat> eig(gram);
  const Vec inv_sqrt = eig.eigenvalues().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
  return y * (eig.eigenvectors() * inv_sqrt.asDiagonal() * eig.eigenvectors().transpose());
}

std::vector<double> principal_angles(const Mat& a, const Mat& b) {
  if (a.cols() == 0 || b.cols() == 0) return {};
  Eigen::JacobiSVD<Mat> svd(a.transpose() * b);
  std::vector<double> out;
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) {
    out.push_back(std::acos(std::clamp(svd.singularValues()(i), -1.0, 1.0)));
  }
  std::sort(out.begin(), out.end());
  return out;
}

double containment_angle(const Mat& a, const Mat& b) {
  if (a.cols() == 0) return 0.0;
  Mat residual = a;
  if (b.cols() > 0) residual -= b * (b.transpose() * a);
  Eigen::JacobiSVD<Mat> svd(residual);
  return std::asin(std::clamp(svd.singularValues()(0), 0.0, 1.0));
}

}  // namespace paracon
