#include <doctest.h>

#include <random>

#include "paracon/linalg.hpp"

using namespace paracon;

TEST_CASE("kernel intersection of known matrices") {
  Mat a = Mat::Zero(2, 3);
  a(0, 0) = 1;
  Mat b = Mat::Zero(1, 3);
  b(0, 1) = 2;
  const std::vector<Mat> mats{a, b};
  const Subspace k = kernel_intersection(mats, 1e-9);
  REQUIRE(k.dim() == 1);
  CHECK(std::abs(k.basis(2, 0)) == doctest::Approx(1.0));
  CHECK(k.largest_dropped == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(k.smallest_kept == doctest::Approx(1.0));
}

TEST_CASE("kernel of zero matrices is everything") {
  const std::vector<Mat> mats{Mat::Zero(3, 3)};
  CHECK(kernel_intersection(mats, 1e-7).dim() == 3);
  CHECK(kernel_intersection(mats, 1e-7, 1.0).dim() == 3);
}

TEST_CASE("reference scale keeps tiny operators from losing rank") {
  Mat m = Mat::Zero(1, 2);
  m(0, 0) = 1e-3;
  const std::vector<Mat> mats{m};
  CHECK(kernel_intersection(mats, 1e-7).dim() == 1);
  CHECK(kernel_intersection(mats, 1e-7, 1e6).dim() == 2);
}

TEST_CASE("Lowdin orthonormalization") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n01;
  Mat y(5, 3);
  for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = n01(rng);
  const Mat q = orthonormalize(y);
  CHECK((q.transpose() * q - Mat::Identity(3, 3)).norm() < 1e-12);
  CHECK((orthonormalize(q) - q).norm() < 1e-12);
  CHECK(containment_angle(q, y.householderQr().householderQ() * Mat::Identity(5, 3)) < 1e-10);
}

TEST_CASE("principal and containment angles") {
  Mat a = Mat::Zero(3, 1);
  a(0, 0) = 1;
  Mat b = Mat::Zero(3, 1);
  b(0, 0) = std::cos(0.3);
  b(1, 0) = std::sin(0.3);
  const auto angles = principal_angles(a, b);
  REQUIRE(angles.size() == 1);
  CHECK(angles[0] == doctest::Approx(0.3));
  CHECK(containment_angle(a, Mat::Identity(3, 2)) == doctest::Approx(0.0));
  CHECK(containment_angle(Mat::Identity(3, 2), a) == doctest::Approx(M_PI / 2));
}
