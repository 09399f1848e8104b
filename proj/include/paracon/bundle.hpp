#pragma once

// Chart domain, connection specification, and the induced connection and
// curvature matrices on the fiber.
//
// Convention: a section h with fiber components h_A has covariant derivative
//   (nabla_k h)_A = d_k h_A + (Omega_k h)_A,
// so parallel transport solves v' = -(sum_k Omega_k xdot^k) v. For a chart
// connection acting on symmetric 2-tensors,
//   (Omega_k h)_{ij} = -Gamma^l_{ki} h_{lj} - Gamma^l_{kj} h_{il},
// with nabla_{d_i} d_j = Gamma^k_{ij} d_k. Curvature is
//   R_ij = d_i Omega_j - d_j Omega_i + Omega_i Omega_j - Omega_j Omega_i.

#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "paracon/expr.hpp"
#include "paracon/linalg.hpp"

namespace paracon {

using Params = std::map<std::string, double, std::less<>>;

using Point = std::vector<double>;

struct Coordinate {
  std::string name;
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  std::optional<double> period;
};

class Domain {
 public:
  Domain() = default;
  Domain(std::vector<Coordinate> coords, std::vector<expr::Expr> excluded,
         double exclusion_radius, const Params& params);

  int dim() const { return static_cast<int>(coords_.size()); }
  const std::vector<Coordinate>& coords() const { return coords_; }
  const std::vector<std::string>& slot_names() const { return slots_; }
  double exclusion_radius() const { return exclusion_radius_; }

  int index_of(std::string_view name) const;  // -1 if absent

  /// Reduces periodic coordinates with a finite range into [lo, lo + period).
  void wrap(std::span<double> p) const;

  /// Inside the open box and outside the excluded set (after wrapping).
  bool contains(std::span<const double> p) const;

  /// Throws OutsideDomain when !contains(p).
  void require(std::span<const double> p) const;

  /// Slot array for compiled expressions: coordinates, then parameters.
  void fill_slots(std::span<const double> p, std::vector<double>& slots) const;

  const Params& params() const { return params_; }

 private:
  std::vector<Coordinate> coords_;
  std::vector<expr::Program> excluded_;
  double exclusion_radius_ = 1e-6;
  Params params_;
  std::vector<std::string> slots_;
  std::vector<double> param_values_;
};

/// Bijection between unordered coordinate pairs i <= j and fiber indices of
/// Sym^2 T*M. Basis element A = (i, i) is dx^i (x) dx^i; A = (i, j), i < j,
/// is dx^i (x) dx^j + dx^j (x) dx^i, so h_A is the matrix entry h_ij.
class SymIndex {
 public:
  explicit SymIndex(int n = 0);

  int n() const { return n_; }
  int size() const { return static_cast<int>(pairs_.size()); }
  int index(int i, int j) const { return table_[static_cast<std::size_t>(i * n_ + j)]; }
  std::pair<int, int> pair(int a) const { return pairs_[static_cast<std::size_t>(a)]; }
  /// 1 for diagonal pairs, 2 for off-diagonal ones: sum_ij h_ij g_ij = sum_A w_A h_A g_A.
  double weight(int a) const;

  Mat to_matrix(const Vec& components) const;
  Vec from_matrix(const Mat& m) const;
  /// Frobenius inner product of the symmetric matrices with these components.
  double frobenius(const Vec& a, const Vec& b) const;

 private:
  int n_;
  std::vector<std::pair<int, int>> pairs_;
  std::vector<int> table_;
};

struct ConnectionSpec {
  enum class Kind { christoffel, matrix };

  Kind kind = Kind::christoffel;
  int n = 0;     // chart dimension
  int rank = 0;  // fiber rank N (matrix kind)

  /// christoffel: gamma[(k * n + i) * n + j] = Gamma^k_{ij}.
  /// matrix: forms[(k * N + a) * N + b] = (Omega_k)_{ab}.
  /// Null entries are zero.
  std::vector<expr::Expr> exprs;

  static ConnectionSpec christoffel(int n);
  static ConnectionSpec matrix(int n, int rank);

  expr::Expr& gamma(int k, int i, int j);
  expr::Expr& form(int k, int a, int b);
  int fiber_rank() const;
};

/// A ConnectionSpec compiled against a Domain. Immutable and safe to share
/// between threads.
class Connection {
 public:
  Connection(Domain domain, ConnectionSpec spec);

  const Domain& domain() const { return domain_; }
  const ConnectionSpec& spec() const { return spec_; }
  ConnectionSpec::Kind kind() const { return spec_.kind; }
  int n() const { return spec_.n; }
  int N() const { return fiber_rank_; }
  const SymIndex& sym() const { return sym_; }

  /// Ordered pairs (i, j), i < j, in the order curvature_operators returns them.
  const std::vector<std::pair<int, int>>& curvature_pairs() const { return pairs_; }

  std::vector<Mat> connection_matrices(std::span<const double> p) const;
  std::vector<Mat> curvature_operators(std::span<const double> p) const;

  /// Combined sum_k Omega_k(p) v^k for a tangent vector v.
  Mat connection_along(std::span<const double> p, std::span<const double> v) const;

  /// Moves p by +1e-12 along the coordinates of any piecewise condition that
  /// sits exactly on its breakpoint. Returns true if p changed.
  bool nudge_off_breakpoints(std::span<double> p) const;

 private:
  void evaluate(std::span<const double> p, std::vector<double>& values, bool derivatives,
                std::vector<double>& dvalues) const;
  std::vector<Mat> assemble(const std::vector<double>& values) const;

  Domain domain_;
  ConnectionSpec spec_;
  int fiber_rank_ = 0;
  SymIndex sym_;
  std::vector<std::pair<int, int>> pairs_;
  std::vector<expr::Program> programs_;      // one per spec entry
  std::vector<expr::Program> derivatives_;   // [entry * n + m] = d_m entry
  std::vector<expr::Program> conditions_;    // lhs - rhs of each piecewise node
  std::vector<std::vector<int>> condition_coords_;
};

}  // namespace paracon
