#pragma once

// Global metricity: the rank-one de Rham test on the 1-form Phi, and the
// general regular case through holonomy-fixed vectors of the terminal flag
// subspace plus positive-definite feasibility.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "paracon/bundle.hpp"
#include "paracon/flag.hpp"
#include "paracon/pdcone.hpp"
#include "paracon/transport.hpp"

namespace paracon {

/// Phi for a rank-one terminal subspace, from nabla s = s (x) Phi with s the
/// unit-Frobenius, positive-trace generator of the subspace, optionally
/// rescaled by a positive function.
class PhiSampler {
 public:
  PhiSampler(const Connection& conn, FlagOptions flag, double derivative_h = 1e-3,
             std::optional<expr::Expr> scale = std::nullopt);

  /// Tracked generator at q (fiber components). Throws RankNotOne or
  /// GeneratorNotPD.
  Vec generator(std::span<const double> q) const;

  /// Phi(q) as coordinate components.
  Vec operator()(std::span<const double> q) const;

  const Connection& connection() const { return *conn_; }

 private:
  const Connection* conn_;
  FlagOptions flag_;
  double h_;
  std::optional<expr::Program> scale_;
};

/// Checks the preconditions at p (rank one, PD generator) and returns the
/// sampler.
PhiSampler phi_form(const Connection& conn, std::span<const double> p, const Subspace& wtilde,
                    const FlagOptions& flag = {}, std::optional<expr::Expr> scale = std::nullopt);

struct LoopPeriod {
  std::string loop;
  double period = 0.0;
  double length = 0.0;
  std::vector<double> t;
  std::vector<Vec> phi;  // Phi at each quadrature node
};

struct PhiPeriods {
  std::vector<LoopPeriod> loops;
};

/// Periodic trapezoid rule for the integral of Phi over each closed loop.
PhiPeriods phi_periods(const PhiSampler& phi, std::span<const Curve> loops,
                       int quadrature_steps = 4096, Exec exec = Exec::parallel);

/// Vectors (in the subspace's own coordinates) fixed by every holonomy.
/// No holonomies: the whole d-dimensional space.
Subspace fixed_subspace(std::span<const HolonomyResult> holonomies, Eigen::Index d,
                        double rank_tol = 1e-7);

/// tr(s^{-1} h s^{-1} h'), the transport-invariant inner product induced by a
/// parallel metric s.
double invariant_inner_product(const Mat& s, const Mat& h, const Mat& h2);

enum class GlobalStatus { metric, not_metric, inconclusive, not_regular };

const char* to_string(GlobalStatus s);

struct GlobalOptions {
  FlagOptions flag;
  PdOptions pd;
  int rk4_steps = 4096;
  int quadrature_steps = 4096;
  double holonomy_tol = 1e-5;
  double period_tol = 1e-4;
  double phi_h = 1e-3;
  Exec exec = Exec::parallel;
};

struct GlobalVerdict {
  GlobalStatus status = GlobalStatus::inconclusive;
  RegularityReport regularity;
  std::optional<FlagTrace> base_trace;
  int wtilde_rank = 0;
  std::vector<HolonomyResult> holonomies;
  Subspace fixed;     // coordinates in the terminal basis
  Mat fixed_ambient;  // fiber components
  int rank_wm = 0;
  std::optional<int> rank_tau_reported;  // only when metric
  int tau_least_level = 0;               // dim W~ - dim fixed
  std::optional<PdResult> certificate;
  std::optional<PdBasis> metrics;
  std::optional<PhiPeriods> periods;
  std::optional<bool> periods_vanish;
  std::optional<bool> criteria_agree;
  std::vector<std::string> notes;
  std::vector<std::string> caveats;
};

/// Regularity scan, flag at p, holonomy per loop, fixed subspace, PD test.
/// For rank-one terminal subspaces the Phi-period test runs as well and the
/// two criteria are cross-checked.
GlobalVerdict global_metricity(const Connection& conn, std::span<const double> p,
                               std::span<const Curve> loops, const Grid& grid,
                               const GlobalOptions& opts = {});

}  // namespace paracon
