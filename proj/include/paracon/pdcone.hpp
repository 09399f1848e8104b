#pragma once

// Does a linear span of symmetric matrices meet the open positive-definite
// cone? Answers come with certificates that can be re-checked without this
// module: a Cholesky factor for "feasible", a trace-orthogonal PSD witness
// for "infeasible_certified".

#include <cstdint>
#include <vector>

#include "paracon/bundle.hpp"
#include "paracon/linalg.hpp"
#include "paracon/parallel.hpp"

namespace paracon {

struct SymSpan {
  int n = 0;
  std::vector<Mat> mats;        // symmetric n x n
  double gram_condition = 1.0;  // condition number of the Frobenius Gram matrix

  /// Symmetric matrices for the columns of a fiber basis of Sym^2.
  static SymSpan from_fiber(const SymIndex& sym, const Mat& basis);
  static SymSpan of(std::vector<Mat> mats);
};

enum class PdStatus { feasible, infeasible_certified, inconclusive };

const char* to_string(PdStatus s);

struct PdOptions {
  double tol = 1e-8;
  int restarts = 32;
  int iterations = 500;
  std::uint64_t seed = 0;
  Exec exec = Exec::parallel;
};

struct PdResult {
  PdStatus status = PdStatus::inconclusive;
  Vec coefficients;      // best c found, ||c|| <= 1
  Mat combination;       // sum_a c_a S_a
  double lambda_min = 0.0;
  Mat cholesky;          // lower factor of `combination` when feasible
  Mat witness;           // PSD, trace 1, when infeasible_certified
  double witness_residual = 0.0;  // max_a |tr(U S_a)| / ||S_a||_F
};

PdResult pd_feasible(const SymSpan& span, const PdOptions& opts = {});

/// lambda_min of a symmetric matrix.
double min_eigenvalue(const Mat& m);

/// Strict Cholesky test; fills `factor` on success.
bool is_positive_definite(const Mat& m, Mat* factor = nullptr);

struct PdBasis {
  std::vector<Mat> forms;  // PD, same span as the input
  int base_index = 0;      // position holding the PD element e itself
  double epsilon = 0.0;
  double first_passing_epsilon = 0.0;
};

/// PD basis of the span: e and e + eps * S_i for the remaining basis
/// elements, eps halved from 1 until every Cholesky test passes and then once
/// more. Uses S[e_index] as e when it is PD, otherwise a PD combination found
/// by pd_feasible. Throws NoPDElement when the span has none.
PdBasis pd_basis(const SymSpan& span, int e_index, const PdOptions& opts = {});

}  // namespace paracon
