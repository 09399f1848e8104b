#include "paracon/pdcone.hpp"

#include <cmath>
#include <random>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "paracon/errors.hpp"

namespace paracon {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

Mat combine(const std::vector<Mat>& mats, const Vec& c) {
  Mat m = Mat::Zero(mats.front().rows(), mats.front().cols());
  for (std::size_t a = 0; a < mats.size(); ++a) m += c(static_cast<Eigen::Index>(a)) * mats[a];
  return m;
}

struct Ascent {
  double value = -std::numeric_limits<double>::infinity();
  Vec c;
};

// Projected supergradient ascent of lambda_min(sum c_a S_a) over ||c|| <= 1.
Ascent ascend(const std::vector<Mat>& mats, Vec c, int iterations) {
  const auto d = static_cast<Eigen::Index>(mats.size());
  Ascent best;
  best.c = c;
  Eigen::SelfAdjointEigenSolver<Mat> eig;
  for (int k = 0; k < iterations; ++k) {
    eig.compute(combine(mats, c));
    const double value = eig.eigenvalues()(0);
    if (value > best.value) {
      best.value = value;
      best.c = c;
    }
    const Vec u = eig.eigenvectors().col(0);
    Vec g(d);
    for (Eigen::Index a = 0; a < d; ++a) g(a) = u.dot(mats[static_cast<std::size_t>(a)] * u);
    const double gn = g.norm();
    if (gn == 0.0) break;
    const double step = 0.5 / std::sqrt(static_cast<double>(k) + 1.0);
    c += (step / gn) * g;
    const double cn = c.norm();
    if (cn > 1.0) c /= cn;
  }
  return best;
}

Ascent multi_start(const std::vector<Mat>& mats, const PdOptions& opts, std::uint64_t salt) {
  const auto d = static_cast<Eigen::Index>(mats.size());
  const int restarts = std::max(1, opts.restarts);
  auto run = [&](std::size_t r) {
    Vec c(d);
    if (r == 0) {
      for (Eigen::Index a = 0; a < d; ++a) c(a) = mats[static_cast<std::size_t>(a)].trace();
    } else {
      c.setZero();
    }
    if (c.norm() == 0.0) {
      std::mt19937_64 rng(splitmix64(opts.seed ^ salt ^ splitmix64(r)));
      std::normal_distribution<double> normal(0.0, 1.0);
      for (Eigen::Index a = 0; a < d; ++a) c(a) = normal(rng);
      if (c.norm() == 0.0) c(0) = 1.0;
    }
    c.normalize();
    return ascend(mats, c, opts.iterations);
  };
  const auto results = parallel_map<Ascent>(static_cast<std::size_t>(restarts), run, opts.exec);
  Ascent best = results.front();
  for (const auto& r : results) {
    if (r.value > best.value) best = r;
  }
  return best;
}

// Trace-orthogonal complement of the span inside Sym_n, as symmetric matrices
// orthonormal under the Frobenius inner product.
std::vector<Mat> complement(const std::vector<Mat>& mats, int n) {
  const SymIndex sym(n);
  const int total = sym.size();
  Mat rows = Mat::Zero(std::max<Eigen::Index>(static_cast<Eigen::Index>(mats.size()), total), total);
  for (std::size_t a = 0; a < mats.size(); ++a) {
    const Vec v = sym.from_matrix(mats[a]);
    for (int b = 0; b < total; ++b) rows(static_cast<Eigen::Index>(a), b) = std::sqrt(sym.weight(b)) * v(b);
  }
  Eigen::JacobiSVD<Mat> svd(rows, Eigen::ComputeFullV);
  const Vec& s = svd.singularValues();
  const double cut = (s.size() > 0 ? s(0) : 0.0) * 1e-10;
  Eigen::Index rank = 0;
  while (rank < s.size() && s(rank) > cut) ++rank;
  std::vector<Mat> out;
  for (Eigen::Index col = rank; col < total; ++col) {
    Vec v = svd.matrixV().col(col);
    for (int b = 0; b < total; ++b) v(b) /= std::sqrt(sym.weight(b));
    out.push_back(sym.to_matrix(v));
  }
  return out;
}

double trace_residual(const Mat& u, const std::vector<Mat>& mats) {
  double worst = 0.0;
  for (const auto& s : mats) {
    const double norm = s.norm();
    if (norm == 0.0) continue;
    worst = std::max(worst, std::abs((u.cwiseProduct(s)).sum()) / norm);
  }
  return worst;
}

}  // namespace

const char* to_string(PdStatus s) {
  switch (s) {
    case PdStatus::feasible: return "feasible";
    case PdStatus::infeasible_certified: return "infeasible_certified";
    case PdStatus::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

SymSpan SymSpan::of(std::vector<Mat> mats) {
  SymSpan s;
  if (mats.empty()) return s;
  s.n = static_cast<int>(mats.front().rows());
  for (auto& m : mats) m = 0.5 * (m + m.transpose()).eval();
  s.mats = std::move(mats);
  const auto d = static_cast<Eigen::Index>(s.mats.size());
  Mat gram(d, d);
  for (Eigen::Index a = 0; a < d; ++a) {
    for (Eigen::Index b = 0; b < d; ++b) {
      gram(a, b) = s.mats[static_cast<std::size_t>(a)].cwiseProduct(s.mats[static_cast<std::size_t>(b)]).sum();
    }
  }
  Eigen::SelfAdjointEigenSolver<Mat> eig(gram, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues()(0);
  const double hi = eig.eigenvalues()(d - 1);
  s.gram_condition = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  return s;
}

SymSpan SymSpan::from_fiber(const SymIndex& sym, const Mat& basis) {
  std::vector<Mat> mats;
  for (Eigen::Index a = 0; a < basis.cols(); ++a) mats.push_back(sym.to_matrix(basis.col(a)));
  SymSpan s = of(std::move(mats));
  s.n = sym.n();
  return s;
}

double min_eigenvalue(const Mat& m) {
  Eigen::SelfAdjointEigenSolver<Mat> eig(m, Eigen::EigenvaluesOnly);
  return eig.eigenvalues()(0);
}

bool is_positive_definite(const Mat& m, Mat* factor) {
  Eigen::LLT<Mat> llt(m);
  if (llt.info() != Eigen::Success) return false;
  const Mat l = llt.matrixL();
  if ((l.diagonal().array() <= 0.0).any()) return false;
  if (factor) *factor = l;
  return true;
}

PdResult pd_feasible(const SymSpan& span, const PdOptions& opts) {
  if (span.mats.empty()) {
    throw AnalysisError(ErrorCode::InvalidArgument, "pd_feasible: empty span");
  }
  PdResult out;
  const Ascent primal = multi_start(span.mats, opts, 0x5052494D414Cull);
  out.coefficients = primal.c;
  out.combination = combine(span.mats, primal.c);
  out.lambda_min = primal.value;
  if (primal.value > opts.tol && is_positive_definite(out.combination, &out.cholesky)) {
    out.status = PdStatus::feasible;
    return out;
  }

  const std::vector<Mat> dual = complement(span.mats, span.n);
  if (dual.empty()) return out;  // the span is all of Sym_n; ascent should not fail here
  const Ascent witness = multi_start(dual, opts, 0x4455414Cull);
  Mat u = combine(dual, witness.c);
  if (!(witness.value > opts.tol && is_positive_definite(u))) {
    // Only a PSD (singular) witness may exist; clip and re-check.
    Eigen::SelfAdjointEigenSolver<Mat> eig(u);
    const Vec clipped = eig.eigenvalues().cwiseMax(0.0);
    u = eig.eigenvectors() * clipped.asDiagonal() * eig.eigenvectors().transpose();
  }
  const double tr = u.trace();
  if (!(tr > 0.0)) return out;
  u /= tr;
  const double residual = trace_residual(u, span.mats);
  if (residual < 10.0 * opts.tol && min_eigenvalue(u) >= -opts.tol) {
    out.status = PdStatus::infeasible_certified;
    out.witness = u;
    out.witness_residual = residual;
  }
  return out;
}

PdBasis pd_basis(const SymSpan& span, int e_index, const PdOptions& opts) {
  const int d = static_cast<int>(span.mats.size());
  if (d == 0 || e_index < 0 || e_index >= d) {
    throw AnalysisError(ErrorCode::InvalidArgument, "pd_basis: bad span or index");
  }
  PdBasis out;
  Mat e = span.mats[static_cast<std::size_t>(e_index)];
  int replaced = e_index;
  if (!is_positive_definite(e)) {
    const PdResult r = pd_feasible(span, opts);
    if (r.status != PdStatus::feasible) {
      throw AnalysisError(ErrorCode::NoPDElement, "span contains no positive-definite element");
    }
    e = r.combination;
    r.coefficients.cwiseAbs().maxCoeff(&replaced);
  }
  auto build = [&](double eps) {
    std::vector<Mat> forms;
    for (int a = 0; a < d; ++a) {
      forms.push_back(a == replaced ? e : Mat(e + eps * span.mats[static_cast<std::size_t>(a)]));
    }
    return forms;
  };
  auto all_pd = [](const std::vector<Mat>& forms) {
    for (const auto& f : forms) {
      if (!is_positive_definite(f)) return false;
    }
    return true;
  };
  double eps = 1.0;
  int halvings = 0;
  while (!all_pd(build(eps))) {
    eps *= 0.5;
    if (++halvings > 80) {
      throw AnalysisError(ErrorCode::NoPDElement, "pd_basis: no epsilon found");
    }
  }
  out.first_passing_epsilon = eps;
  out.epsilon = 0.5 * eps;
  out.forms = build(out.epsilon);
  out.base_index = replaced;
  return out;
}

}  // namespace paracon
