#include <algorithm>
#include <limits>
#include <cmath>
#include <string>

#include "capmfg/error.hpp"
#include "capmfg/numerics.hpp"

namespace capmfg {

bool all_finite(const Eigen::Ref<const Matrix>& m) { return m.allFinite(); }

void require_square(const Eigen::Ref<const Matrix>& m, const char* what) {
  if (m.rows() != m.cols()) {
    throw Error(ErrorKind::DimensionMismatch,
                std::string(what) + " must be square, got " + std::to_string(m.rows()) + "x" +
                    std::to_string(m.cols()));
  }
}

void require_finite(const Eigen::Ref<const Matrix>& m, const char* what) {
  if (!m.allFinite()) {
    throw Error(ErrorKind::InvalidParams, std::string(what) + " has non-finite entries");
  }
}

}  // namespace capmfg

namespace capmfg::numerics {

LuFactorization::LuFactorization(const Matrix& m, const LinearSolveOptions& opts)
    : original_(m), lu_(m), refinement_steps_(opts.refinement_steps) {
  require_square(m, "matrix");
  require_finite(m, "matrix");
  const Index n = m.rows();
  perm_.resize(static_cast<std::size_t>(n));
  Vector scale(n);
  for (Index i = 0; i < n; ++i) {
    perm_[static_cast<std::size_t>(i)] = i;
    scale(i) = m.row(i).cwiseAbs().maxCoeff();
    if (scale(i) == 0.0) {
      throw Error(ErrorKind::SingularMatrix, "row " + std::to_string(i) + " is identically zero");
    }
  }

  min_relative_pivot_ = n > 0 ? std::numeric_limits<double>::infinity() : 0.0;
  for (Index k = 0; k < n; ++k) {
    Index best = k;
    double best_ratio = -1.0;
    for (Index i = k; i < n; ++i) {
      const double ratio = std::abs(lu_(i, k)) / scale(i);
      if (ratio > best_ratio) {
        best_ratio = ratio;
        best = i;
      }
    }
    if (best_ratio < opts.pivot_tol) {
      throw Error(ErrorKind::SingularMatrix,
                  "pivot " + std::to_string(k) + " below threshold (relative magnitude " +
                      std::to_string(best_ratio) + ")");
    }
    min_relative_pivot_ = std::min(min_relative_pivot_, best_ratio);
    if (best != k) {
      lu_.row(k).swap(lu_.row(best));
      std::swap(scale(k), scale(best));
      std::swap(perm_[static_cast<std::size_t>(k)], perm_[static_cast<std::size_t>(best)]);
    }
    const double pivot = lu_(k, k);
    for (Index i = k + 1; i < n; ++i) {
      const double factor = lu_(i, k) / pivot;
      lu_(i, k) = factor;
      if (factor != 0.0) {
        lu_.row(i).tail(n - k - 1).noalias() -= factor * lu_.row(k).tail(n - k - 1);
      }
    }
  }
}

Vector LuFactorization::substitute(const Vector& b) const {
  const Index n = lu_.rows();
  Vector y(n);
  for (Index i = 0; i < n; ++i) {
    double s = b(perm_[static_cast<std::size_t>(i)]);
    for (Index j = 0; j < i; ++j) s -= lu_(i, j) * y(j);
    y(i) = s;
  }
  for (Index i = n - 1; i >= 0; --i) {
    double s = y(i);
    for (Index j = i + 1; j < n; ++j) s -= lu_(i, j) * y(j);
    y(i) = s / lu_(i, i);
  }
  return y;
}

Vector LuFactorization::solve(const Vector& b) const {
  if (b.size() != lu_.rows()) {
    throw Error(ErrorKind::DimensionMismatch, "right-hand side has dimension " +
                                                  std::to_string(b.size()) + ", expected " +
                                                  std::to_string(lu_.rows()));
  }
  Vector y = substitute(b);
  for (int it = 0; it < refinement_steps_; ++it) {
    const Vector r = b - original_ * y;
    if (r.lpNorm<Eigen::Infinity>() == 0.0) break;
    y += substitute(r);
  }
  return y;
}

Matrix LuFactorization::solve(const Matrix& b) const {
  Matrix out(b.rows(), b.cols());
  for (Index j = 0; j < b.cols(); ++j) out.col(j) = solve(Vector(b.col(j)));
  return out;
}

Vector solve_linear(const Matrix& m, const Vector& b, const LinearSolveOptions& opts) {
  if (m.rows() != b.size()) {
    throw Error(ErrorKind::DimensionMismatch, "solve_linear: rows(M) != dim(b)");
  }
  return LuFactorization(m, opts).solve(b);
}

}  // namespace capmfg::numerics
