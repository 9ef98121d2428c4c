#ifndef LSDC_SOLVE_HPP
#define LSDC_SOLVE_HPP

#include <Eigen/LU>
#include <Eigen/SVD>
#include <string>

#include "lsdc/errors.hpp"
#include "lsdc/grid.hpp"

namespace lsdc {

/// Singular values at or below this fraction of the largest one are
/// treated as zero when solving and when counting the numerical rank.
inline constexpr double kDefaultRankTolerance = 1e-10;

/// Parameters of the iteratively reweighted least-squares loop.
template <class Scalar>
struct IrlsConfig {
  /// Floor applied to absolute residuals before inversion, in the units of
  /// the right-hand side (meters for depth). Keeps weights bounded.
  Scalar residual_clamp = Scalar(1e-4);
  int max_iterations = 20;
  /// Converged when max|ΔW| between successive solutions drops below this.
  Scalar stop_tolerance = Scalar(1e-6);
};

template <class Scalar>
struct SolveReport {
  VectorX<Scalar> weights;
  /// Number of singular values above the relative rank tolerance.
  Index effective_rank = 0;
  /// Weighted re-solves performed; 1 for a plain least-squares solve.
  int iterations = 1;
  /// Euclidean norm of the unweighted residual at the returned weights.
  Scalar residual_norm = Scalar(0);
  /// True when rows ≤ cols: the fit is not over-determined and the
  /// minimum-norm completion was returned.
  bool underdetermined = false;
};

namespace detail {

template <class Scalar>
void check_lse_inputs(const MatrixX<Scalar>& design, const VectorX<Scalar>& rhs) {
  if (design.rows() < 1 || design.cols() < 1)
    throw InvalidValueError("least squares: system is empty");
  if (design.rows() != rhs.size())
    throw DimensionError("least squares: design has " + std::to_string(design.rows()) +
                         " rows but rhs has " + std::to_string(rhs.size()) + " entries");
  if (!design.allFinite() || !rhs.allFinite())
    throw InvalidValueError("least squares: inputs contain non-finite entries");
}

}  // namespace detail

/// Minimum-norm least squares via SVD.
///
/// Returns the W minimizing ‖rhs − design·W‖₂; when the minimizer is not
/// unique (numerical rank below the column count), returns the one of
/// smallest Euclidean norm, obtained by inverting only the singular values
/// above rank_tolerance · σ_max.
template <class Scalar>
SolveReport<Scalar> solve_lse_svd(const MatrixX<Scalar>& design, const VectorX<Scalar>& rhs,
                                  Scalar rank_tolerance = Scalar(kDefaultRankTolerance)) {
  detail::check_lse_inputs(design, rhs);
  if (rank_tolerance < Scalar(0))
    throw InvalidValueError("solve_lse_svd: rank tolerance must be nonnegative");

  Eigen::BDCSVD<MatrixX<Scalar>> svd(design, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const VectorX<Scalar>& sigma = svd.singularValues();
  const Scalar cutoff = rank_tolerance * (sigma.size() > 0 ? sigma(0) : Scalar(0));
  Index rank = 0;
  while (rank < sigma.size() && sigma(rank) > cutoff) ++rank;

  SolveReport<Scalar> report;
  const VectorX<Scalar> coeffs = svd.matrixU().leftCols(rank).transpose() * rhs;
  report.weights = svd.matrixV().leftCols(rank) *
                   (coeffs.array() / sigma.head(rank).array()).matrix();
  report.effective_rank = rank;
  report.residual_norm = (rhs - design * report.weights).norm();
  report.underdetermined = design.rows() <= design.cols();
  return report;
}

/// Least squares through the normal equations (Fᵀ F)⁻¹ Fᵀ rhs.
///
/// Requires the Gram matrix to be numerically invertible and throws
/// SingularMatrixError otherwise. Serves as an algebraically independent
/// cross-check of solve_lse_svd on well-conditioned full-rank systems.
template <class Scalar>
SolveReport<Scalar> solve_lse_normal(const MatrixX<Scalar>& design, const VectorX<Scalar>& rhs) {
  detail::check_lse_inputs(design, rhs);

  const MatrixX<Scalar> gram = design.transpose() * design;
  Eigen::FullPivLU<MatrixX<Scalar>> lu(gram);
  if (!lu.isInvertible())
    throw SingularMatrixError("solve_lse_normal: Gram matrix is numerically singular");

  SolveReport<Scalar> report;
  report.weights = lu.solve(design.transpose() * rhs);
  report.effective_rank = design.cols();
  report.residual_norm = (rhs - design * report.weights).norm();
  report.underdetermined = design.rows() <= design.cols();
  return report;
}

/// Iteratively reweighted least squares.
///
/// Starts from the plain least-squares solution, then repeatedly solves
/// with rows weighted by the inverse of the clamped absolute residuals
///   e  = |rhs − design·W|
///   e' = (max(residual_clamp, e))⁻¹
/// until max|ΔW| < stop_tolerance or max_iterations is reached. The
/// weighted solve scales rows by √e' and reuses solve_lse_svd, which is
/// algebraically the diagonally weighted normal system. Weights are
/// rescaled by their maximum each round, so a uniform weighting (all
/// residuals under the clamp) reproduces the plain solution bit-exactly.
///
/// Non-convergence is not an error; the report then carries
/// iterations == max_iterations.
template <class Scalar>
SolveReport<Scalar> solve_irls(const MatrixX<Scalar>& design, const VectorX<Scalar>& rhs,
                               const IrlsConfig<Scalar>& cfg,
                               Scalar rank_tolerance = Scalar(kDefaultRankTolerance)) {
  if (cfg.residual_clamp <= Scalar(0))
    throw InvalidValueError("solve_irls: residual_clamp must be positive");
  if (cfg.max_iterations < 1)
    throw InvalidValueError("solve_irls: max_iterations must be at least 1");
  if (cfg.stop_tolerance < Scalar(0))
    throw InvalidValueError("solve_irls: stop_tolerance must be nonnegative");

  SolveReport<Scalar> report = solve_lse_svd(design, rhs, rank_tolerance);
  VectorX<Scalar> weights = report.weights;

  int performed = 0;
  for (int it = 1; it <= cfg.max_iterations; ++it) {
    ArrayX<Scalar> residual = (rhs - design * weights).array().abs();
    ArrayX<Scalar> rowweight = residual.max(cfg.residual_clamp).inverse();
    rowweight /= rowweight.maxCoeff();
    const ArrayX<Scalar> scale = rowweight.sqrt();

    const MatrixX<Scalar> scaled_design = scale.matrix().asDiagonal() * design;
    const VectorX<Scalar> scaled_rhs = (scale * rhs.array()).matrix();
    const SolveReport<Scalar> step = solve_lse_svd(scaled_design, scaled_rhs, rank_tolerance);

    const Scalar delta = (step.weights - weights).cwiseAbs().maxCoeff();
    weights = step.weights;
    report.effective_rank = step.effective_rank;
    performed = it;
    if (delta < cfg.stop_tolerance) break;
  }

  report.weights = weights;
  report.iterations = performed;
  report.residual_norm = (rhs - design * weights).norm();
  return report;
}

}  // namespace lsdc

#endif  // LSDC_SOLVE_HPP
