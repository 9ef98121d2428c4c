#ifndef LSDC_METRICS_HPP
#define LSDC_METRICS_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "lsdc/grid.hpp"

namespace lsdc {

template <class Scalar>
struct MetricsReport {
  Scalar rmse = Scalar(0);
  Scalar rel = Scalar(0);
  /// Percentage of valid pixels with max(d̂/d, d/d̂) below 1.25, 1.25², 1.25³.
  Scalar delta1 = Scalar(0);
  Scalar delta2 = Scalar(0);
  Scalar delta3 = Scalar(0);
  /// Mean minimum absolute error around ground-truth edges; present only
  /// when edge evaluation was requested.
  std::optional<Scalar> see;
  Index valid_pixel_count = 0;
};

/// Depth-map error metrics over the valid pixels.
///
/// RMSE and REL compare per pixel; the delta accuracies use the strict
/// ratio test max(d̂/d, d/d̂) < threshold (nonpositive predictions never
/// pass). With `with_see`, edge pixels are detected on the ground truth by
/// forward-difference gradient magnitude above `edge_threshold` (meters
/// per pixel) and scored with the minimum of |pred(j) − gt(i)| over the
/// in-bounds 3×3 neighborhood j of each edge pixel i; no detected edges
/// give SEE = 0.
template <class Scalar>
MetricsReport<Scalar> evaluate(const DepthMap<Scalar>& pred, const DepthMap<Scalar>& gt,
                               const Mask& valid, bool with_see = false,
                               Scalar edge_threshold = Scalar(0.5)) {
  if (!pred.same_shape(gt) || pred.channels() != 1)
    throw DimensionError("evaluate: pred and gt must be single-channel maps of equal size");
  if (valid.rows() != gt.height() || valid.cols() != gt.width())
    throw DimensionError("evaluate: mask resolution does not match the maps");

  const auto p = pred.channel(0);
  const auto g = gt.channel(0);
  const Index h = gt.height(), w = gt.width();

  MetricsReport<Scalar> report;
  Scalar sq_sum = 0, rel_sum = 0;
  Index count = 0, hit1 = 0, hit2 = 0, hit3 = 0;
  constexpr Scalar t1 = Scalar(1.25);
  constexpr Scalar t2 = t1 * t1;
  constexpr Scalar t3 = t1 * t1 * t1;

  for (Index r = 0; r < h; ++r) {
    for (Index c = 0; c < w; ++c) {
      if (!valid(r, c)) continue;
      const Scalar d = g(r, c), dh = p(r, c);
      if (!std::isfinite(static_cast<double>(d)) || d <= Scalar(0))
        throw InvalidValueError("evaluate: ground truth must be finite and positive at valid pixels");
      ++count;
      const Scalar diff = dh - d;
      sq_sum += diff * diff;
      rel_sum += std::abs(diff) / d;
      const Scalar ratio =
          dh > Scalar(0) ? std::max(dh / d, d / dh) : std::numeric_limits<Scalar>::infinity();
      if (ratio < t1) ++hit1;
      if (ratio < t2) ++hit2;
      if (ratio < t3) ++hit3;
    }
  }
  if (count == 0) throw InvalidValueError("evaluate: no valid pixels");

  report.valid_pixel_count = count;
  report.rmse = std::sqrt(sq_sum / static_cast<Scalar>(count));
  report.rel = rel_sum / static_cast<Scalar>(count);
  report.delta1 = Scalar(100) * static_cast<Scalar>(hit1) / static_cast<Scalar>(count);
  report.delta2 = Scalar(100) * static_cast<Scalar>(hit2) / static_cast<Scalar>(count);
  report.delta3 = Scalar(100) * static_cast<Scalar>(hit3) / static_cast<Scalar>(count);

  if (with_see) {
    Scalar see_sum = 0;
    Index edge_count = 0;
    for (Index r = 0; r < h; ++r) {
      for (Index c = 0; c < w; ++c) {
        if (!valid(r, c)) continue;
        const Scalar gx = c + 1 < w ? g(r, c + 1) - g(r, c) : Scalar(0);
        const Scalar gy = r + 1 < h ? g(r + 1, c) - g(r, c) : Scalar(0);
        if (std::sqrt(gx * gx + gy * gy) <= edge_threshold) continue;
        Scalar best = std::numeric_limits<Scalar>::infinity();
        for (Index dr = -1; dr <= 1; ++dr) {
          for (Index dc = -1; dc <= 1; ++dc) {
            const Index rr = r + dr, cc = c + dc;
            if (rr < 0 || rr >= h || cc < 0 || cc >= w) continue;
            best = std::min(best, std::abs(p(rr, cc) - g(r, c)));
          }
        }
        see_sum += best;
        ++edge_count;
      }
    }
    report.see = edge_count > 0 ? see_sum / static_cast<Scalar>(edge_count) : Scalar(0);
  }
  return report;
}

/// How the weight-vector regularization term is reduced.
enum class RegularizationKind {
  AbsOfSum,  ///< |Σᵢ wᵢ|
  SumOfAbs,  ///< Σᵢ |wᵢ|
};

template <class Scalar>
struct LossReport {
  Scalar direct = Scalar(0);
  Scalar grad = Scalar(0);
  Scalar regular = Scalar(0);
  Scalar total = Scalar(0);
  Scalar alpha = Scalar(0);
  Scalar beta = Scalar(0);
  Scalar gamma = Scalar(0);
};

/// Diagnostic losses of a prediction against ground truth:
///   direct  — mean absolute depth difference,
///   grad    — mean absolute difference of forward-difference gradients
///             (the last column is excluded in x, the last row in y),
///   regular — reduction of the weight vector per `kind`,
///   total   — alpha·direct + beta·grad + gamma·regular.
template <class Scalar>
LossReport<Scalar> training_losses(const DepthMap<Scalar>& pred, const DepthMap<Scalar>& gt,
                                   const VectorX<Scalar>& weights, Scalar alpha, Scalar beta,
                                   Scalar gamma,
                                   RegularizationKind kind = RegularizationKind::AbsOfSum) {
  if (!pred.same_shape(gt) || pred.channels() != 1)
    throw DimensionError("training_losses: pred and gt must be single-channel maps of equal size");
  if (weights.size() < 1) throw InvalidValueError("training_losses: empty weight vector");

  const auto p = pred.channel(0);
  const auto g = gt.channel(0);
  const Index h = gt.height(), w = gt.width();

  LossReport<Scalar> report;
  report.alpha = alpha;
  report.beta = beta;
  report.gamma = gamma;
  report.direct = (g - p).cwiseAbs().mean();

  Scalar grad_sum = 0;
  const Index grad_terms = h * (w - 1) + (h - 1) * w;
  if (grad_terms > 0) {
    grad_sum += ((g.rightCols(w - 1) - g.leftCols(w - 1)) -
                 (p.rightCols(w - 1) - p.leftCols(w - 1)))
                    .cwiseAbs()
                    .sum();
    grad_sum += ((g.bottomRows(h - 1) - g.topRows(h - 1)) -
                 (p.bottomRows(h - 1) - p.topRows(h - 1)))
                    .cwiseAbs()
                    .sum();
    report.grad = grad_sum / static_cast<Scalar>(grad_terms);
  }

  report.regular =
      kind == RegularizationKind::AbsOfSum ? std::abs(weights.sum()) : weights.cwiseAbs().sum();
  report.total = alpha * report.direct + beta * report.grad + gamma * report.regular;
  return report;
}

}  // namespace lsdc

#endif  // LSDC_METRICS_HPP
