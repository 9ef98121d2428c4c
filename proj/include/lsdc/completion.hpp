#ifndef LSDC_COMPLETION_HPP
#define LSDC_COMPLETION_HPP

#include <cmath>
#include <cstdint>
#include <cstring>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "lsdc/basis.hpp"
#include "lsdc/grid.hpp"
#include "lsdc/solve.hpp"

namespace lsdc {

/// Sparse depth measurements bound to an image resolution.
/// Coordinates are unique and in bounds; depths are finite and positive.
template <class Scalar>
class SparseDepth {
 public:
  struct Entry {
    Index row;
    Index col;
    Scalar depth;
  };

  SparseDepth(Index height, Index width, std::vector<Entry> entries)
      : height_(height), width_(width), entries_(std::move(entries)) {
    if (height_ < 1 || width_ < 1)
      throw InvalidValueError("SparseDepth: resolution must be positive");
    std::unordered_set<Index> seen;
    seen.reserve(entries_.size());
    for (const Entry& e : entries_) {
      if (e.row < 0 || e.row >= height_ || e.col < 0 || e.col >= width_)
        throw DimensionError("SparseDepth: coordinate (" + std::to_string(e.row) + ", " +
                             std::to_string(e.col) + ") out of bounds");
      if (!std::isfinite(static_cast<double>(e.depth)) || e.depth <= Scalar(0))
        throw InvalidValueError("SparseDepth: depths must be finite and positive");
      if (!seen.insert(e.row * width_ + e.col).second)
        throw InvalidValueError("SparseDepth: duplicate coordinate (" + std::to_string(e.row) +
                                ", " + std::to_string(e.col) + ")");
    }
  }

  Index height() const { return height_; }
  Index width() const { return width_; }
  Index size() const { return static_cast<Index>(entries_.size()); }
  const std::vector<Entry>& entries() const { return entries_; }

 private:
  Index height_;
  Index width_;
  std::vector<Entry> entries_;
};

template <class Scalar>
struct CompletionConfig {
  BasisGeneratorConfig generator;
  Index encode_levels = 5;
  bool use_irls = false;
  IrlsConfig<Scalar> irls;
  Scalar rank_tolerance = Scalar(kDefaultRankTolerance);
};

template <class Scalar>
struct CompletionResult {
  DepthMap<Scalar> depth;
  SolveReport<Scalar> report;
  /// Content hash of the basis field the fit used; equal hashes mean the
  /// field was identical byte for byte.
  std::uint64_t basis_hash = 0;
};

/// FNV-1a over the field's dimensions and raw matrix bytes.
template <class Scalar>
std::uint64_t content_hash(const BasisField<Scalar>& field) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const unsigned char* bytes, std::size_t len) {
    for (std::size_t i = 0; i < len; ++i) {
      h ^= bytes[i];
      h *= 0x00000100000001b3ULL;
    }
  };
  const std::int64_t dims[3] = {field.height, field.width, field.basis_dim};
  mix(reinterpret_cast<const unsigned char*>(dims), sizeof(dims));
  mix(reinterpret_cast<const unsigned char*>(field.matrix.data()),
      sizeof(Scalar) * static_cast<std::size_t>(field.matrix.size()));
  return h;
}

/// Feature extraction, positional encoding, and basis generation for one
/// guide image. The sparse measurements play no part here; the field
/// depends on the image and config alone.
template <class Scalar>
BasisField<Scalar> build_basis_field(const DenseGrid<Scalar>& image,
                                     const CompletionConfig<Scalar>& cfg) {
  const FeatureMap<Scalar> features =
      extract_pyramid_features(image, cfg.generator.pyramid_scales);
  const PositionMap<Scalar> positions =
      positional_encoding<Scalar>(image.height(), image.width(), cfg.encode_levels);
  return generate_basis(features, positions, cfg.generator);
}

/// Rows of the basis field at the measured pixels, in entry order, plus
/// the measured depths.
template <class Scalar>
std::pair<MatrixX<Scalar>, VectorX<Scalar>> gather_known(const BasisField<Scalar>& field,
                                                         const SparseDepth<Scalar>& sparse) {
  if (sparse.height() != field.height || sparse.width() != field.width)
    throw DimensionError("gather_known: sparse resolution does not match the basis field");
  if (sparse.size() < 1) throw InvalidValueError("gather_known: empty sparse set");

  const Index n = sparse.size();
  MatrixX<Scalar> design(n, field.basis_dim + 1);
  VectorX<Scalar> depths(n);
  for (Index i = 0; i < n; ++i) {
    const auto& e = sparse.entries()[static_cast<std::size_t>(i)];
    design.row(i) = field.matrix.row(e.row * field.width + e.col);
    depths(i) = e.depth;
  }
  return {std::move(design), std::move(depths)};
}

/// Dense prediction: pixel k gets dot(f_k, weights).
template <class Scalar>
DepthMap<Scalar> predict_dense(const BasisField<Scalar>& field, const VectorX<Scalar>& weights) {
  if (weights.size() != field.basis_dim + 1)
    throw DimensionError("predict_dense: expected " + std::to_string(field.basis_dim + 1) +
                         " weights, got " + std::to_string(weights.size()));
  DepthMap<Scalar> out(field.height, field.width, 1);
  out.values().col(0).noalias() = field.matrix * weights;
  return out;
}

namespace detail {

template <class Scalar>
CompletionResult<Scalar> fit_and_predict(const BasisField<Scalar>& field,
                                         const SparseDepth<Scalar>& sparse,
                                         const CompletionConfig<Scalar>& cfg) {
  auto [design, depths] = gather_known(field, sparse);
  CompletionResult<Scalar> result;
  result.report = cfg.use_irls ? solve_irls(design, depths, cfg.irls, cfg.rank_tolerance)
                               : solve_lse_svd(design, depths, cfg.rank_tolerance);
  result.depth = predict_dense(field, result.report.weights);
  result.basis_hash = content_hash(field);
  return result;
}

}  // namespace detail

/// Completion from an already-computed feature map (e.g. loaded from a
/// file instead of the built-in extractor).
template <class Scalar>
CompletionResult<Scalar> complete_from_features(const FeatureMap<Scalar>& features,
                                                const SparseDepth<Scalar>& sparse,
                                                const CompletionConfig<Scalar>& cfg) {
  if (sparse.height() != features.height() || sparse.width() != features.width())
    throw DimensionError("complete: sparse resolution does not match the feature map");
  const PositionMap<Scalar> positions =
      positional_encoding<Scalar>(features.height(), features.width(), cfg.encode_levels);
  const BasisField<Scalar> field = generate_basis(features, positions, cfg.generator);
  return detail::fit_and_predict(field, sparse, cfg);
}

/// End-to-end completion: features → positional encoding → basis →
/// least-squares fit of the sparse depths → dense prediction.
/// Deterministic given (image, sparse, cfg). Fits with fewer measurements
/// than basis columns are flagged `underdetermined` in the report.
template <class Scalar>
CompletionResult<Scalar> complete(const DenseGrid<Scalar>& image, const SparseDepth<Scalar>& sparse,
                                  const CompletionConfig<Scalar>& cfg) {
  if (sparse.height() != image.height() || sparse.width() != image.width())
    throw DimensionError("complete: sparse resolution does not match the image");
  const FeatureMap<Scalar> features =
      extract_pyramid_features(image, cfg.generator.pyramid_scales);
  return complete_from_features(features, sparse, cfg);
}

namespace detail {

/// Nearest target pixel by normalized coordinates. Injective whenever the
/// target axis is at least as long as the source axis.
inline Index map_coordinate(Index src, Index src_len, Index dst_len) {
  if (src_len <= 1) return 0;
  const double t = static_cast<double>(src) * static_cast<double>(dst_len - 1) /
                   static_cast<double>(src_len - 1);
  return static_cast<Index>(std::llround(t));
}

template <class Scalar>
CompletionResult<Scalar> superres_from_features(const FeatureMap<Scalar>& features,
                                                const SparseDepth<Scalar>& sparse,
                                                const CompletionConfig<Scalar>& cfg,
                                                Index target_h, Index target_w) {
  if (target_h < sparse.height() || target_w < sparse.width())
    throw InvalidValueError("complete_superres: target resolution is smaller than the source");

  const FeatureMap<Scalar> up = interpolate_features(features, target_h, target_w);
  const PositionMap<Scalar> positions =
      positional_encoding<Scalar>(target_h, target_w, cfg.encode_levels);
  const BasisField<Scalar> field = generate_basis(up, positions, cfg.generator);

  std::vector<typename SparseDepth<Scalar>::Entry> mapped;
  mapped.reserve(static_cast<std::size_t>(sparse.size()));
  for (const auto& e : sparse.entries())
    mapped.push_back({map_coordinate(e.row, sparse.height(), target_h),
                      map_coordinate(e.col, sparse.width(), target_w), e.depth});
  const SparseDepth<Scalar> sparse_t(target_h, target_w, std::move(mapped));

  return fit_and_predict(field, sparse_t, cfg);
}

}  // namespace detail

/// Super-resolution completion: features are extracted at the source
/// resolution and interpolated to the target; positional encoding and the
/// basis are rebuilt at the target resolution; each measurement moves to
/// the nearest target pixel by normalized coordinates. With target equal
/// to source, the output matches complete() bit-exactly.
template <class Scalar>
CompletionResult<Scalar> complete_superres(const DenseGrid<Scalar>& image,
                                           const SparseDepth<Scalar>& sparse,
                                           const CompletionConfig<Scalar>& cfg, Index target_h,
                                           Index target_w) {
  if (sparse.height() != image.height() || sparse.width() != image.width())
    throw DimensionError("complete_superres: sparse resolution does not match the image");
  const FeatureMap<Scalar> features =
      extract_pyramid_features(image, cfg.generator.pyramid_scales);
  return detail::superres_from_features(features, sparse, cfg, target_h, target_w);
}

/// Super-resolution completion from an externally supplied feature map.
template <class Scalar>
CompletionResult<Scalar> complete_superres_from_features(const FeatureMap<Scalar>& features,
                                                         const SparseDepth<Scalar>& sparse,
                                                         const CompletionConfig<Scalar>& cfg,
                                                         Index target_h, Index target_w) {
  if (sparse.height() != features.height() || sparse.width() != features.width())
    throw DimensionError("complete_superres: sparse resolution does not match the feature map");
  return detail::superres_from_features(features, sparse, cfg, target_h, target_w);
}

/// Cosine-similarity map of one pixel's basis vector against every other:
/// value at pixel k is dot(f_anchor, f_k) / (‖f_anchor‖·‖f_k‖), clamped to
/// [−1, 1]; the anchor pixel itself is exactly 1.
template <class Scalar>
DenseGrid<Scalar> kernel_map(const BasisField<Scalar>& field, Index anchor_row, Index anchor_col) {
  if (anchor_row < 0 || anchor_row >= field.height || anchor_col < 0 ||
      anchor_col >= field.width)
    throw DimensionError("kernel_map: anchor out of bounds");

  const Index anchor = anchor_row * field.width + anchor_col;
  const VectorX<Scalar> norms = field.matrix.rowwise().norm();
  // The constant column makes every row norm at least 1.
  eigen_assert(norms.minCoeff() > Scalar(0));

  DenseGrid<Scalar> out(field.height, field.width, 1);
  out.values().col(0).noalias() = field.matrix * field.matrix.row(anchor).transpose();
  out.values().col(0).array() /= norms.array() * norms(anchor);
  out.values().col(0) = out.values().col(0).cwiseMax(Scalar(-1)).cwiseMin(Scalar(1));
  out.values()(anchor, 0) = Scalar(1);
  return out;
}

}  // namespace lsdc

#endif  // LSDC_COMPLETION_HPP
