#ifndef LSDC_DATAIO_HPP
#define LSDC_DATAIO_HPP

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "lsdc/completion.hpp"
#include "lsdc/grid.hpp"
#include "lsdc/rng.hpp"

namespace lsdc {

/// A guide image with densely labeled depth, as loaded from disk.
template <class Scalar>
struct DatasetSample {
  DenseGrid<Scalar> image;   // H×W×3 in [0, 1]
  DepthMap<Scalar> gt_depth; // meters
  Mask valid_mask;           // gt finite and > 0
};

/// Pixels where the depth is finite and positive.
template <class Scalar>
Mask valid_mask_of(const DepthMap<Scalar>& gt) {
  Mask mask(gt.height(), gt.width());
  const auto g = gt.channel(0);
  for (Index r = 0; r < gt.height(); ++r)
    for (Index c = 0; c < gt.width(); ++c)
      mask(r, c) = std::isfinite(static_cast<double>(g(r, c))) && g(r, c) > Scalar(0);
  return mask;
}

/// Uniform draw of `count` measurements without replacement from the valid
/// pixels, in draw order. Deterministic given the rng spec.
template <class Scalar>
SparseDepth<Scalar> sample_sparse(const DepthMap<Scalar>& gt, const Mask& valid, Index count,
                                  const RngSpec& rng_spec) {
  if (valid.rows() != gt.height() || valid.cols() != gt.width())
    throw DimensionError("sample_sparse: mask resolution does not match the depth map");
  std::vector<Index> pool;
  for (Index r = 0; r < gt.height(); ++r)
    for (Index c = 0; c < gt.width(); ++c)
      if (valid(r, c)) pool.push_back(r * gt.width() + c);
  if (count < 0 || static_cast<std::size_t>(count) > pool.size())
    throw InvalidValueError("sample_sparse: requested " + std::to_string(count) + " of " +
                            std::to_string(pool.size()) + " valid pixels");

  SplitMix64 rng = make_rng(rng_spec);
  const std::vector<std::size_t> picks =
      sample_without_replacement(pool.size(), static_cast<std::size_t>(count), rng);

  std::vector<typename SparseDepth<Scalar>::Entry> entries;
  entries.reserve(picks.size());
  for (std::size_t p : picks) {
    const Index k = pool[p];
    const Index r = k / gt.width(), c = k % gt.width();
    entries.push_back({r, c, gt(r, c)});
  }
  return SparseDepth<Scalar>(gt.height(), gt.width(), std::move(entries));
}

/// Every depth multiplied by `factor`; coordinates unchanged.
template <class Scalar>
SparseDepth<Scalar> perturb_scale(const SparseDepth<Scalar>& sparse, Scalar factor) {
  if (!(factor > Scalar(0))) throw InvalidValueError("perturb_scale: factor must be positive");
  std::vector<typename SparseDepth<Scalar>::Entry> entries = sparse.entries();
  for (auto& e : entries) e.depth *= factor;
  return SparseDepth<Scalar>(sparse.height(), sparse.width(), std::move(entries));
}

/// Adds uniform noise in [low, high] to `corrupt_count` entries chosen
/// without replacement; the rest are untouched. The rng stream draws the
/// selection first, then one noise value per chosen entry in selection
/// order. Deterministic given the rng spec.
template <class Scalar>
SparseDepth<Scalar> inject_noise(const SparseDepth<Scalar>& sparse, Index corrupt_count,
                                 Scalar low, Scalar high, const RngSpec& rng_spec) {
  if (corrupt_count < 0 || corrupt_count > sparse.size())
    throw InvalidValueError("inject_noise: corrupt_count exceeds the number of entries");
  if (low > high) throw InvalidValueError("inject_noise: low must not exceed high");

  SplitMix64 rng = make_rng(rng_spec);
  const std::vector<std::size_t> picks = sample_without_replacement(
      static_cast<std::size_t>(sparse.size()), static_cast<std::size_t>(corrupt_count), rng);

  std::vector<typename SparseDepth<Scalar>::Entry> entries = sparse.entries();
  for (std::size_t p : picks)
    entries[p].depth += static_cast<Scalar>(rng.next_in(static_cast<double>(low), static_cast<double>(high)));
  return SparseDepth<Scalar>(sparse.height(), sparse.width(), std::move(entries));
}

// File formats (see README for the byte-level layout):
//  - images:      8-bit binary PPM (P6) or PGM (P5), values scaled to [0, 1]
//  - depth maps:  16-bit binary PGM in millimeters, or raw "DMAP" float32
//  - feature maps: raw "FMAP" float32 with a channel count
//  - sparse sets: text, "sparse v1 <H> <W> <n>" then "row col depth" lines

DenseGrid<double> load_image(const std::filesystem::path& path);
void save_image(const DenseGrid<double>& image, const std::filesystem::path& path);

DepthMap<double> load_depth(const std::filesystem::path& path);
/// Writes 16-bit PGM when the extension is .pgm, the raw float format
/// otherwise. PGM quantizes to millimeters and clamps to [0, 65.535] m.
void save_depth(const DepthMap<double>& map, const std::filesystem::path& path);

FeatureMap<double> load_features(const std::filesystem::path& path);
void save_features(const FeatureMap<double>& features, const std::filesystem::path& path);

SparseDepth<double> load_sparse(const std::filesystem::path& path);
void save_sparse(const SparseDepth<double>& sparse, const std::filesystem::path& path);

/// Loads a guide image and its depth map and derives the validity mask.
/// The two files must agree on resolution.
DatasetSample<double> load_sample(const std::filesystem::path& image_path,
                                  const std::filesystem::path& depth_path);

}  // namespace lsdc

#endif  // LSDC_DATAIO_HPP
