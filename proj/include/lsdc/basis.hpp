#ifndef LSDC_BASIS_HPP
#define LSDC_BASIS_HPP

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "lsdc/grid.hpp"
#include "lsdc/rng.hpp"

namespace lsdc {

struct BasisGeneratorConfig {
  /// Basis dimension N; the basis field has N+1 columns (constant first).
  Index basis_dim = 128;
  /// Seeds the projection weights; same seed, same weights, bit for bit.
  std::uint64_t seed = 0;
  Index hidden_dim = 64;
  /// Average-pooling window sizes of the feature pyramid.
  std::vector<Index> pyramid_scales = {2, 4, 8, 16};
};

/// Per-pixel basis vectors bound to an image resolution.
///
/// Row k of `matrix` is the basis vector of pixel k (row-major pixel
/// order): [1, f_1, …, f_N]. Column 0 is all ones by construction.
template <class Scalar>
struct BasisField {
  Index height = 0;
  Index width = 0;
  Index basis_dim = 0;
  RowMatrixX<Scalar> matrix;

  Index pixels() const { return height * width; }
  auto row(Index r, Index c) const { return matrix.row(r * width + c); }
};

namespace detail {

/// Average pooling with window `scale` (stride = window); edge blocks that
/// hang over the border average only the pixels they cover.
template <class Scalar>
DenseGrid<Scalar> average_pool(const DenseGrid<Scalar>& src, Index scale) {
  const Index ph = (src.height() + scale - 1) / scale;
  const Index pw = (src.width() + scale - 1) / scale;
  DenseGrid<Scalar> out(ph, pw, src.channels());
  for (Index ch = 0; ch < src.channels(); ++ch) {
    const auto in = src.channel(ch);
    auto dst = out.channel(ch);
    for (Index br = 0; br < ph; ++br) {
      const Index r0 = br * scale;
      const Index rows = std::min(scale, src.height() - r0);
      for (Index bc = 0; bc < pw; ++bc) {
        const Index c0 = bc * scale;
        const Index cols = std::min(scale, src.width() - c0);
        dst(br, bc) = in.block(r0, c0, rows, cols).sum() / static_cast<Scalar>(rows * cols);
      }
    }
  }
  return out;
}

}  // namespace detail

/// Multi-scale pooled features of the guide image.
///
/// The raw channels are concatenated with, per pooling scale, the image
/// average-pooled at that window and resampled back to full resolution,
/// giving C·(1 + |scales|) output channels. Grayscale inputs are
/// replicated to three channels first. Deterministic.
template <class Scalar>
FeatureMap<Scalar> extract_pyramid_features(const DenseGrid<Scalar>& image,
                                            const std::vector<Index>& scales) {
  if (scales.empty()) throw InvalidValueError("extract_pyramid_features: empty scale list");
  for (Index s : scales) {
    if (s < 1) throw InvalidValueError("extract_pyramid_features: scales must be >= 1");
    if (s > image.height() || s > image.width())
      throw DimensionError("extract_pyramid_features: image smaller than pooling scale " +
                           std::to_string(s));
  }
  if (image.channels() != 3 && image.channels() != 1)
    throw DimensionError("extract_pyramid_features: expected 1 or 3 image channels");

  DenseGrid<Scalar> base(image.height(), image.width(), 3);
  if (image.channels() == 3) {
    base.values() = image.values();
  } else {
    for (Index c = 0; c < 3; ++c) base.values().col(c) = image.values().col(0);
  }

  const Index levels = static_cast<Index>(scales.size());
  FeatureMap<Scalar> out(image.height(), image.width(), 3 * (1 + levels));
  out.values().leftCols(3) = base.values();
  for (Index i = 0; i < levels; ++i) {
    const DenseGrid<Scalar> pooled = detail::average_pool(base, scales[static_cast<std::size_t>(i)]);
    const DenseGrid<Scalar> up = bilinear_resize(pooled, image.height(), image.width());
    out.values().middleCols(3 * (i + 1), 3) = up.values();
  }
  return out;
}

/// Raw and sinusoidal coordinate channels.
///
/// Per pixel: [x, x, y, y, sin(2⁰πx), cos(2⁰πx), sin(2⁰πy), cos(2⁰πy), …,
/// sin(2^{E−2}πx), cos(2^{E−2}πx), sin(2^{E−2}πy), cos(2^{E−2}πy)], with
/// x along the width and y along the height, both normalized to [0, 1]
/// (an axis of length 1 maps to coordinate 0). Total channels 4 + 4(E−1).
template <class Scalar>
PositionMap<Scalar> positional_encoding(Index height, Index width, Index encode_levels) {
  if (encode_levels < 1)
    throw InvalidValueError("positional_encoding: encode_levels must be at least 1");
  if (height < 1 || width < 1)
    throw InvalidValueError("positional_encoding: dimensions must be positive");

  PositionMap<Scalar> out(height, width, 4 + 4 * (encode_levels - 1));
  VectorX<Scalar> xs(width), ys(height);
  for (Index c = 0; c < width; ++c)
    xs(c) = width > 1 ? static_cast<Scalar>(c) / static_cast<Scalar>(width - 1) : Scalar(0);
  for (Index r = 0; r < height; ++r)
    ys(r) = height > 1 ? static_cast<Scalar>(r) / static_cast<Scalar>(height - 1) : Scalar(0);

  auto& v = out.values();
  for (Index r = 0; r < height; ++r) {
    for (Index c = 0; c < width; ++c) {
      const Index k = r * width + c;
      const Scalar x = xs(c), y = ys(r);
      v(k, 0) = x;
      v(k, 1) = x;
      v(k, 2) = y;
      v(k, 3) = y;
      Scalar freq = static_cast<Scalar>(EIGEN_PI);
      for (Index level = 0; level < encode_levels - 1; ++level) {
        v(k, 4 + 4 * level + 0) = std::sin(freq * x);
        v(k, 4 + 4 * level + 1) = std::cos(freq * x);
        v(k, 4 + 4 * level + 2) = std::sin(freq * y);
        v(k, 4 + 4 * level + 3) = std::cos(freq * y);
        freq *= Scalar(2);
      }
    }
  }
  return out;
}

/// Maps per-pixel (features ‖ positions) vectors through a fixed two-layer
/// projection to basis vectors of length N, then prefixes the constant 1.
///
/// Layer weights are drawn from splitmix64(cfg.seed) uniformly in [−a, a]
/// with a = √(6 / (fan_in + fan_out)), filled row by row, first layer then
/// second; the hidden layer applies tanh. Identical inputs and config give
/// a bit-identical field on every run.
template <class Scalar>
BasisField<Scalar> generate_basis(const FeatureMap<Scalar>& features,
                                  const PositionMap<Scalar>& positions,
                                  const BasisGeneratorConfig& cfg) {
  if (features.height() != positions.height() || features.width() != positions.width())
    throw DimensionError("generate_basis: features and positions disagree on resolution");
  if (cfg.basis_dim < 1) throw InvalidValueError("generate_basis: basis_dim must be >= 1");
  if (cfg.hidden_dim < 1) throw InvalidValueError("generate_basis: hidden_dim must be >= 1");

  const Index m = features.pixels();
  const Index in_dim = features.channels() + positions.channels();

  SplitMix64 rng(cfg.seed);
  auto draw_layer = [&rng](Index fan_in, Index fan_out) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    MatrixX<Scalar> w(fan_in, fan_out);
    for (Index r = 0; r < fan_in; ++r)
      for (Index c = 0; c < fan_out; ++c)
        w(r, c) = static_cast<Scalar>(rng.next_in(-bound, bound));
    return w;
  };
  const MatrixX<Scalar> w1 = draw_layer(in_dim, cfg.hidden_dim);
  const MatrixX<Scalar> w2 = draw_layer(cfg.hidden_dim, cfg.basis_dim);

  MatrixX<Scalar> input(m, in_dim);
  input << features.values(), positions.values();

  MatrixX<Scalar> hidden = input * w1;
  hidden = hidden.array().tanh();

  BasisField<Scalar> field;
  field.height = features.height();
  field.width = features.width();
  field.basis_dim = cfg.basis_dim;
  field.matrix.resize(m, cfg.basis_dim + 1);
  field.matrix.col(0).setOnes();
  field.matrix.rightCols(cfg.basis_dim).noalias() = hidden * w2;
  return field;
}

/// Channelwise corner-aligned bilinear resampling of a feature map.
/// Resampling at the source resolution returns the input exactly.
template <class Scalar>
FeatureMap<Scalar> interpolate_features(const FeatureMap<Scalar>& features, Index target_h,
                                        Index target_w) {
  if (target_h < 1 || target_w < 1)
    throw InvalidValueError("interpolate_features: target dimensions must be positive");
  return bilinear_resize(features, target_h, target_w);
}

}  // namespace lsdc

#endif  // LSDC_BASIS_HPP
