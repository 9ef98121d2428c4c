#ifndef LSDC_GRID_HPP
#define LSDC_GRID_HPP

#include <Eigen/Core>
#include <cmath>

#include "lsdc/errors.hpp"

namespace lsdc {

using Index = Eigen::Index;

template <class Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <class Scalar>
using RowMatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <class Scalar>
using ArrayX = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

/// Per-pixel boolean flags, H×W.
using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// H×W×C grid of real values. Images, feature maps, position maps, and
/// depth maps all share this container.
///
/// Storage is one column per channel with pixels flattened row-major
/// (pixel k = r·W + c), so each channel plane is contiguous and the whole
/// grid doubles as a (H·W)×C matrix of per-pixel feature rows.
template <class Scalar>
class DenseGrid {
 public:
  using Storage = MatrixX<Scalar>;
  using ChannelView = Eigen::Map<const RowMatrixX<Scalar>>;
  using ChannelRef = Eigen::Map<RowMatrixX<Scalar>>;

  DenseGrid() = default;

  DenseGrid(Index height, Index width, Index channels)
      : height_(height), width_(width), values_(Storage::Zero(height * width, channels)) {
    if (height < 1 || width < 1 || channels < 1)
      throw InvalidValueError("DenseGrid: dimensions must be positive");
  }

  static DenseGrid constant(Index height, Index width, Index channels, Scalar value) {
    DenseGrid g(height, width, channels);
    g.values_.setConstant(value);
    return g;
  }

  Index height() const { return height_; }
  Index width() const { return width_; }
  Index channels() const { return values_.cols(); }
  Index pixels() const { return height_ * width_; }

  Scalar operator()(Index row, Index col, Index channel = 0) const {
    return values_(row * width_ + col, channel);
  }
  Scalar& operator()(Index row, Index col, Index channel = 0) {
    return values_(row * width_ + col, channel);
  }

  /// H×W view of one channel plane.
  ChannelView channel(Index c) const {
    return ChannelView(values_.col(c).data(), height_, width_);
  }
  ChannelRef channel(Index c) {
    return ChannelRef(values_.col(c).data(), height_, width_);
  }

  /// The (H·W)×C matrix: row k is pixel k's value across channels.
  const Storage& values() const { return values_; }
  Storage& values() { return values_; }

  bool same_shape(const DenseGrid& other) const {
    return height_ == other.height_ && width_ == other.width_ &&
           channels() == other.channels();
  }

 private:
  Index height_ = 0;
  Index width_ = 0;
  Storage values_;
};

template <class Scalar>
using FeatureMap = DenseGrid<Scalar>;
/// Positional-encoding channels; channel count is 4 + 4·(E−1).
template <class Scalar>
using PositionMap = DenseGrid<Scalar>;
/// Single-channel grid of depths in meters.
template <class Scalar>
using DepthMap = DenseGrid<Scalar>;

/// Corner-aligned bilinear resampling, channelwise.
///
/// Uses the lerp form a + t·(b−a), so constant inputs stay exactly
/// constant and resampling at the source resolution returns the input
/// bit-exactly. A target axis of length 1 samples coordinate 0.
template <class Scalar>
DenseGrid<Scalar> bilinear_resize(const DenseGrid<Scalar>& src, Index target_h, Index target_w) {
  if (target_h < 1 || target_w < 1)
    throw InvalidValueError("bilinear_resize: target dimensions must be positive");
  const Index sh = src.height(), sw = src.width();
  DenseGrid<Scalar> out(target_h, target_w, src.channels());
  const double ry = target_h > 1 ? static_cast<double>(sh - 1) / static_cast<double>(target_h - 1) : 0.0;
  const double rx = target_w > 1 ? static_cast<double>(sw - 1) / static_cast<double>(target_w - 1) : 0.0;
  for (Index ch = 0; ch < src.channels(); ++ch) {
    const auto in = src.channel(ch);
    auto dst = out.channel(ch);
    for (Index r = 0; r < target_h; ++r) {
      const double y = static_cast<double>(r) * ry;
      const Index y0 = static_cast<Index>(std::floor(y));
      const Index y1 = std::min(y0 + 1, sh - 1);
      const Scalar ty = static_cast<Scalar>(y - static_cast<double>(y0));
      for (Index c = 0; c < target_w; ++c) {
        const double x = static_cast<double>(c) * rx;
        const Index x0 = static_cast<Index>(std::floor(x));
        const Index x1 = std::min(x0 + 1, sw - 1);
        const Scalar tx = static_cast<Scalar>(x - static_cast<double>(x0));
        const Scalar top = in(y0, x0) + tx * (in(y0, x1) - in(y0, x0));
        const Scalar bot = in(y1, x0) + tx * (in(y1, x1) - in(y1, x0));
        dst(r, c) = top + ty * (bot - top);
      }
    }
  }
  return out;
}

}  // namespace lsdc

#endif  // LSDC_GRID_HPP
