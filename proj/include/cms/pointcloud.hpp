#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cms/geometry.hpp"

namespace cms {

/// Colored point cloud stored as structure-of-arrays so the projection kernels
/// can stream coordinates directly. Colors are row-major (point, channel).
class ColoredPointCloud {
 public:
  explicit ColoredPointCloud(std::uint32_t channel_count = 3);

  void reserve(std::size_t n);
  /// Throws InvalidArgument on non-finite positions, colors outside [0, 1] or a
  /// channel count mismatch.
  void push_back(const Point3& position, std::span<const float> color);
  void push_back(const Point3& position, std::initializer_list<float> color) {
    push_back(position, std::span<const float>(color.begin(), color.size()));
  }

  std::size_t size() const { return xs_.size(); }
  bool empty() const { return xs_.empty(); }
  std::uint32_t channel_count() const { return channels_; }

  Point3 position(std::size_t i) const { return {xs_[i], ys_[i], zs_[i]}; }
  std::span<const float> color(std::size_t i) const {
    return {colors_.data() + i * channels_, channels_};
  }

  std::span<const double> xs() const { return xs_; }
  std::span<const double> ys() const { return ys_; }
  std::span<const double> zs() const { return zs_; }
  std::span<const float> colors() const { return colors_; }

  friend bool operator==(const ColoredPointCloud&, const ColoredPointCloud&) = default;

 private:
  std::uint32_t channels_;
  std::vector<double> xs_, ys_, zs_;
  std::vector<float> colors_;
};

/// Parses ASCII or binary little-endian PLY with x, y, z and red, green, blue
/// vertex properties. uchar colors are scaled to [0, 1].
ColoredPointCloud parse_ply(std::span<const std::uint8_t> bytes);
ColoredPointCloud read_ply_file(const std::string& path);

/// Binary little-endian PLY: float x, y, z and uchar red, green, blue, with
/// colors quantized as floor(c * 255 + 0.5).
std::vector<std::uint8_t> write_ply(const ColoredPointCloud& cloud);
void write_ply_file(const ColoredPointCloud& cloud, const std::string& path);

std::uint8_t quantize_channel(float value);

/// Keeps points 0, k, 2k, ...
ColoredPointCloud uniform_downsample(const ColoredPointCloud& cloud, std::size_t k);

/// One point per occupied voxel (centroid position, mean color), ordered by
/// voxel key with z most significant, then y, then x.
ColoredPointCloud voxel_downsample(const ColoredPointCloud& cloud, double voxel_size);

/// Applies uniform then voxel downsampling; k <= 1 or voxel_size <= 0 skips
/// the corresponding stage.
ColoredPointCloud two_stage_downsample(const ColoredPointCloud& cloud, std::size_t k, double voxel_size);

}  // namespace cms
