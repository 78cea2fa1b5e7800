#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "cms/geometry.hpp"
#include "cms/kernels.hpp"
#include "cms/pointcloud.hpp"

namespace cms {

/// H x W x C image produced by projecting a colored cloud. Pixels no point
/// lands on hold kFillValue on every channel and are marked uncovered.
struct ProjectedImage {
  static constexpr float kFillValue = 0.0f;

  CameraIntrinsics intrinsics;
  std::uint32_t channels = 3;
  std::vector<float> pixels;           ///< row-major (row, col, channel)
  std::vector<std::uint8_t> coverage;  ///< row-major (row, col); 1 where covered

  ProjectedImage() = default;
  ProjectedImage(const CameraIntrinsics& k, std::uint32_t channel_count);

  std::uint32_t width() const { return intrinsics.width; }
  std::uint32_t height() const { return intrinsics.height; }
  float at(std::uint32_t row, std::uint32_t col, std::uint32_t ch) const {
    return pixels[(static_cast<std::size_t>(row) * width() + col) * channels + ch];
  }
  bool covered(std::uint32_t row, std::uint32_t col) const {
    return coverage[static_cast<std::size_t>(row) * width() + col] != 0;
  }
  std::size_t covered_count() const;

  friend bool operator==(const ProjectedImage&, const ProjectedImage&) = default;
};

/// A cloud plus the pose that places the motion-origin camera in the cloud's
/// frame. Rendering under a motion a uses compose(base_pose, a).
struct SceneFrame {
  std::shared_ptr<const ColoredPointCloud> cloud;
  MotionParams base_pose;

  SceneFrame() = default;
  SceneFrame(std::shared_ptr<const ColoredPointCloud> c, const MotionParams& pose = {})
      : cloud(std::move(c)), base_pose(pose) {}

  /// Same cloud, origin moved by `motion` (shares the point storage).
  SceneFrame moved(const MotionParams& motion) const;
};

/// Depth difference below which two candidates for a pixel count as tied; the
/// lower cloud index wins a tie.
inline constexpr double kDepthTieTolerance = 1e-12;

/// Reusable buffers for repeated renders of the same camera.
class RenderScratch {
 public:
  std::vector<std::int32_t> cells;
  std::vector<double> depths;
  std::vector<double> zmin;
  std::vector<std::int32_t> owner;
};

/// Z-buffered floor splat of the frame's cloud under `motion`.
ProjectedImage render(const SceneFrame& frame, const MotionParams& motion, const CameraIntrinsics& intrinsics);

/// Allocation-free variant for hot loops. `kernels` selects the projection
/// variant (defaults to the runtime-selected one).
void render_into(const SceneFrame& frame, const MotionParams& motion, const CameraIntrinsics& intrinsics,
                 RenderScratch& scratch, ProjectedImage& out,
                 const kernels::KernelTable& kernels = kernels::active());

/// The view behind a benign image re-rendered after an extra camera motion;
/// identical to render(frame, motion, intrinsics).
ProjectedImage relative_project(const SceneFrame& frame, const MotionParams& motion,
                                const CameraIntrinsics& intrinsics);

/// Cloud re-expressed in the camera frame reached by `motion` from the cloud
/// frame (points become R^-1 (P - t)).
ColoredPointCloud reexpress(const ColoredPointCloud& cloud, const MotionParams& motion);

// Image serialization: "CMSIMG01", u32 H, u32 W, then H*W*C little-endian f32.
std::vector<std::uint8_t> encode_image_tensor(const ProjectedImage& image);
/// Channel count is inferred from the payload size.
ProjectedImage decode_image_tensor(std::span<const std::uint8_t> bytes, const CameraIntrinsics& intrinsics);
void write_image_tensor(const ProjectedImage& image, const std::string& path);
/// 8-bit PNG (gray for 1 channel, RGB for 3, first three channels otherwise).
void write_png(const ProjectedImage& image, const std::string& path);

}  // namespace cms
