#include <cmath>

#include "cms/kernels.hpp"

namespace cms::kernels {

void project_points_scalar(const ProjectionSetup& s, std::span<const double> xs, std::span<const double> ys,
                           std::span<const double> zs, std::span<std::int32_t> cells, std::span<double> depths) {
  const auto& r = s.rotation;
  const double w = s.width;
  const double h = s.height;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - s.translation[0];
    const double dy = ys[i] - s.translation[1];
    const double dz = zs[i] - s.translation[2];
    const double qx = (r[0] * dx + r[3] * dy) + r[6] * dz;
    const double qy = (r[1] * dx + r[4] * dy) + r[7] * dz;
    const double qz = (r[2] * dx + r[5] * dy) + r[8] * dz;
    const double u = s.fx * (qx / qz) + s.cx;
    const double v = s.fy * (qy / qz) + s.cy;
    depths[i] = qz;
    const bool valid = qz > s.depth_epsilon && u >= 0.0 && u < w && v >= 0.0 && v < h;
    cells[i] = valid ? static_cast<std::int32_t>(std::floor(v) * w + std::floor(u)) : -1;
  }
}

double squared_distance_scalar(std::span<const double> a, std::span<const double> b) {
  double lane[4] = {0.0, 0.0, 0.0, 0.0};
  const std::size_t n = a.size();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    for (std::size_t j = 0; j < 4; ++j) {
      const double d = a[i + j] - b[i + j];
      lane[j] = lane[j] + d * d;
    }
  for (std::size_t j = 0; i < n; ++i, ++j) {
    const double d = a[i] - b[i];
    lane[j] = lane[j] + d * d;
  }
  return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

}  // namespace cms::kernels
