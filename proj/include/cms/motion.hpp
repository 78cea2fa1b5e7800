#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cms/geometry.hpp"

namespace cms {

enum class MotionAxis { Tx, Ty, Tz, Rx, Ry, Rz };

inline constexpr MotionAxis kAllAxes[] = {MotionAxis::Tx, MotionAxis::Ty, MotionAxis::Tz,
                                          MotionAxis::Rx, MotionAxis::Ry, MotionAxis::Rz};

std::string_view to_string(MotionAxis axis);
/// Accepts "Tx".."Rz" case-insensitively; throws InvalidArgument otherwise.
MotionAxis parse_axis(std::string_view name);
bool is_rotation(MotionAxis axis);
/// Unit vector of the axis in the camera frame.
Vec3 axis_unit(MotionAxis axis);

/// Standard deviations of the Gaussian smoothing measure. A zero entry means
/// that coordinate is never perturbed.
struct SmoothingSpec {
  double sigma_x = 0.0;      ///< meters
  double sigma_y = 0.0;      ///< meters
  double sigma_z = 0.0;      ///< meters
  double sigma_theta = 0.0;  ///< radians, about fixed_axis
  std::optional<Vec3> fixed_axis;

  /// Single-axis smoothing with standard deviation `sigma` along `axis`.
  static SmoothingSpec one_axis(MotionAxis axis, double sigma);

  void validate() const;
  bool is_zero() const { return sigma_x == 0 && sigma_y == 0 && sigma_z == 0 && sigma_theta == 0; }
  /// Sigma that applies to motions along `axis` (sigma_theta for rotation axes
  /// that match fixed_axis, 0 otherwise).
  double sigma_for(MotionAxis axis) const;
};

struct SeedSpec {
  std::uint64_t master_seed = 0;
  std::uint64_t stream_id = 0;
};

/// gamma_{a1}(a2): the motion a2 applied after a1. R12 = R1 R2, t12 = R1 t2 + t1.
MotionParams compose(const MotionParams& first, const MotionParams& second);

/// Inverse motion: compose(m, inverse(m)) is the identity.
MotionParams inverse(const MotionParams& motion);

/// Motion with a single nonzero coordinate.
MotionParams axis_motion(MotionAxis axis, double value);

/// Signed coordinate of a single-axis motion along `axis`.
double axis_value(const MotionParams& motion, MotionAxis axis);

/// Deterministic Gaussian motion for sample `index`.
MotionParams sample_gaussian(const SmoothingSpec& spec, const SeedSpec& seed, std::uint64_t index);

/// k motions evenly spaced over [-radius, radius], endpoints included (k = 1
/// gives the zero motion).
std::vector<MotionParams> sample_uniform_grid(MotionAxis axis, double radius, std::size_t k);

/// k motions drawn uniformly from [-radius, radius].
std::vector<MotionParams> sample_uniform_random(MotionAxis axis, double radius, std::size_t k,
                                                const SeedSpec& seed);

}  // namespace cms
