#pragma once

// Data-parallel inner loops. Every kernel has a scalar reference and, where the
// CPU supports it, an AVX2 variant selected at runtime. Variants evaluate the
// same IEEE operations in the same order, so their outputs are bit-identical.

#include <array>
#include <cstdint>
#include <span>
#include <string_view>

namespace cms::kernels {

enum class Isa { Scalar, Avx2 };

std::string_view to_string(Isa isa);

/// Pose and camera for one projection pass. `rotation` is row-major R; points
/// are mapped to R^T (P - t).
struct ProjectionSetup {
  std::array<double, 9> rotation{};
  std::array<double, 3> translation{};
  double fx = 1.0, fy = 1.0, cx = 0.0, cy = 0.0;
  std::int32_t width = 1, height = 1;
  double depth_epsilon = 1e-6;
};

/// For each point writes its flat pixel index row * width + col (or -1 when
/// the point is behind the near plane or off the grid) and its depth.
using ProjectFn = void (*)(const ProjectionSetup&, std::span<const double> xs, std::span<const double> ys,
                           std::span<const double> zs, std::span<std::int32_t> cells, std::span<double> depths);

/// Squared Euclidean distance accumulated in four interleaved partial sums
/// (lane j takes indices i with i % 4 == j), combined as (s0 + s1) + (s2 + s3).
using SquaredDistanceFn = double (*)(std::span<const double> a, std::span<const double> b);

struct KernelTable {
  Isa isa;
  ProjectFn project;
  SquaredDistanceFn squared_distance;
};

void project_points_scalar(const ProjectionSetup&, std::span<const double>, std::span<const double>,
                           std::span<const double>, std::span<std::int32_t>, std::span<double>);
double squared_distance_scalar(std::span<const double> a, std::span<const double> b);

bool isa_supported(Isa isa);

/// Table for a specific ISA; throws InvalidArgument if the CPU or build lacks it.
const KernelTable& kernels_for(Isa isa);

/// Best supported ISA, unless the CMS_SIMD environment variable is "scalar".
const KernelTable& active();

}  // namespace cms::kernels
