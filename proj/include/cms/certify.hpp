#pragma once

// Clopper-Pearson bounds, the standard normal quantile and the motion
// certificates built from them.

#include <cstdint>

#include "cms/counts.hpp"
#include "cms/motion.hpp"

namespace cms {

/// P[Binom(n, p) >= k].
double binom_upper_tail(std::uint64_t k, std::uint64_t n, double p);

/// One-sided Clopper-Pearson lower bound L with P[Binom(n, L) >= k] = alpha.
/// Returns 0 for k = 0.
double binom_lower_bound(std::uint64_t k, std::uint64_t n, double alpha);

/// One-sided Clopper-Pearson upper bound U with P[Binom(n, U) <= k] = alpha.
/// Returns 1 for k = n.
double binom_upper_bound(std::uint64_t k, std::uint64_t n, double alpha);

/// Exact two-sided binomial test of H0: p = 1/2 for k successes out of n.
double binom_two_sided_pvalue(std::uint64_t k, std::uint64_t n);

/// Inverse of the standard normal CDF (Wichura's AS241, PPND16).
double std_normal_quantile(double p);

/// Probabilities are clamped to this range before taking quantiles.
inline constexpr double kQuantileClamp = 1e-15;

/// (sigma/2)(Phi^-1(pA) - Phi^-1(pB)) with clamped arguments.
double one_axis_radius(double sigma, double pA_lower, double pB_upper);

struct Certificate {
  std::uint32_t top_class = 0;
  std::uint32_t runner_up_class = 0;
  double pA_lower = 0.0;
  double pB_upper = 1.0;
  double radius = 0.0;  ///< 0 when abstained
  bool abstained = true;
  MotionAxis axis = MotionAxis::Tz;
  double sigma = 0.0;
  double confidence = 0.0;  ///< 1 - alpha
};

/// Certified radius along one axis. alpha is split evenly between the bound on
/// the top class and the bound on the runner-up.
Certificate certify_one_axis(const SampleCounts& counts, std::uint32_t top, std::uint32_t runner_up,
                             MotionAxis axis, double sigma, double alpha);

/// sqrt(sum (coordinate / sigma)^2) over the motion's coordinates. Rotations
/// must be about spec.fixed_axis (InvalidArgument otherwise); a nonzero
/// coordinate on a zero-sigma axis throws NotCertifiable.
double motion_norm(const MotionParams& motion, const SmoothingSpec& spec);

/// True iff the smoothed prediction provably survives `motion`: the motion
/// norm is strictly below (1/2)(Phi^-1(pA_lower) - Phi^-1(pB_upper)). For
/// single-coordinate motions this is exactly |a| < one_axis_radius(...).
bool certify_motion(const MotionParams& motion, const SmoothingSpec& spec, double pA_lower, double pB_upper);

}  // namespace cms
