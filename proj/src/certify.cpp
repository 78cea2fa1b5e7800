#include "cms/certify.hpp"

#include <algorithm>
#include <array>
#include <boost/math/special_functions/beta.hpp>
#include <cmath>

#include "cms/errors.hpp"

namespace cms {

SampleCounts& SampleCounts::operator+=(const SampleCounts& other) {
  if (counts.size() != other.counts.size()) throw InvalidArgument("cannot merge counts over different label sets");
  for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
  n += other.n;
  return *this;
}

std::uint32_t SampleCounts::top() const {
  if (counts.empty()) throw InvalidArgument("counts over zero classes");
  std::uint32_t best = 0;
  for (std::uint32_t i = 1; i < counts.size(); ++i)
    if (counts[i] > counts[best]) best = i;
  return best;
}

std::uint32_t SampleCounts::runner_up() const {
  if (counts.size() < 2) throw InvalidArgument("runner-up needs at least two classes");
  const std::uint32_t t = top();
  std::uint32_t best = t == 0 ? 1 : 0;
  for (std::uint32_t i = 0; i < counts.size(); ++i)
    if (i != t && counts[i] > counts[best]) best = i;
  return best;
}

namespace {

void check_binom_args(std::uint64_t k, std::uint64_t n, double alpha) {
  if (n == 0) throw InvalidArgument("binomial bound needs n >= 1");
  if (k > n) throw InvalidArgument("binomial bound needs k <= n");
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("binomial bound needs 0 < alpha < 1");
}

// P[Binom(n, p) <= k].
double binom_cdf(std::uint64_t k, std::uint64_t n, double p) {
  if (k >= n) return 1.0;
  if (p <= 0.0) return 1.0;
  if (p >= 1.0) return 0.0;
  return boost::math::ibetac(static_cast<double>(k + 1), static_cast<double>(n - k), p);
}

// Bisection on a monotone function of p in [0, 1] until the bracket cannot
// shrink further in double precision.
template <class F>
std::array<double, 2> bisect(F&& below_target) {
  double lo = 0.0;
  double hi = 1.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (below_target(mid) ? lo : hi) = mid;
  }
  return {lo, hi};
}

}  // namespace

double binom_upper_tail(std::uint64_t k, std::uint64_t n, double p) {
  if (k == 0) return 1.0;
  if (k > n) return 0.0;
  if (p <= 0.0) return 0.0;
  if (p >= 1.0) return 1.0;
  return boost::math::ibeta(static_cast<double>(k), static_cast<double>(n - k + 1), p);
}

double binom_lower_bound(std::uint64_t k, std::uint64_t n, double alpha) {
  check_binom_args(k, n, alpha);
  if (k == 0) return 0.0;
  // The upper tail grows with p; keep the largest p whose tail is <= alpha.
  return bisect([&](double p) { return binom_upper_tail(k, n, p) <= alpha; })[0];
}

double binom_upper_bound(std::uint64_t k, std::uint64_t n, double alpha) {
  check_binom_args(k, n, alpha);
  if (k == n) return 1.0;
  // The CDF shrinks with p; keep the smallest p whose CDF is <= alpha.
  return bisect([&](double p) { return binom_cdf(k, n, p) > alpha; })[1];
}

double binom_two_sided_pvalue(std::uint64_t k, std::uint64_t n) {
  if (n == 0) throw InvalidArgument("binomial test needs n >= 1");
  if (k > n) throw InvalidArgument("binomial test needs k <= n");
  const std::uint64_t extreme = std::max(k, n - k);
  return std::min(1.0, 2.0 * binom_upper_tail(extreme, n, 0.5));
}

double std_normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw InvalidArgument("normal quantile needs 0 < p < 1");
  const double q = p - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r + 6.7265770927008700853e+4) * r +
                4.5921953931549871457e+4) * r + 1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r +
             1.3314166789178437745e+2) * r + 3.3871328727963666080e+0) /
           (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r + 3.9307895800092710610e+4) * r +
                2.1213794301586595867e+4) * r + 5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
             4.2313330701600911252e+1) * r + 1.0);
  }
  double r = std::sqrt(-std::log(q < 0.0 ? p : 1.0 - p));
  double value;
  if (r <= 5.0) {
    r -= 1.6;
    value = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r + 2.41780725177450611770e-1) * r +
                1.27045825245236838258e+0) * r + 3.64784832476320460504e+0) * r + 5.76949722146069140550e+0) * r +
              4.63033784615654529590e+0) * r + 1.42343711074968357734e+0) /
            (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r + 1.51986665636164571966e-2) * r +
                 1.48103976427480074590e-1) * r + 6.89767334985100004550e-1) * r + 1.67638483018380384940e+0) * r +
              2.05319162663775882187e+0) * r + 1.0);
  } else {
    r -= 5.0;
    value = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r + 1.24266094738807843860e-3) * r +
                2.65321895265761230930e-2) * r + 2.96560571828504891230e-1) * r + 1.78482653991729133580e+0) * r +
              5.46378491116411436990e+0) * r + 6.65790464350110377720e+0) /
            (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r + 1.84631831751005468180e-5) * r +
                 7.86869131145613259100e-4) * r + 1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
              5.99832206555887937690e-1) * r + 1.0);
  }
  return q < 0.0 ? -value : value;
}

double one_axis_radius(double sigma, double pA_lower, double pB_upper) {
  const double a = std::clamp(pA_lower, kQuantileClamp, 1.0 - kQuantileClamp);
  const double b = std::clamp(pB_upper, kQuantileClamp, 1.0 - kQuantileClamp);
  return 0.5 * sigma * (std_normal_quantile(a) - std_normal_quantile(b));
}

Certificate certify_one_axis(const SampleCounts& counts, std::uint32_t top, std::uint32_t runner_up,
                             MotionAxis axis, double sigma, double alpha) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw InvalidArgument("certify_one_axis: sigma must be positive");
  if (counts.n == 0) throw InvalidArgument("certify_one_axis: no samples");
  if (top == runner_up) throw InvalidArgument("certify_one_axis: top and runner-up classes coincide");
  Certificate c;
  c.top_class = top;
  c.runner_up_class = runner_up;
  c.axis = axis;
  c.sigma = sigma;
  c.confidence = 1.0 - alpha;
  c.pA_lower = binom_lower_bound(counts[top], counts.n, alpha / 2);
  c.pB_upper = binom_upper_bound(counts[runner_up], counts.n, alpha / 2);
  c.abstained = c.pA_lower <= c.pB_upper;
  c.radius = c.abstained ? 0.0 : one_axis_radius(sigma, c.pA_lower, c.pB_upper);
  return c;
}

namespace {

struct Coordinates {
  std::array<double, 4> value;
  std::array<double, 4> sigma;
};

Coordinates coordinates(const MotionParams& motion, const SmoothingSpec& spec) {
  double theta = 0.0;
  const double angle = norm(motion.rotvec);
  if (angle > 0.0) {
    if (!spec.fixed_axis) throw InvalidArgument("certify_motion: rotation without a fixed smoothing axis");
    const Vec3 axis = (1.0 / norm(*spec.fixed_axis)) * *spec.fixed_axis;
    theta = dot(motion.rotvec, axis);
    if (norm(motion.rotvec - theta * axis) > 1e-12 * std::max(1.0, angle))
      throw InvalidArgument("certify_motion: rotation axis differs from the smoothing axis");
  }
  const Vec3& t = motion.translation;
  Coordinates c{{t[0], t[1], t[2], theta}, {spec.sigma_x, spec.sigma_y, spec.sigma_z, spec.sigma_theta}};
  for (int i = 0; i < 4; ++i)
    if (c.value[i] != 0.0 && c.sigma[i] == 0.0)
      throw NotCertifiable("certify_motion: motion moves a coordinate that carries no smoothing noise");
  return c;
}

}  // namespace

double motion_norm(const MotionParams& motion, const SmoothingSpec& spec) {
  const Coordinates c = coordinates(motion, spec);
  double sum = 0.0;
  for (int i = 0; i < 4; ++i)
    if (c.value[i] != 0.0) {
      const double z = c.value[i] / c.sigma[i];
      sum += z * z;
    }
  return std::sqrt(sum);
}

bool certify_motion(const MotionParams& motion, const SmoothingSpec& spec, double pA_lower, double pB_upper) {
  const Coordinates c = coordinates(motion, spec);
  int active = -1;
  int nonzero = 0;
  for (int i = 0; i < 4; ++i)
    if (c.value[i] != 0.0) {
      active = i;
      ++nonzero;
    }
  if (!(pA_lower > pB_upper)) return false;
  if (nonzero == 0) return true;
  // Same expression as certify_one_axis so the two never disagree by rounding.
  if (nonzero == 1) return std::abs(c.value[active]) < one_axis_radius(c.sigma[active], pA_lower, pB_upper);
  return motion_norm(motion, spec) < one_axis_radius(1.0, pA_lower, pB_upper);
}

}  // namespace cms
