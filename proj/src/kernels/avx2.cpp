// Compiled with -mavx2 (and without FMA); only called after a runtime CPU check.
#include <immintrin.h>

#include "cms/kernels.hpp"

namespace cms::kernels {

void project_points_avx2(const ProjectionSetup& s, std::span<const double> xs, std::span<const double> ys,
                         std::span<const double> zs, std::span<std::int32_t> cells, std::span<double> depths) {
  const auto& r = s.rotation;
  const __m256d tx = _mm256_set1_pd(s.translation[0]);
  const __m256d ty = _mm256_set1_pd(s.translation[1]);
  const __m256d tz = _mm256_set1_pd(s.translation[2]);
  const __m256d r0 = _mm256_set1_pd(r[0]), r1 = _mm256_set1_pd(r[1]), r2 = _mm256_set1_pd(r[2]);
  const __m256d r3 = _mm256_set1_pd(r[3]), r4 = _mm256_set1_pd(r[4]), r5 = _mm256_set1_pd(r[5]);
  const __m256d r6 = _mm256_set1_pd(r[6]), r7 = _mm256_set1_pd(r[7]), r8 = _mm256_set1_pd(r[8]);
  const __m256d fx = _mm256_set1_pd(s.fx), fy = _mm256_set1_pd(s.fy);
  const __m256d cx = _mm256_set1_pd(s.cx), cy = _mm256_set1_pd(s.cy);
  const __m256d w = _mm256_set1_pd(static_cast<double>(s.width));
  const __m256d h = _mm256_set1_pd(static_cast<double>(s.height));
  const __m256d eps = _mm256_set1_pd(s.depth_epsilon);
  const __m256d zero = _mm256_setzero_pd();
  const __m256d invalid = _mm256_set1_pd(-1.0);

  const std::size_t n = xs.size();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d dx = _mm256_sub_pd(_mm256_loadu_pd(xs.data() + i), tx);
    const __m256d dy = _mm256_sub_pd(_mm256_loadu_pd(ys.data() + i), ty);
    const __m256d dz = _mm256_sub_pd(_mm256_loadu_pd(zs.data() + i), tz);
    const __m256d qx = _mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(r0, dx), _mm256_mul_pd(r3, dy)), _mm256_mul_pd(r6, dz));
    const __m256d qy = _mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(r1, dx), _mm256_mul_pd(r4, dy)), _mm256_mul_pd(r7, dz));
    const __m256d qz = _mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(r2, dx), _mm256_mul_pd(r5, dy)), _mm256_mul_pd(r8, dz));
    const __m256d u = _mm256_add_pd(_mm256_mul_pd(fx, _mm256_div_pd(qx, qz)), cx);
    const __m256d v = _mm256_add_pd(_mm256_mul_pd(fy, _mm256_div_pd(qy, qz)), cy);
    _mm256_storeu_pd(depths.data() + i, qz);

    __m256d valid = _mm256_cmp_pd(qz, eps, _CMP_GT_OQ);
    valid = _mm256_and_pd(valid, _mm256_cmp_pd(u, zero, _CMP_GE_OQ));
    valid = _mm256_and_pd(valid, _mm256_cmp_pd(u, w, _CMP_LT_OQ));
    valid = _mm256_and_pd(valid, _mm256_cmp_pd(v, zero, _CMP_GE_OQ));
    valid = _mm256_and_pd(valid, _mm256_cmp_pd(v, h, _CMP_LT_OQ));

    const __m256d cell = _mm256_add_pd(_mm256_mul_pd(_mm256_floor_pd(v), w), _mm256_floor_pd(u));
    const __m256d chosen = _mm256_blendv_pd(invalid, cell, valid);
    _mm_storeu_si128(reinterpret_cast<__m128i*>(cells.data() + i), _mm256_cvttpd_epi32(chosen));
  }
  if (i < n)
    project_points_scalar(s, xs.subspan(i), ys.subspan(i), zs.subspan(i), cells.subspan(i), depths.subspan(i));
}

double squared_distance_avx2(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size();
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a.data() + i), _mm256_loadu_pd(b.data() + i));
    acc = _mm256_add_pd(acc, _mm256_mul_pd(d, d));
  }
  alignas(32) double lane[4];
  _mm256_store_pd(lane, acc);
  for (std::size_t j = 0; i < n; ++i, ++j) {
    const double d = a[i] - b[i];
    lane[j] = lane[j] + d * d;
  }
  return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

}  // namespace cms::kernels
