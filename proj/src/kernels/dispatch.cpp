#include <cstdlib>
#include <string>

#include "cms/errors.hpp"
#include "cms/kernels.hpp"

namespace cms::kernels {

#if CMS_HAVE_AVX2_KERNELS
void project_points_avx2(const ProjectionSetup&, std::span<const double>, std::span<const double>,
                         std::span<const double>, std::span<std::int32_t>, std::span<double>);
double squared_distance_avx2(std::span<const double> a, std::span<const double> b);
#endif

namespace {

const KernelTable kScalar{Isa::Scalar, &project_points_scalar, &squared_distance_scalar};
#if CMS_HAVE_AVX2_KERNELS
const KernelTable kAvx2{Isa::Avx2, &project_points_avx2, &squared_distance_avx2};
#endif

const KernelTable& select_active() {
  if (const char* env = std::getenv("CMS_SIMD"); env != nullptr && std::string(env) == "scalar") return kScalar;
  if (isa_supported(Isa::Avx2)) return kernels_for(Isa::Avx2);
  return kScalar;
}

}  // namespace

std::string_view to_string(Isa isa) { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

bool isa_supported(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return true;
    case Isa::Avx2:
#if CMS_HAVE_AVX2_KERNELS
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& kernels_for(Isa isa) {
  if (!isa_supported(isa)) throw InvalidArgument("kernel ISA '" + std::string(to_string(isa)) + "' not available");
#if CMS_HAVE_AVX2_KERNELS
  if (isa == Isa::Avx2) return kAvx2;
#endif
  return kScalar;
}

const KernelTable& active() {
  static const KernelTable& table = select_active();
  return table;
}

}  // namespace cms::kernels
