#include <cstdlib>
#include <string_view>

#include "gridsettle/kernels.hpp"

namespace gridsettle::kernels {

std::string_view isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

const KernelTable& active() {
  static const KernelTable& chosen = [] () -> const KernelTable& {
    const char* forced = std::getenv("GRIDSETTLE_SIMD");
    if (forced && std::string_view(forced) == "scalar") return scalar_table();
    if (const auto* t = avx2_table()) return *t;
    return scalar_table();
  }();
  return chosen;
}

}  // namespace gridsettle::kernels
