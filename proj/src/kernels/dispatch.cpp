#include <cstdlib>
#include <string_view>

#include "fkpde/kernels.hpp"

namespace fkpde::kernels {

#if defined(FKPDE_HAVE_AVX2)
namespace avx2 {
const Table& table();
}
#endif

const Table* avx2_table() {
#if defined(FKPDE_HAVE_AVX2)
    static const bool ok = __builtin_cpu_supports("avx2");
    return ok ? &avx2::table() : nullptr;
#else
    return nullptr;
#endif
}

const Table& active() {
    static const Table& chosen = [&]() -> const Table& {
        const char* env = std::getenv("FKPDE_KERNELS");
        const std::string_view want = env ? env : "";
        if (want == "scalar") return scalar_table();
        if (const Table* t = avx2_table()) return *t;
        return scalar_table();
    }();
    return chosen;
}

}  // namespace fkpde::kernels
