#include <atomic>
#include <cstdlib>
#include <string>

#include "kernels_impl.hpp"

namespace misi::kernels {
namespace {

bool cpu_has_avx2_fma() {
#if defined(MISI_WITH_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* pick_default() {
  const KernelTable* fast = avx2_table();
  if (const char* env = std::getenv("MISI_SIMD")) {
    const std::string want(env);
    if (want == "scalar") return &scalar_table();
    if (want == "avx2" && fast) return fast;
  }
  return fast ? fast : &scalar_table();
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table{pick_default()};
  return table;
}

}  // namespace

const KernelTable& scalar_table() { return detail::kScalarTable; }

const KernelTable* avx2_table() {
#if defined(MISI_WITH_AVX2)
  static const bool ok = cpu_has_avx2_fma();
  return ok ? &detail::kAvx2Table : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active() { return *current().load(std::memory_order_relaxed); }

bool select(std::string_view name) {
  if (name == "scalar") {
    current().store(&scalar_table());
    return true;
  }
  if (name == "avx2") {
    if (const KernelTable* t = avx2_table()) {
      current().store(t);
      return true;
    }
    return false;
  }
  if (name == "auto") {
    current().store(avx2_table() ? avx2_table() : &scalar_table());
    return true;
  }
  return false;
}

}  // namespace misi::kernels
