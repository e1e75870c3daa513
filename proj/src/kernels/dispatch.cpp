#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "ecgfwd/kernels.hpp"

namespace ecgfwd::kernels {

#if defined(ECGFWD_BUILD_AVX2)
const Table& avx2_table_impl();
#endif

std::string_view to_string(Level level) {
  switch (level) {
    case Level::Scalar: return "scalar";
    case Level::Avx2: return "avx2";
  }
  return "unknown";
}

const Table* avx2_table() {
#if defined(ECGFWD_BUILD_AVX2)
  return &avx2_table_impl();
#else
  return nullptr;
#endif
}

bool cpu_has_avx2() {
#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Level detect_level() {
  const bool avx2_ok = avx2_table() != nullptr && cpu_has_avx2();
  if (const char* env = std::getenv("ECGFWD_KERNELS")) {
    const std::string want(env);
    if (want == "scalar") return Level::Scalar;
    if (want == "avx2" && avx2_ok) return Level::Avx2;
  }
  return avx2_ok ? Level::Avx2 : Level::Scalar;
}

namespace {

std::atomic<const Table*> g_table{nullptr};
std::atomic<Level> g_level{Level::Scalar};

const Table* table_for(Level level) {
  return level == Level::Avx2 ? avx2_table() : &scalar_table();
}

}  // namespace

const Table& active() {
  const Table* t = g_table.load(std::memory_order_acquire);
  if (t == nullptr) {
    const Level level = detect_level();
    g_level.store(level);
    t = table_for(level);
    g_table.store(t, std::memory_order_release);
  }
  return *t;
}

Level active_level() {
  active();
  return g_level.load();
}

void set_level(Level level) {
  if (level == Level::Avx2 && !(avx2_table() != nullptr && cpu_has_avx2())) {
    throw std::runtime_error("AVX2 kernels are not available on this build or CPU");
  }
  g_level.store(level);
  g_table.store(table_for(level), std::memory_order_release);
}

}  // namespace ecgfwd::kernels
