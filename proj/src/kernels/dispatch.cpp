// SPDX-License-Identifier: Apache-2.0
#include <cstdlib>
#include <string>

#include "advf/kernels.hpp"

namespace advf::kernels {

bool avx2_available() {
#if defined(__x86_64__) || defined(_M_X64)
  if (avx2::table<float>() == nullptr) return false;
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend active_backend() {
  static const Backend chosen = [] {
    if (const char* env = std::getenv("ADVF_KERNELS")) {
      const std::string v(env);
      if (v == "scalar") return Backend::kScalar;
      if (v == "avx2" && avx2_available()) return Backend::kAvx2;
    }
    return avx2_available() ? Backend::kAvx2 : Backend::kScalar;
  }();
  return chosen;
}

std::string_view backend_name(Backend b) {
  switch (b) {
    case Backend::kScalar:
      return "scalar";
    case Backend::kAvx2:
      return "avx2";
  }
  return "unknown";
}

template <typename T>
const Table<T>& active() {
  static const Table<T>& t = active_backend() == Backend::kAvx2
                                 ? *avx2::table<T>()
                                 : scalar::table<T>();
  return t;
}

template const Table<float>& active<float>();
template const Table<double>& active<double>();

}  // namespace advf::kernels
