//
// Project UniMoMo - Copyright 2026 UniMoMo Developers.
// SPDX-License-Identifier: Apache-2.0
//

#include <cstdlib>
#include <stdexcept>
#include <string>
#include <vector>

#include "./backends.hpp"
#include "unimomo/kernels.hpp"

namespace unimomo::kernels {
namespace {

bool cpu_supports_avx2() {
#if defined(__x86_64__) || defined(_M_X64) || defined(__i386__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

// NEON is mandatory on AArch64, so compiled-in implies runnable.
bool cpu_supports_neon() {
#if defined(__aarch64__)
  return true;
#else
  return false;
#endif
}

const Backend* find_backend(const std::string& name) {
  if (name == "scalar")
    return &scalar_backend();
  if (name == "avx2" && avx2_backend() != nullptr && cpu_supports_avx2())
    return avx2_backend();
  if (name == "neon" && neon_backend() != nullptr && cpu_supports_neon())
    return neon_backend();
  return nullptr;
}

const Backend* pick_default() {
  if (const char* env = std::getenv("UNIMOMO_KERNELS")) {
    if (const Backend* b = find_backend(env))
      return b;
    // An unusable request falls back to scalar rather than aborting startup.
    return &scalar_backend();
  }
  if (const Backend* b = find_backend("avx2"))
    return b;
  if (const Backend* b = find_backend("neon"))
    return b;
  return &scalar_backend();
}

const Backend*& active_slot() {
  static const Backend* slot = pick_default();
  return slot;
}

}  // namespace

const Backend& active() { return *active_slot(); }

std::vector<std::string> available_backends() {
  std::vector<std::string> names = {"scalar"};
  if (avx2_backend() != nullptr && cpu_supports_avx2())
    names.push_back("avx2");
  if (neon_backend() != nullptr && cpu_supports_neon())
    names.push_back("neon");
  return names;
}

void force_backend(const std::string& name) {
  const Backend* b = find_backend(name);
  if (b == nullptr)
    throw std::invalid_argument("kernel backend unavailable: " + name);
  active_slot() = b;
}

}  // namespace unimomo::kernels
