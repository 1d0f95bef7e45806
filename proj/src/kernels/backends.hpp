//
// Project UniMoMo - Copyright 2026 UniMoMo Developers.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef UNIMOMO_SRC_KERNELS_BACKENDS_HPP_
#define UNIMOMO_SRC_KERNELS_BACKENDS_HPP_

#include "unimomo/kernels.hpp"

namespace unimomo::kernels {

// Each returns nullptr when the backend was compiled out for this target.
// Whether the host CPU can actually run it is checked in dispatch.cpp.
const Backend* avx2_backend();
const Backend* neon_backend();

}  // namespace unimomo::kernels

#endif  // UNIMOMO_SRC_KERNELS_BACKENDS_HPP_
