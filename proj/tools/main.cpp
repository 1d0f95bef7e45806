//
// Project UniMoMo - Copyright 2026 UniMoMo Developers.
// SPDX-License-Identifier: Apache-2.0
//

#include <cstdio>

#include "unimomo/kernels.hpp"

int main(int argc, char** argv) {
  (void)argc;
  (void)argv;
  std::printf("unimomo (kernel backend: %s)\n",
              unimomo::kernels::active().name);
  return 0;
}
