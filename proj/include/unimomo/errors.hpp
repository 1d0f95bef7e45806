//
// Project UniMoMo - Copyright 2026 UniMoMo Developers.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef UNIMOMO_ERRORS_HPP_
#define UNIMOMO_ERRORS_HPP_

#include <stdexcept>

namespace unimomo {

// Bad configuration (unknown keys, invalid hyperparameters, missing
// checkpoints at the CLI level). CLI exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad input data (malformed files, dangling indices, missing chains,
// corrupted checkpoints). CLI exit code 3.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Non-finite values encountered where finite numerics are required
// (network inputs/outputs, losses). CLI exit code 1.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace unimomo

#endif  // UNIMOMO_ERRORS_HPP_
