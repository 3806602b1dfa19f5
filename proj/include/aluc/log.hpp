// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <spdlog/spdlog.h>

namespace aluc {

/// Shared logger. Level comes from ALUC_LOG_LEVEL (trace, debug, info, warn, error, off);
/// default is warn.
spdlog::logger& logger();

}  // namespace aluc
