// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include <cstdlib>

#include "aluc/log.hpp"

int main(int argc, char** argv) {
  // Partial-batch and small-fold warnings are expected here; keep the report readable.
  if (!std::getenv("ALUC_LOG_LEVEL")) aluc::logger().set_level(spdlog::level::err);
  doctest::Context ctx(argc, argv);
  return ctx.run();
}
