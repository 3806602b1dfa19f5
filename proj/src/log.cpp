// SPDX-License-Identifier: Apache-2.0
#include "aluc/log.hpp"

#include <cstdlib>

#include <spdlog/sinks/stdout_color_sinks.h>

#include "aluc/error.hpp"

namespace aluc {

spdlog::logger& logger() {
  static std::shared_ptr<spdlog::logger> instance = [] {
    auto l = spdlog::stderr_color_mt("aluc");
    const char* level = std::getenv("ALUC_LOG_LEVEL");
    l->set_level(level ? spdlog::level::from_str(level) : spdlog::level::warn);
    return l;
  }();
  return *instance;
}

const char* errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_argument: return "invalid_argument";
    case Errc::io: return "io";
    case Errc::format: return "format";
    case Errc::size_mismatch: return "size_mismatch";
    case Errc::non_finite: return "non_finite";
    case Errc::degenerate: return "degenerate";
    case Errc::not_converged: return "not_converged";
    case Errc::untrainable: return "untrainable";
    case Errc::unknown_session: return "unknown_session";
    case Errc::unknown_raster: return "unknown_raster";
    case Errc::stale_query: return "stale_query";
    case Errc::duplicate: return "duplicate";
    case Errc::wrong_phase: return "wrong_phase";
    case Errc::version_mismatch: return "version_mismatch";
    case Errc::checksum: return "checksum";
  }
  return "unknown";
}

}  // namespace aluc
