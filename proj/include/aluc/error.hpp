// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace aluc {

enum class Errc {
  invalid_argument,
  io,
  format,
  size_mismatch,
  non_finite,
  degenerate,
  not_converged,
  untrainable,
  unknown_session,
  unknown_raster,
  stale_query,
  duplicate,
  wrong_phase,
  version_mismatch,
  checksum,
};

const char* errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace aluc
