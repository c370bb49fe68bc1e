// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace chpeak {

enum class errc {
  invalid_argument = 1,
  collision_required,
  unsupported_interaction,
  singular_chart,
  event_in_window,
  unknown_label,
  unknown_suite,
  bad_config,
  io_error,
  internal,
};

class error : public std::runtime_error {
 public:
  error(errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& what) { throw error(code, what); }

inline void require(bool cond, errc code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace chpeak
