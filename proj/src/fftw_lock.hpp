#pragma once

#include <mutex>

namespace nlch::detail {

// FFTW planning and plan destruction are not thread-safe; execution is.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace nlch::detail
