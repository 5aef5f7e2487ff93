#pragma once

#include <mutex>

namespace calmap::detail {

/// FFTW plan creation/destruction is not thread-safe; serialize on one lock.
inline std::mutex& fftw_plan_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace calmap::detail
