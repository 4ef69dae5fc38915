#pragma once

#include <cstdlib>
#include <thread>

namespace mista {

// worker count: MISTA_THREADS env var, else hardware concurrency
inline int default_thread_count() {
  if (const char* env = std::getenv("MISTA_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? static_cast<int>(hc) : 1;
}

}  // namespace mista
