#include "okannet/parallel.hpp"

#include <cstdlib>
#include <string>

namespace okannet {

namespace detail {

int resolve_worker_threads() {
  if (deterministic_mode()) return 1;
  int n = static_cast<int>(std::thread::hardware_concurrency());
  if (n < 1) n = 1;
  if (n > 64) n = 64;
  if (const char* env = std::getenv("OKANNET_THREADS")) {
    try {
      const int cap = std::stoi(env);
      if (cap >= 1 && cap < n) n = cap;
    } catch (...) {
      // unparsable value: keep the default
    }
  }
  return n;
}

}  // namespace detail

bool deterministic_mode() {
  static const bool v = [] {
    const char* env = std::getenv("OKANNET_DETERMINISTIC");
    return env && std::string(env) == "1";
  }();
  return v;
}

int worker_threads() {
  static const int v = detail::resolve_worker_threads();
  return v;
}

}  // namespace okannet
