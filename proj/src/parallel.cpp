#include "ssi/parallel.hpp"

#include <cstdlib>

namespace ssi {

int default_workers() {
  if (const char* env = std::getenv("SSI_WORKERS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace ssi
