#pragma once

#include <cstdint>

namespace cohimpact {

// Worker count: COHIMPACT_THREADS if set and positive, else the OpenMP default.
int worker_count();

// SplitMix64 step; chunk seeds are splitmix64(master + chunk + 1).
std::uint64_t splitmix64(std::uint64_t x);
inline std::uint64_t chunk_seed(std::uint64_t master, std::uint64_t chunk) {
  return splitmix64(master + chunk + 1);
}

}  // namespace cohimpact
