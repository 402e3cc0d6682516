#include "fedelim/rng.hpp"

namespace fedelim {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t substream_seed(std::uint64_t master, StreamPurpose purpose,
                             std::uint64_t index) {
  std::uint64_t s = splitmix64(master);
  s = splitmix64(s ^ static_cast<std::uint64_t>(purpose));
  return splitmix64(s ^ (index * 0xD1B54A32D192ED03ULL));
}

Rng make_stream(std::uint64_t master, StreamPurpose purpose, std::uint64_t index) {
  return Rng(substream_seed(master, purpose, index));
}

double counter_uniform(std::uint64_t seed, std::uint64_t counter) {
  const std::uint64_t bits = splitmix64(seed ^ splitmix64(counter));
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

}  // namespace fedelim
