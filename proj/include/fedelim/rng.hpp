#pragma once

#include <cstdint>
#include <random>

namespace fedelim {

using Rng = std::mt19937_64;

// Purposes of the independent random substreams drawn from one master seed.
enum class StreamPurpose : std::uint64_t {
  shift = 1,   // per-client objective shifts (index 0)
  noise = 2,   // reward noise of client `index`
  search = 3,  // oracle random search
};

std::uint64_t splitmix64(std::uint64_t x);

// Substream seed = splitmix64 chain over (master, purpose, index). Stable
// across platforms; the engines seeded from it are std::mt19937_64.
std::uint64_t substream_seed(std::uint64_t master, StreamPurpose purpose,
                             std::uint64_t index);

Rng make_stream(std::uint64_t master, StreamPurpose purpose, std::uint64_t index);

// Counter-based uniform in [0,1): a pure function of (seed, counter), so
// parallel loops draw the same numbers as serial ones.
double counter_uniform(std::uint64_t seed, std::uint64_t counter);

}  // namespace fedelim
