#pragma once

#include <cstdint>
#include <random>

namespace gossa {

/// SplitMix64 finalizer. Used to derive statistically independent seeds from
/// a root seed; also the reference implementation documented in the config
/// reference (README), so results stay reproducible across versions.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Channels carve independent streams out of one (root, replica) pair.
enum class StreamChannel : std::uint64_t {
  Init = 0,       // initial agent states
  Trajectory = 1, // observation and gossip draws inside one run
  Layout = 2,     // sensor layout / geometric graph points
  Aux = 3,        // anything else (test utilities)
};

/// Deterministic substream seed: seed = sm64(sm64(root ^ sm64(replica+1)) ^ sm64(channel+1)).
inline std::uint64_t substream_seed(std::uint64_t root, std::uint64_t replica,
                                    StreamChannel channel) {
  std::uint64_t s = splitmix64(root ^ splitmix64(replica + 1));
  return splitmix64(s ^ splitmix64(static_cast<std::uint64_t>(channel) + 1));
}

inline std::mt19937_64 make_stream(std::uint64_t root, std::uint64_t replica,
                                   StreamChannel channel) {
  return std::mt19937_64(substream_seed(root, replica, channel));
}

}  // namespace gossa
