#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace rgf {

using Engine = std::mt19937_64;

// Stream tags keep the substreams for different purposes disjoint.
enum class StreamTag : std::uint64_t {
  kDirection = 1,
  kInitialState = 2,
  kCoefficients = 3,
  kGraph = 4,
  kSmoothing = 5,
  kTestPoints = 6,
};

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Order-sensitive hash of a master seed and a path of indices.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = mix64(master);
  for (std::uint64_t p : path) h = mix64(h ^ mix64(p + 0x632be59bd9b4e019ULL));
  return h;
}

/// Per-agent, per-time substreams derived from one master seed.
/// engine(agent, t) depends only on (master, tag, agent, t), never on the
/// order in which substreams are requested.
class RngStream {
 public:
  explicit RngStream(std::uint64_t master_seed) : master_(master_seed) {}

  std::uint64_t master_seed() const { return master_; }

  Engine engine(StreamTag tag, std::uint64_t agent, std::uint64_t t) const {
    return Engine(derive_seed(master_, {static_cast<std::uint64_t>(tag), agent, t}));
  }

  Engine engine(StreamTag tag) const {
    return Engine(derive_seed(master_, {static_cast<std::uint64_t>(tag)}));
  }

 private:
  std::uint64_t master_;
};

}  // namespace rgf
