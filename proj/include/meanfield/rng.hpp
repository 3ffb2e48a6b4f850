#pragma once

#include <cstdint>

namespace meanfield {

/// SplitMix64 finalizer; a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Key of the Gaussian stream driving one agent in one replication.
std::uint64_t stream_key(std::uint64_t master_seed, std::uint64_t replication,
                         std::uint64_t agent);

/// Counter-based standard-normal stream.
///
/// The n-th raw word is mix64(key + (n + 1) * golden), a pure function of
/// (key, n). Normals are drawn from those words in order with a 128-layer
/// ziggurat, so the whole variate sequence is fixed by the key.
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t key) : key_(key) {}

  std::uint64_t bits(std::uint64_t n) const;

  /// Uniform in (0, 1) from word n.
  double uniform(std::uint64_t n) const;

  double next();

  std::uint64_t key() const { return key_; }
  /// Raw words consumed so far.
  std::uint64_t words_used() const { return counter_; }

 private:
  double tail(bool negative);

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace meanfield
