#pragma once

#include <cstdint>
#include <random>

namespace phe {

// Identifies one independent random stream. Streams with equal lineage
// produce identical sequences; any differing component gives an unrelated
// stream.
struct Lineage {
  std::uint64_t master = 0;
  std::uint64_t instance = 0;
  std::uint64_t stream = 0;
  std::uint64_t round = 0;

  friend bool operator==(const Lineage&, const Lineage&) = default;
};

// Reserved stream ids. Policies use their index in the experiment's
// policy list; reward streams carry kRewardStreamBit plus the arm index.
inline constexpr std::uint64_t kInstanceStream = 0xFFFF'FFFF'0000'0001ULL;
inline constexpr std::uint64_t kFixtureStream = 0xFFFF'FFFF'0000'0002ULL;
inline constexpr std::uint64_t kRewardStreamBit = 1ULL << 62;

inline constexpr std::uint64_t reward_stream(std::uint64_t arm) {
  return kRewardStreamBit | arm;
}

// 64-bit seed derived from a lineage by chained SplitMix64 finalization.
std::uint64_t lineage_seed(const Lineage& lineage);

class RngStream {
 public:
  using Engine = std::mt19937_64;

  explicit RngStream(const Lineage& lineage);
  explicit RngStream(std::uint64_t seed);

  const Lineage& lineage() const { return lineage_; }

  // Uniform on [0, 1).
  double uniform();
  // Standard normal.
  double normal();
  // Uniform on {0, ..., n - 1}; n must be positive.
  std::uint64_t index(std::uint64_t n);
  bool bernoulli(double p);

  Engine& engine() { return engine_; }

 private:
  Lineage lineage_;
  Engine engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace phe
