#pragma once

#include <cstdint>

#include "phe/rng.hpp"

namespace phe {

// Number of Bernoulli(1/2) pseudo-rewards injected per observed reward.
// Integral scales produce a * pulls pseudo-rewards; anything else rounds
// a * pulls up.
class PerturbationConfig {
 public:
  // Throws InvalidParameter unless a >= 0 and finite.
  explicit PerturbationConfig(double a);

  double a() const { return a_; }
  bool integral() const { return integral_; }

  // Pseudo-reward count for an arm pulled `pulls` times.
  std::uint64_t pseudo_count(std::uint64_t pulls) const;

 private:
  double a_;
  bool integral_;
};

// Exact draw from B(n, 1/2). Inversion for n < kInversionLimit, otherwise
// rejection from a Gaussian envelope; expected cost is bounded in n.
std::uint64_t sample_binomial(std::uint64_t n, RngStream& rng);

inline constexpr std::uint64_t kInversionLimit = 64;

// Sum U of the pseudo-rewards of an arm pulled `pulls` times.
std::uint64_t pseudo_reward_count(const PerturbationConfig& cfg,
                                  std::uint64_t pulls, RngStream& rng);

namespace detail {
// Log-envelope used by the rejection branch, exposed for testing. For
// every integer k in [0, n] and every y with |y - k| <= 1/2,
// log B(k; n, 1/2) <= envelope_log_density(n, y).
double binomial_envelope_log_density(std::uint64_t n, double y);
double binomial_log_pmf_half(std::uint64_t n, std::uint64_t k);
}  // namespace detail

}  // namespace phe
