#include "phe/perturbation.hpp"

#include <bit>
#include <cmath>

#include "phe/error.hpp"

namespace phe {
namespace {

double log_gamma(double x) {
  int sign = 0;
  return ::lgamma_r(x, &sign);
}

// Squared scale of the Gaussian envelope: twice the binomial variance plus
// one, wide enough to dominate the B(n, 1/2) pmf on whole unit cells.
double envelope_variance(std::uint64_t n) { return 0.5 * static_cast<double>(n) + 1.0; }

constexpr double kEnvelopeMargin = 0.5;

}  // namespace

PerturbationConfig::PerturbationConfig(double a) : a_(a) {
  if (!(a >= 0.0) || !std::isfinite(a))
    throw InvalidParameter("perturbation scale must be non-negative and finite");
  integral_ = std::floor(a) == a;
}

std::uint64_t PerturbationConfig::pseudo_count(std::uint64_t pulls) const {
  if (integral_) return static_cast<std::uint64_t>(a_) * pulls;
  return static_cast<std::uint64_t>(std::ceil(a_ * static_cast<double>(pulls)));
}

namespace detail {

double binomial_log_pmf_half(std::uint64_t n, std::uint64_t k) {
  const double nn = static_cast<double>(n);
  const double kk = static_cast<double>(k);
  return log_gamma(nn + 1.0) - log_gamma(kk + 1.0) - log_gamma(nn - kk + 1.0) -
         nn * std::log(2.0);
}

double binomial_envelope_log_density(std::uint64_t n, double y) {
  const double center = 0.5 * static_cast<double>(n);
  const double dev = y - center;
  return binomial_log_pmf_half(n, n / 2) + kEnvelopeMargin -
         dev * dev / (2.0 * envelope_variance(n));
}

}  // namespace detail

std::uint64_t sample_binomial(std::uint64_t n, RngStream& rng) {
  if (n == 0) return 0;
  if (n < kInversionLimit) {
    // Sum of n fair bits.
    const std::uint64_t mask = (std::uint64_t{1} << n) - 1;
    return static_cast<std::uint64_t>(std::popcount(rng.engine()() & mask));
  }

  const double nn = static_cast<double>(n);
  const double center = 0.5 * nn;
  const double sigma = std::sqrt(envelope_variance(n));
  const double log_norm = log_gamma(nn + 1.0) - nn * std::log(2.0);
  const double log_peak = detail::binomial_log_pmf_half(n, n / 2) + kEnvelopeMargin;
  for (;;) {
    const double z = rng.normal();
    const double y = center + sigma * z;
    const double k = std::floor(y + 0.5);
    if (k < 0.0 || k > nn) continue;
    const double log_pmf = log_norm - log_gamma(k + 1.0) - log_gamma(nn - k + 1.0);
    const double log_env = log_peak - 0.5 * z * z;
    const double u = rng.uniform();
    if (u > 0.0 && std::log(u) < log_pmf - log_env) return static_cast<std::uint64_t>(k);
  }
}

std::uint64_t pseudo_reward_count(const PerturbationConfig& cfg,
                                  std::uint64_t pulls, RngStream& rng) {
  return sample_binomial(cfg.pseudo_count(pulls), rng);
}

}  // namespace phe
