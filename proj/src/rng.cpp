#include "phe/rng.hpp"

namespace phe {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t lineage_seed(const Lineage& lineage) {
  std::uint64_t h = splitmix64(lineage.master);
  h = splitmix64(h ^ lineage.instance);
  h = splitmix64(h ^ lineage.stream);
  h = splitmix64(h ^ lineage.round);
  return h;
}

RngStream::RngStream(const Lineage& lineage)
    : lineage_(lineage), engine_(lineage_seed(lineage)) {}

RngStream::RngStream(std::uint64_t seed)
    : lineage_{seed, 0, 0, 0}, engine_(lineage_seed(lineage_)) {}

double RngStream::uniform() {
  // 53 random bits mapped onto [0, 1).
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RngStream::normal() { return normal_(engine_); }

std::uint64_t RngStream::index(std::uint64_t n) {
  std::uniform_int_distribution<std::uint64_t> dist(0, n - 1);
  return dist(engine_);
}

bool RngStream::bernoulli(double p) { return uniform() < p; }

}  // namespace phe
