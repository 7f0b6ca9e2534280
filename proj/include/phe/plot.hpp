#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "phe/harness.hpp"

namespace phe {

// Reads a policy,round,mean_regret,stderr CSV. Throws ConfigError if a
// column is missing or a value does not parse.
std::vector<RegretCurve> read_aggregate_csv(std::istream& in,
                                            std::vector<std::size_t>* rounds = nullptr);

// Self-contained SVG with one line per curve, a shaded +-stderr band and a
// legend. `rounds` holds the x coordinate of every curve point.
std::string render_regret_svg(const std::vector<RegretCurve>& curves,
                              const std::vector<std::size_t>& rounds,
                              const std::string& title);

}  // namespace phe
