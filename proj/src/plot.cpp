#include "phe/plot.hpp"

#include <algorithm>
#include <array>
#include <istream>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "phe/error.hpp"

namespace phe {
namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

double parse_double(const std::string& s, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(fmt::format("line {}: '{}' is not a number", line_no, s));
  }
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

constexpr std::array<const char*, 8> kPalette{"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                              "#9467bd", "#8c564b", "#e377c2", "#17becf"};

}  // namespace

std::vector<RegretCurve> read_aggregate_csv(std::istream& in, std::vector<std::size_t>* rounds) {
  std::string header;
  if (!std::getline(in, header)) throw ConfigError("aggregate CSV is empty");
  const auto cols = split(strip_cr(header));
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < cols.size(); ++i) index[cols[i]] = i;
  for (const char* need : {"policy", "round", "mean_regret", "stderr"}) {
    if (!index.contains(need)) throw ConfigError(fmt::format("aggregate CSV lacks column '{}'", need));
  }

  std::vector<RegretCurve> curves;
  std::map<std::string, std::size_t> by_policy;
  std::vector<std::size_t> first_rounds;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto fields = split(line);
    if (fields.size() != cols.size())
      throw ConfigError(fmt::format("line {}: expected {} fields", line_no, cols.size()));
    const std::string& policy = fields[index["policy"]];
    auto [it, inserted] = by_policy.emplace(policy, curves.size());
    if (inserted) curves.push_back(RegretCurve{policy, {}, {}, 0});
    auto& curve = curves[it->second];
    const auto round = static_cast<std::size_t>(parse_double(fields[index["round"]], line_no));
    if (it->second == 0) first_rounds.push_back(round);
    curve.mean.push_back(parse_double(fields[index["mean_regret"]], line_no));
    curve.stderr_.push_back(parse_double(fields[index["stderr"]], line_no));
  }
  for (const auto& c : curves) {
    if (c.mean.size() != first_rounds.size())
      throw ConfigError("aggregate CSV has policies with different round grids");
  }
  if (rounds) *rounds = std::move(first_rounds);
  return curves;
}

std::string render_regret_svg(const std::vector<RegretCurve>& curves,
                              const std::vector<std::size_t>& rounds, const std::string& title) {
  constexpr double kWidth = 720, kHeight = 480;
  constexpr double kLeft = 70, kRight = 170, kTop = 40, kBottom = 50;
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;

  const double x_max = rounds.empty() ? 1.0 : static_cast<double>(std::max<std::size_t>(rounds.back(), 1));
  double y_max = 0.0;
  for (const auto& c : curves) {
    for (std::size_t i = 0; i < c.mean.size(); ++i) y_max = std::max(y_max, c.mean[i] + c.stderr_[i]);
  }
  if (y_max <= 0.0) y_max = 1.0;

  auto px = [&](double x) { return kLeft + plot_w * x / x_max; };
  auto py = [&](double y) { return kTop + plot_h * (1.0 - y / y_max); };

  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" "
      "viewBox=\"0 0 {0} {1}\" font-family=\"sans-serif\" font-size=\"12\">\n"
      "<rect width=\"{0}\" height=\"{1}\" fill=\"white\"/>\n"
      "<text x=\"{2}\" y=\"24\" font-size=\"15\">{3}</text>\n",
      kWidth, kHeight, kLeft, escape_xml(title));

  // Axes with five ticks each.
  svg += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"black\"/>\n",
                     kLeft, kTop + plot_h, kLeft + plot_w);
  svg += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>\n",
                     kLeft, kTop, kTop + plot_h);
  for (int k = 0; k <= 5; ++k) {
    const double xv = x_max * k / 5.0, yv = y_max * k / 5.0;
    svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{:g}</text>\n",
                       px(xv), kTop + plot_h + 18, std::round(xv));
    svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"end\">{:.4g}</text>\n",
                       kLeft - 6, py(yv) + 4, yv);
  }
  svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">Round n</text>\n",
                     kLeft + plot_w / 2, kHeight - 10);
  svg += fmt::format(
      "<text x=\"16\" y=\"{:.1f}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.1f})\">"
      "Regret</text>\n",
      kTop + plot_h / 2, kTop + plot_h / 2);

  for (std::size_t c = 0; c < curves.size(); ++c) {
    const auto& curve = curves[c];
    const char* color = kPalette[c % kPalette.size()];
    const std::size_t m = std::min(curve.mean.size(), rounds.size());

    std::string band, line;
    for (std::size_t i = 0; i < m; ++i)
      band += fmt::format("{:.2f},{:.2f} ", px(static_cast<double>(rounds[i])),
                          py(curve.mean[i] + curve.stderr_[i]));
    for (std::size_t i = m; i-- > 0;)
      band += fmt::format("{:.2f},{:.2f} ", px(static_cast<double>(rounds[i])),
                          py(curve.mean[i] - curve.stderr_[i]));
    for (std::size_t i = 0; i < m; ++i)
      line += fmt::format("{:.2f},{:.2f} ", px(static_cast<double>(rounds[i])), py(curve.mean[i]));

    svg += fmt::format("<g class=\"series\" data-policy=\"{}\">\n", escape_xml(curve.policy_id));
    svg += fmt::format("<polygon points=\"{}\" fill=\"{}\" fill-opacity=\"0.2\" stroke=\"none\"/>\n",
                       band, color);
    svg += fmt::format("<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"2\"/>\n",
                       line, color);
    svg += "</g>\n";

    const double ly = kTop + 10 + 20.0 * static_cast<double>(c);
    const double lx = kLeft + plot_w + 15;
    svg += fmt::format(
        "<line x1=\"{0:.1f}\" y1=\"{1:.1f}\" x2=\"{2:.1f}\" y2=\"{1:.1f}\" stroke=\"{3}\" "
        "stroke-width=\"3\"/>\n<text class=\"legend\" x=\"{4:.1f}\" y=\"{5:.1f}\">{6}</text>\n",
        lx, ly, lx + 20, color, lx + 26, ly + 4, escape_xml(curve.policy_id));
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace phe
