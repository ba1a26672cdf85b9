#include "shroom/plot.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "shroom/errors.hpp"
#include "shroom/util.hpp"

namespace shroom {
namespace {

constexpr double kWidth = 640, kHeight = 400;
constexpr double kLeft = 60, kRight = 20, kTop = 40, kBottom = 60;
constexpr std::array<const char*, 6> kPalette = {"#4c72b0", "#dd8452", "#55a868",
                                                 "#c44e52", "#8172b3", "#937860"};

std::string escape_xml(std::string_view text) {
  std::string out;
  for (char c : text) {
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

std::string escape_csv(std::string_view text) {
  if (text.find_first_of(",\"\n") == std::string_view::npos) return std::string(text);
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

// Rounds the axis maximum up to 1, 2 or 5 times a power of ten.
double nice_ceiling(double value) {
  if (value <= 0) return 1.0;
  const double magnitude = std::pow(10.0, std::floor(std::log10(value)));
  for (double step : {1.0, 2.0, 5.0, 10.0}) {
    if (step * magnitude >= value) return step * magnitude;
  }
  return 10.0 * magnitude;
}

}  // namespace

std::string render_svg(const BarChart& chart) {
  double max_value = 0.0;
  for (const auto& s : chart.series) {
    for (double v : s.values) max_value = std::max(max_value, v);
  }
  const double y_max = nice_ceiling(max_value);
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  const std::size_t n_cat = std::max<std::size_t>(1, chart.categories.size());
  const std::size_t n_series = std::max<std::size_t>(1, chart.series.size());
  const double group_w = plot_w / static_cast<double>(n_cat);
  const double bar_w = group_w * 0.8 / static_cast<double>(n_series);

  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" "
      "viewBox=\"0 0 {0} {1}\" font-family=\"sans-serif\" font-size=\"12\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      "<text x=\"{2}\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">{3}</text>\n",
      kWidth, kHeight, kWidth / 2, escape_xml(chart.title));

  for (int tick = 0; tick <= 5; ++tick) {
    const double value = y_max * tick / 5.0;
    const double y = kTop + plot_h - plot_h * tick / 5.0;
    svg += fmt::format(
        "<line x1=\"{0}\" y1=\"{1:.1f}\" x2=\"{2}\" y2=\"{1:.1f}\" stroke=\"#ddd\"/>\n"
        "<text x=\"{3}\" y=\"{4:.1f}\" text-anchor=\"end\">{5:g}</text>\n",
        kLeft, y, kLeft + plot_w, kLeft - 6, y + 4, value);
  }

  for (std::size_t c = 0; c < chart.categories.size(); ++c) {
    const double group_x = kLeft + group_w * static_cast<double>(c) + group_w * 0.1;
    for (std::size_t s = 0; s < chart.series.size(); ++s) {
      const auto& values = chart.series[s].values;
      const double v = c < values.size() ? values[c] : 0.0;
      const double h = plot_h * v / y_max;
      svg += fmt::format(
          "<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"{:.1f}\" height=\"{:.1f}\" fill=\"{}\">"
          "<title>{}: {:g}</title></rect>\n",
          group_x + bar_w * static_cast<double>(s), kTop + plot_h - h, bar_w, h,
          kPalette[s % kPalette.size()], escape_xml(chart.series[s].name), v);
    }
    svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{}</text>\n",
                       kLeft + group_w * (static_cast<double>(c) + 0.5), kTop + plot_h + 16,
                       escape_xml(chart.categories[c]));
  }

  svg += fmt::format(
      "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>\n"
      "<line x1=\"{0}\" y1=\"{2}\" x2=\"{3}\" y2=\"{2}\" stroke=\"black\"/>\n"
      "<text x=\"{4}\" y=\"{5}\" text-anchor=\"middle\">{6}</text>\n"
      "<text x=\"16\" y=\"{7}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {7})\">{8}</text>\n",
      kLeft, kTop, kTop + plot_h, kLeft + plot_w, kLeft + plot_w / 2, kHeight - 20,
      escape_xml(chart.x_label), kTop + plot_h / 2, escape_xml(chart.y_label));

  if (chart.series.size() > 1) {
    for (std::size_t s = 0; s < chart.series.size(); ++s) {
      const double y = kTop + 14.0 * static_cast<double>(s);
      svg += fmt::format(
          "<rect x=\"{0}\" y=\"{1}\" width=\"10\" height=\"10\" fill=\"{2}\"/>"
          "<text x=\"{3}\" y=\"{4}\">{5}</text>\n",
          kWidth - 150, y, kPalette[s % kPalette.size()], kWidth - 136, y + 9,
          escape_xml(chart.series[s].name));
    }
  }
  svg += "</svg>\n";
  return svg;
}

std::string render_csv(const BarChart& chart) {
  std::string csv = "category";
  for (const auto& s : chart.series) csv += "," + escape_csv(s.name);
  csv += "\n";
  for (std::size_t c = 0; c < chart.categories.size(); ++c) {
    csv += escape_csv(chart.categories[c]);
    for (const auto& s : chart.series) {
      csv += fmt::format(",{}", c < s.values.size() ? s.values[c] : 0.0);
    }
    csv += "\n";
  }
  return csv;
}

std::vector<std::filesystem::path> write_chart(const BarChart& chart,
                                               const std::filesystem::path& stem) {
  std::filesystem::path svg = stem, csv = stem;
  svg += ".svg";
  csv += ".csv";
  write_file(svg, render_svg(chart));
  write_file(csv, render_csv(chart));
  return {svg, csv};
}

}  // namespace shroom
