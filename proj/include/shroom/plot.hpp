#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace shroom {

// Grouped bar chart: one bar per (category, series).
struct BarChart {
  struct Series {
    std::string name;
    std::vector<double> values;  // one per category
  };

  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<std::string> categories;
  std::vector<Series> series;
};

std::string render_svg(const BarChart& chart);

// Header "category,<series...>", one row per category.
std::string render_csv(const BarChart& chart);

// Writes <stem>.svg and <stem>.csv; returns both paths.
std::vector<std::filesystem::path> write_chart(const BarChart& chart,
                                               const std::filesystem::path& stem);

}  // namespace shroom
