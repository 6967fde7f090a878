#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace correctorlab::svg {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
  /// Optional error bars (same length as y when present).
  std::vector<double> y_low;
  std::vector<double> y_high;
  bool lines = true;
};

struct Plot {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
  /// Free text stored in the <desc> element (the resolved configuration).
  std::string description;
  std::vector<Series> series;
};

/// Minimal standalone SVG line/scatter chart. Points that cannot be shown on a log
/// axis (non-positive) are dropped.
void write(const Plot& plot, const std::filesystem::path& path);

}  // namespace correctorlab::svg
