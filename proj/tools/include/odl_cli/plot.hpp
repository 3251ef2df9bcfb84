#pragma once

#include <string>

#include "odl_cli/table.hpp"

namespace odl::cli {

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label = "MAE";
  bool log_x = false;
};

/// Line plot of a summary table with columns `series,x,mean,ci_low,ci_high`
/// and an optional `baseline` column drawn as a dashed rule at its mean.
/// Rows are drawn in table order within each series.
std::string render_svg(const Table& summary, const PlotSpec& spec);

void render_svg_file(const std::string& csv_path, const std::string& svg_path, const PlotSpec& spec);

}  // namespace odl::cli
