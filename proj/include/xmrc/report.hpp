#pragma once

// Report rendering from a run directory into <run_dir>/report/.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "xmrc/corpus.hpp"
#include "xmrc/scoring.hpp"

namespace xmrc {

struct DirectionErrorRates {
  double language = 0.0;
  double generation = 0.0;
};

/// One row in the layout of the main results table.
struct Table1Row {
  std::string model;
  std::optional<double> en_en;
  std::optional<double> mean_en_x;
  std::optional<double> mean_x_x;
  std::optional<double> en_x_over_en_en;
  std::optional<double> x_x_over_en_en;
  std::optional<double> mean_language;    // over en-x directions
  std::optional<double> mean_generation;  // over en-x directions
  std::optional<double> en_en_generation;
};

Table1Row table1_row(const std::string& model, const std::map<Direction, DirectionSummary>& summaries,
                     const std::map<Direction, DirectionErrorRates>& errors = {});

/// Header plus one line per row, two decimals, empty cells for missing values.
std::string table1_csv(const std::vector<Table1Row>& rows);

struct LineSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;
};

struct LineChart {
  std::string title;
  std::string x_label = "relative depth";
  std::string y_label = "S";
  double x_min = 0.0;
  double x_max = 1.0;
  std::vector<LineSeries> series;
};

/// Plot area geometry; y range is padded when the data are flat.
struct ChartFrame {
  double width = 640;
  double height = 400;
  double left = 64;
  double right = 140;
  double top = 40;
  double bottom = 56;
  double x_min = 0.0;
  double x_max = 1.0;
  double y_min = 0.0;
  double y_max = 1.0;

  double px(double x) const;
  double py(double y) const;
};

ChartFrame line_chart_frame(const LineChart& chart);
std::string render_line_chart_svg(const LineChart& chart);

struct BarGroup {
  std::string label;
  std::vector<std::pair<std::string, double>> bars;  // series label, value
};

struct BarChart {
  std::string title;
  std::string y_label;
  std::vector<BarGroup> groups;
};

std::string render_bar_chart_svg(const BarChart& chart);

struct ReportResult {
  std::vector<std::string> files;  // relative to <run_dir>/report
  std::vector<std::string> notes;
};

/// Missing inputs skip the table or figure that needs them and add a note;
/// an empty run directory yields a report with notes only.
ReportResult render_report(const std::filesystem::path& run_dir);

}  // namespace xmrc
