#include "xmrc/report.hpp"

#include <algorithm>
#include <cmath>
#include <regex>
#include <set>
#include <sstream>

#include <json.hpp>

#include "xmrc/util.hpp"

namespace xmrc {

namespace fs = std::filesystem;

namespace {

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

std::string cell(const std::optional<double>& v) { return v ? format_fixed(*v, 2) : std::string(); }

std::string xml_escape(std::string_view s) {
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

std::string num(double v) { return format_fixed(v, 2); }

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                          "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string color(std::size_t i) { return kPalette[i % std::size(kPalette)]; }

using CsvRow = std::map<std::string, std::string>;

std::vector<CsvRow> read_csv(const fs::path& path) {
  std::istringstream in(read_file(path));
  std::string line;
  std::vector<std::string> header;
  if (std::getline(in, line)) header = split(line, ',');
  std::vector<CsvRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split(line, ',');
    CsvRow row;
    for (std::size_t i = 0; i < header.size() && i < cells.size(); ++i) row[header[i]] = cells[i];
    rows.push_back(std::move(row));
  }
  return rows;
}

void svg_open(std::ostringstream& out, const ChartFrame& f, const std::string& title) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(f.width) << "\" height=\"" << num(f.height)
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << num(f.width / 2) << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
      << xml_escape(title) << "</text>\n";
}

void y_axis(std::ostringstream& out, const ChartFrame& f, const std::string& label) {
  double x0 = f.left;
  out << "<line x1=\"" << num(x0) << "\" y1=\"" << num(f.top) << "\" x2=\"" << num(x0) << "\" y2=\""
      << num(f.height - f.bottom) << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    double v = f.y_min + (f.y_max - f.y_min) * i / 4.0;
    double y = f.py(v);
    out << "<line x1=\"" << num(x0 - 4) << "\" y1=\"" << num(y) << "\" x2=\"" << num(x0) << "\" y2=\"" << num(y)
        << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << num(x0 - 6) << "\" y=\"" << num(y + 4) << "\" text-anchor=\"end\">"
        << format_fixed(v, 2) << "</text>\n";
  }
  out << "<text transform=\"translate(16," << num((f.top + f.height - f.bottom) / 2)
      << ") rotate(-90)\" text-anchor=\"middle\">" << xml_escape(label) << "</text>\n";
}

void legend(std::ostringstream& out, const ChartFrame& f, const std::vector<std::string>& labels) {
  double x = f.width - f.right + 16;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    double y = f.top + 16.0 * static_cast<double>(i);
    out << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"10\" height=\"10\" fill=\"" << color(i)
        << "\"/>\n";
    out << "<text x=\"" << num(x + 14) << "\" y=\"" << num(y + 9) << "\">" << xml_escape(labels[i]) << "</text>\n";
  }
}

}  // namespace

Table1Row table1_row(const std::string& model, const std::map<Direction, DirectionSummary>& summaries,
                     const std::map<Direction, DirectionErrorRates>& errors) {
  Table1Row row;
  row.model = model;
  std::vector<double> en_x, x_x;
  for (const auto& [d, s] : summaries) {
    if (d.is_en_en()) {
      row.en_en = s.mean_f1_x100;
    } else if (d.is_en_x()) {
      en_x.push_back(s.mean_f1_x100);
    } else if (d.is_monolingual()) {
      x_x.push_back(s.mean_f1_x100);
    }
  }
  if (!en_x.empty()) row.mean_en_x = mean(en_x);
  if (!x_x.empty()) row.mean_x_x = mean(x_x);
  if (row.en_en && *row.en_en > 0) {
    if (row.mean_en_x) row.en_x_over_en_en = *row.mean_en_x / *row.en_en;
    if (row.mean_x_x) row.x_x_over_en_en = *row.mean_x_x / *row.en_en;
  }
  std::vector<double> lang, gen;
  for (const auto& [d, e] : errors) {
    if (d.is_en_en()) {
      row.en_en_generation = e.generation;
    } else if (d.is_en_x()) {
      lang.push_back(e.language);
      gen.push_back(e.generation);
    }
  }
  if (!lang.empty()) row.mean_language = mean(lang);
  if (!gen.empty()) row.mean_generation = mean(gen);
  return row;
}

std::string table1_csv(const std::vector<Table1Row>& rows) {
  std::string out =
      "model,en-en,mean en-x,mean x-x,en-x / en-en,x-x / en-en,mean language,mean generation,en-en generation\n";
  for (const auto& r : rows) {
    out += r.model + "," + cell(r.en_en) + "," + cell(r.mean_en_x) + "," + cell(r.mean_x_x) + "," +
           cell(r.en_x_over_en_en) + "," + cell(r.x_x_over_en_en) + "," + cell(r.mean_language) + "," +
           cell(r.mean_generation) + "," + cell(r.en_en_generation) + "\n";
  }
  return out;
}

double ChartFrame::px(double x) const {
  double span = x_max - x_min;
  return left + (span > 0 ? (x - x_min) / span : 0.0) * (width - left - right);
}

double ChartFrame::py(double y) const {
  return top + (y_max - y) / (y_max - y_min) * (height - top - bottom);
}

ChartFrame line_chart_frame(const LineChart& chart) {
  ChartFrame f;
  f.x_min = chart.x_min;
  f.x_max = chart.x_max;
  double lo = INFINITY, hi = -INFINITY;
  for (const auto& s : chart.series)
    for (const auto& [x, y] : s.points) {
      if (!std::isfinite(y)) continue;
      lo = std::min(lo, y);
      hi = std::max(hi, y);
    }
  if (!std::isfinite(lo)) {
    lo = 0.0;
    hi = 1.0;
  }
  if (hi - lo < 1e-12) {
    double pad = std::max(0.5, std::abs(lo) * 0.1);
    lo -= pad;
    hi += pad;
  } else {
    double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
  }
  f.y_min = lo;
  f.y_max = hi;
  return f;
}

std::string render_line_chart_svg(const LineChart& chart) {
  auto f = line_chart_frame(chart);
  std::ostringstream out;
  svg_open(out, f, chart.title);
  y_axis(out, f, chart.y_label);
  double base = f.height - f.bottom;
  out << "<line x1=\"" << num(f.left) << "\" y1=\"" << num(base) << "\" x2=\"" << num(f.width - f.right)
      << "\" y2=\"" << num(base) << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    double v = f.x_min + (f.x_max - f.x_min) * i / 4.0;
    out << "<text x=\"" << num(f.px(v)) << "\" y=\"" << num(base + 16) << "\" text-anchor=\"middle\">"
        << format_fixed(v, 2) << "</text>\n";
  }
  out << "<text x=\"" << num((f.left + f.width - f.right) / 2) << "\" y=\"" << num(f.height - 12)
      << "\" text-anchor=\"middle\">" << xml_escape(chart.x_label) << "</text>\n";
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < chart.series.size(); ++i) {
    const auto& s = chart.series[i];
    labels.push_back(s.label);
    out << "<polyline fill=\"none\" stroke=\"" << color(i) << "\" stroke-width=\"2\" data-label=\""
        << xml_escape(s.label) << "\" points=\"";
    bool first = true;
    for (const auto& [x, y] : s.points) {
      if (!std::isfinite(y)) continue;
      out << (first ? "" : " ") << num(f.px(x)) << "," << num(f.py(y));
      first = false;
    }
    out << "\"/>\n";
  }
  legend(out, f, labels);
  out << "</svg>\n";
  return out.str();
}

std::string render_bar_chart_svg(const BarChart& chart) {
  ChartFrame f;
  std::vector<std::string> series;
  double hi = 0.0;
  for (const auto& g : chart.groups)
    for (const auto& [label, v] : g.bars) {
      if (std::find(series.begin(), series.end(), label) == series.end()) series.push_back(label);
      hi = std::max(hi, v);
    }
  f.y_min = 0.0;
  f.y_max = hi > 0 ? hi * 1.1 : 1.0;
  std::ostringstream out;
  svg_open(out, f, chart.title);
  y_axis(out, f, chart.y_label);
  double base = f.height - f.bottom;
  double plot_w = f.width - f.left - f.right;
  double group_w = chart.groups.empty() ? plot_w : plot_w / static_cast<double>(chart.groups.size());
  double bar_w = series.empty() ? 0.0 : group_w * 0.8 / static_cast<double>(series.size());
  out << "<line x1=\"" << num(f.left) << "\" y1=\"" << num(base) << "\" x2=\"" << num(f.width - f.right)
      << "\" y2=\"" << num(base) << "\" stroke=\"black\"/>\n";
  for (std::size_t gi = 0; gi < chart.groups.size(); ++gi) {
    const auto& g = chart.groups[gi];
    double gx = f.left + group_w * static_cast<double>(gi) + group_w * 0.1;
    for (const auto& [label, v] : g.bars) {
      auto si = static_cast<std::size_t>(std::find(series.begin(), series.end(), label) - series.begin());
      double x = gx + bar_w * static_cast<double>(si);
      double y = f.py(v);
      out << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"" << num(bar_w) << "\" height=\""
          << num(base - y) << "\" fill=\"" << color(si) << "\" data-label=\"" << xml_escape(label) << "\"/>\n";
    }
    out << "<text x=\"" << num(gx + group_w * 0.4) << "\" y=\"" << num(base + 16) << "\" text-anchor=\"middle\">"
        << xml_escape(g.label) << "</text>\n";
  }
  legend(out, f, series);
  out << "</svg>\n";
  return out.str();
}

ReportResult render_report(const fs::path& run_dir) {
  ReportResult result;
  auto out_dir = run_dir / "report";
  fs::create_directories(out_dir);
  auto emit = [&](const std::string& name, const std::string& content) {
    write_file_atomic(out_dir / name, content);
    result.files.push_back(name);
  };
  auto have = [&](const std::string& rel, const std::string& what) {
    if (fs::exists(run_dir / rel)) return true;
    result.notes.push_back(what + " skipped: " + rel + " not found");
    return false;
  };

  std::string model = run_dir.filename().string();
  if (fs::exists(run_dir / "manifest.json")) {
    try {
      auto j = nlohmann::json::parse(read_file(run_dir / "manifest.json"));
      model = j.at("backend").at("name").get<std::string>();
      for (const auto& s : j.at("stages")) {
        if (s.at("status") == "failed") {
          result.notes.push_back("stage " + s.at("name").get<std::string>() +
                                 " failed: " + s.value("message", std::string()));
        }
      }
    } catch (const std::exception& e) {
      result.notes.push_back(std::string("manifest unreadable: ") + e.what());
    }
  }

  std::map<Direction, DirectionSummary> summaries;
  if (have("summary.csv", "direction table")) {
    std::string csv = "direction,n,mean_f1,mean_em\n";
    for (const auto& r : read_csv(run_dir / "summary.csv")) {
      DirectionSummary s;
      s.direction = Direction::parse(r.at("direction"));
      s.n = std::stoul(r.at("n"));
      s.mean_f1_x100 = std::stod(r.at("mean_f1_x100"));
      s.mean_em_x100 = std::stod(r.at("mean_em_x100"));
      s.mean_f1 = s.mean_f1_x100 / 100.0;
      s.mean_em = s.mean_em_x100 / 100.0;
      summaries[s.direction] = s;
      csv += r.at("direction") + "," + r.at("n") + "," + format_fixed(s.mean_f1_x100, 2) + "," +
             format_fixed(s.mean_em_x100, 2) + "\n";
    }
    emit("directions.csv", csv);
  }

  std::map<Direction, DirectionErrorRates> errors;
  if (have("errors.csv", "error table")) {
    std::string csv = "direction,n,language,generation,blank,gibberish,refusal,content,correct,judge_unavailable\n";
    for (const auto& r : read_csv(run_dir / "errors.csv")) {
      auto d = Direction::parse(r.at("direction"));
      errors[d] = {std::stod(r.at("language_rate")), std::stod(r.at("generation_rate"))};
      csv += r.at("direction") + "," + r.at("n");
      for (const char* k : {"language_rate", "generation_rate", "blank_rate", "gibberish_rate", "refusal_rate",
                            "content_rate", "correct_rate"}) {
        csv += "," + format_fixed(std::stod(r.at(k)), 2);
      }
      csv += "," + r.at("judge_unavailable") + "\n";
    }
    emit("errors.csv", csv);
    result.notes.push_back("content vs correct split is F1 above the correct_f1 threshold; it is an operational choice");
  }
  if (!summaries.empty()) emit("table1.csv", table1_csv({table1_row(model, summaries, errors)}));

  if (have("oracle/accuracy.csv", "oracle table")) {
    std::string csv = "direction,mode,n,accuracy\n";
    for (const auto& r : read_csv(run_dir / "oracle/accuracy.csv")) {
      csv += r.at("direction") + "," + r.at("mode") + "," + r.at("n") + "," +
             format_fixed(std::stod(r.at("accuracy")), 2) + "\n";
    }
    emit("oracle.csv", csv);
  }

  if (have("mechanism/mrd.csv", "MRD table and figures")) {
    auto rows = read_csv(run_dir / "mechanism/mrd.csv");
    std::string csv = "direction,category,part,mean_mrd,n\n";
    std::map<std::string, std::map<std::string, std::vector<std::pair<std::string, double>>>> bars;
    std::vector<std::string> part_order;
    for (const auto& r : rows) {
      csv += r.at("direction") + "," + r.at("category") + "," + r.at("part") + "," +
             format_fixed(std::stod(r.at("mean_mrd")), 2) + "," + r.at("n") + "\n";
      bars[r.at("category")][r.at("part")].push_back({r.at("question_lang"), std::stod(r.at("mean_mrd"))});
      if (std::find(part_order.begin(), part_order.end(), r.at("part")) == part_order.end())
        part_order.push_back(r.at("part"));
    }
    emit("mrd.csv", csv);
    for (const auto& [category, parts] : bars) {
      BarChart chart{"mean MRD per part (" + category + ")", "MRD (layers)", {}};
      for (const auto& p : part_order)
        if (auto it = parts.find(p); it != parts.end()) chart.groups.push_back({p, it->second});
      emit("mrd_" + category + ".svg", render_bar_chart_svg(chart));
    }
    result.notes.push_back("MRD uses absolute relevance before the cumulative percentile");
  }

  std::map<std::string, LineChart> curves;
  if (fs::exists(run_dir / "mechanism")) {
    static const std::regex kSim(R"(sim_(.+)_([^_]+)\.csv)");
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(run_dir / "mechanism")) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& p : files) {
      std::smatch m;
      auto name = p.filename().string();
      if (!std::regex_match(name, m, kSim)) continue;
      LineSeries s{m[2].str(), {}};
      for (const auto& r : read_csv(p)) s.points.push_back({std::stod(r.at("rel_depth")), std::stod(r.at("similarity"))});
      auto& chart = curves[m[1].str()];
      chart.title = "S across layers: " + m[1].str();
      chart.series.push_back(std::move(s));
    }
  }
  if (curves.empty()) result.notes.push_back("similarity figures skipped: no mechanism/sim_<part>_<lang>.csv files");
  for (const auto& [part, chart] : curves) emit("sim_" + part + ".svg", render_line_chart_svg(chart));
  if (fs::exists(run_dir / "mechanism/curve_stats.csv")) {
    emit("curve_stats.csv", read_file(run_dir / "mechanism/curve_stats.csv"));
  }

  std::string notes;
  for (const auto& n : result.notes) notes += n + "\n";
  emit("notes.txt", notes);
  return result;
}

}  // namespace xmrc
