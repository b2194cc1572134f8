#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <regex>

#include "test_support.hpp"
#include "xmrc/fixtures.hpp"
#include "xmrc/report.hpp"
#include "xmrc/runner.hpp"
#include "xmrc/util.hpp"

using namespace xmrc;
namespace fs = std::filesystem;

TEST_CASE("table row from published means") {
  std::map<Direction, DirectionSummary> s;
  s[Direction::parse("en-en")].mean_f1_x100 = 77.89;
  s[Direction::parse("en-de")].mean_f1_x100 = 72.13;
  std::map<Direction, DirectionErrorRates> e{{Direction::parse("en-de"), {0.89, 2.53}},
                                             {Direction::parse("en-en"), {0.0, 0.85}}};
  auto row = table1_row("LLaMA-3.1-Instruct-8B", s, e);
  auto csv = table1_csv({row});
  CHECK(csv.find("LLaMA-3.1-Instruct-8B,77.89,72.13,,0.93,,0.89,2.53,0.85\n") != std::string::npos);
  CHECK(csv.rfind("model,en-en,mean en-x,mean x-x,en-x / en-en,x-x / en-en,", 0) == 0);
}

TEST_CASE("empty run directory gives notes only") {
  test::TempDir dir;
  auto r = render_report(dir.path());
  CHECK(r.files == std::vector<std::string>{"notes.txt"});
  CHECK(r.notes.size() >= 4);
  CHECK(fs::exists(dir / "report/notes.txt"));
}

TEST_CASE("constant series renders flat at its value") {
  LineChart chart;
  chart.series.push_back({"de", {{0.0, 0.7}, {0.5, 0.7}, {1.0, 0.7}}});
  auto frame = line_chart_frame(chart);
  auto svg = render_line_chart_svg(chart);
  std::smatch m;
  REQUIRE(std::regex_search(svg, m, std::regex("points=\"([^\"]*)\"")));
  std::string expected_y = format_fixed(frame.py(0.7), 2);
  std::istringstream pts(m[1].str());
  std::string pt;
  int n = 0;
  std::vector<std::string> xs;
  while (pts >> pt) {
    auto comma = pt.find(',');
    CHECK(pt.substr(comma + 1) == expected_y);
    xs.push_back(pt.substr(0, comma));
    ++n;
  }
  CHECK(n == 3);
  CHECK(xs.front() == format_fixed(frame.px(0.0), 2));
  CHECK(xs.back() == format_fixed(frame.px(1.0), 2));
  CHECK(frame.y_min < 0.7);
  CHECK(frame.y_max > 0.7);
  CHECK(frame.px(0.0) == frame.left);
  CHECK(frame.px(1.0) == frame.width - frame.right);
}

TEST_CASE("report from a complete run") {
  test::TempDir dir;
  std::vector<std::string> langs{"en", "de"};
  save_corpus(make_synthetic_corpus(langs, 20, 3, "syn"), dir / "data");
  ConfigMap m;
  m.set("corpus.path", (dir / "data/syn").string());
  m.set("run.dir", (dir / "run").string());
  run(RunConfig::from_map(m));
  auto r = render_report(dir / "run");
  for (const char* f : {"table1.csv", "directions.csv", "errors.csv", "oracle.csv", "mrd.csv", "mrd_all.svg",
                        "sim_question.svg", "curve_stats.csv", "notes.txt"}) {
    INFO(f);
    CHECK(std::find(r.files.begin(), r.files.end(), f) != r.files.end());
  }
  auto table = read_file(dir / "run/report/table1.csv");
  CHECK(table.find("\nmock,100.00,") != std::string::npos);
  CHECK(read_file(dir / "run/report/sim_question.svg").find("<polyline") != std::string::npos);
}
