#include <gtest/gtest.h>

#include "deepcars/errors.hpp"
#include "deepcars/metrics.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <regex>

using namespace deepcars;

namespace {

std::filesystem::path fresh_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("deepcars_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream(path) << text;
}

std::size_t count_of(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

RunMetrics sample_metrics() {
  RunMetrics m;
  for (int i = 1; i <= 250; ++i) {
    const double r = i % 17 == 0 ? -1.0 : 1.0;
    m.steps.push_back({i, i / 3, r, 1.0 - i / 1000.0});
    m.end_episode(i % 7 == 0 ? -1.0 : 3.25 + i, i * 2);
  }
  m.validations.push_back({2000, 13.5, 99.25, true});
  m.validations.push_back({4000, 0.1, std::nullopt, false});
  m.passed = 1234;
  m.collided = 5;
  return m;
}

}  // namespace

TEST(Accuracy, ReferenceCounts) {
  EXPECT_DOUBLE_EQ(*accuracy(99, 1), 99.0);
  EXPECT_DOUBLE_EQ(*accuracy(0, 5), 0.0);
  EXPECT_DOUBLE_EQ(*accuracy(10, 0), 100.0);
  EXPECT_EQ(format_accuracy(accuracy(99140, 860)), "99.14%");
  EXPECT_EQ(format_accuracy(accuracy(99, 1)), "99.00%");
}

TEST(Accuracy, NothingResolvedIsNotApplicable) {
  EXPECT_FALSE(accuracy(0, 0).has_value());
  EXPECT_EQ(format_accuracy(accuracy(0, 0)), "n/a");
}

TEST(RunMetrics, WindowsCloseEveryHundredEpisodes) {
  RunMetrics m;
  for (int i = 0; i < 199; ++i) m.end_episode(i < 100 ? 2.0 : 4.0, i + 1);
  ASSERT_EQ(m.windows.size(), 1u);
  EXPECT_DOUBLE_EQ(m.windows[0].mean_reward, 2.0);
  EXPECT_EQ(m.windows[0].end_step, 100);
  m.end_episode(4.0, 200);
  ASSERT_EQ(m.windows.size(), 2u);
  EXPECT_DOUBLE_EQ(m.windows[1].mean_reward, 4.0);
}

TEST(Csv, RoundTripIsExact) {
  const RunMetrics m = sample_metrics();
  const auto dir = fresh_dir("csv_roundtrip");
  write_csv(m, dir);
  EXPECT_TRUE(read_csv(dir) == m);

  std::ifstream in(dir / "validation.csv");
  std::string header, first, second;
  std::getline(in, header);
  std::getline(in, first);
  std::getline(in, second);
  EXPECT_EQ(header, "step,mean_reward,accuracy,is_new_best");
  EXPECT_EQ(first, "2000,13.5,99.25,1");
  EXPECT_EQ(second, "4000,0.1,n/a,0");
}

TEST(Csv, EmptyRunWritesHeadersOnly) {
  const auto dir = fresh_dir("csv_empty");
  write_csv(RunMetrics{}, dir);
  std::ifstream in(dir / "steps.csv");
  std::string header, rest;
  std::getline(in, header);
  EXPECT_EQ(header, "step,episode,reward,epsilon");
  EXPECT_FALSE(std::getline(in, rest));
  EXPECT_TRUE(read_csv(dir) == RunMetrics{});
}

TEST(Csv, WrongColumnCountNamesTheLine) {
  const auto dir = fresh_dir("csv_bad");
  write_csv(sample_metrics(), dir);
  write_file(dir / "windows.csv", "window,mean_reward\n0,1.5\n1,2.5,9\n");
  try {
    read_csv(dir);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
}

TEST(Csv, WrongHeaderIsRejected) {
  const auto dir = fresh_dir("csv_header");
  write_csv(sample_metrics(), dir);
  write_file(dir / "steps.csv", "step,reward\n1,1\n");
  EXPECT_THROW(read_csv(dir), ParseError);
}

TEST(FormatReal, ShortestRoundTrip) {
  for (double v : {0.0, 1.0, -1.0, 0.1, 1.0 / 3.0, 1e-300, 123456789.125, -2.5e17}) {
    EXPECT_EQ(parse_real(format_real(v)), v);
  }
  EXPECT_EQ(format_real(0.1), "0.1");
  EXPECT_THROW(parse_real("1.5x"), ParseError);
}

TEST(Svg, OnePolylinePerSeriesAndOrderedLegend) {
  const std::vector<PlotSeries> series = {
      {"DQN", {0, 1, 2}, {1, 3, 2}}, {"DDQN", {0, 1, 2}, {2, 2, 5}}, {"Q <tab>", {0, 2}, {0, 1}}};
  const std::string svg = render_svg(series, {"training"});
  EXPECT_NE(svg.find("<svg"), std::string::npos);
  EXPECT_EQ(svg.substr(svg.size() - 7), "</svg>\n");
  EXPECT_NE(svg.find("width=\"960\""), std::string::npos);
  EXPECT_NE(svg.find("height=\"540\""), std::string::npos);
  EXPECT_EQ(count_of(svg, "<polyline"), 3u);
  EXPECT_EQ(count_of(svg, "class=\"legend\""), 3u);
  const auto a = svg.find(">DQN<"), b = svg.find(">DDQN<"), c = svg.find(">Q &lt;tab&gt;<");
  ASSERT_NE(a, std::string::npos);
  ASSERT_NE(b, std::string::npos);
  ASSERT_NE(c, std::string::npos);
  EXPECT_LT(a, b);
  EXPECT_LT(b, c);
  EXPECT_NE(svg.find("training"), std::string::npos);
}

TEST(Svg, PointCountsMatchSeries) {
  const std::vector<PlotSeries> series = {{"a", {0, 1, 2, 3, 4}, {0, 1, 4, 9, 16}}};
  const std::string svg = render_svg(series);
  const std::regex points("<polyline[^>]*points=\"([^\"]*)\"");
  std::smatch m;
  ASSERT_TRUE(std::regex_search(svg, m, points));
  const std::string p = m[1];
  EXPECT_EQ(count_of(p, ","), 5u);
}

TEST(Svg, ByteDeterministic) {
  const std::vector<PlotSeries> series = {{"a", {0, 100, 200}, {-1, 150.5, 200}}};
  EXPECT_EQ(render_svg(series), render_svg(series));
  const auto dir = fresh_dir("svg");
  plot_svg(series, dir / "a.svg");
  plot_svg(series, dir / "b.svg");
  std::ifstream fa(dir / "a.svg"), fb(dir / "b.svg");
  std::string sa((std::istreambuf_iterator<char>(fa)), {});
  std::string sb((std::istreambuf_iterator<char>(fb)), {});
  EXPECT_EQ(sa, sb);
  EXPECT_EQ(sa, render_svg(series));
}

TEST(Svg, ConstantSeriesStillRenders) {
  EXPECT_NO_THROW(render_svg({{"flat", {0, 1, 2}, {5, 5, 5}}}));
  EXPECT_NO_THROW(render_svg({{"single", {3}, {7}}}));
}

TEST(Svg, BadInputIsUsageError) {
  EXPECT_THROW(render_svg({}), UsageError);
  EXPECT_THROW(render_svg({{"empty", {}, {}}}), UsageError);
  EXPECT_THROW(render_svg({{"nan", {0, 1}, {0, std::nan("")}}}), UsageError);
  EXPECT_THROW(render_svg({{"ragged", {0, 1}, {0}}}), UsageError);
}

TEST(WindowSeries, UsesClosingSteps) {
  RunMetrics m;
  for (int i = 1; i <= 300; ++i) m.end_episode(1.0 * (i > 100), i * 10);
  const PlotSeries s = window_series(m, "run");
  EXPECT_EQ(s.label, "run");
  EXPECT_EQ(s.x, (std::vector<double>{1000, 2000, 3000}));
  EXPECT_EQ(s.y, (std::vector<double>{0, 1, 1}));
}
