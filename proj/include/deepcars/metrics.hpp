#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace deepcars {

inline constexpr int kEpisodesPerWindow = 100;

struct StepRecord {
  std::int64_t step = 0;
  std::int64_t episode = 0;
  double reward = 0.0;
  double epsilon = 0.0;
  bool operator==(const StepRecord&) const = default;
};

// Mean accumulated episode reward over one block of kEpisodesPerWindow episodes.
struct WindowRecord {
  std::int64_t window = 0;
  double mean_reward = 0.0;
  std::int64_t end_step = 0;  // training step at which the window closed; not persisted
  bool operator==(const WindowRecord& o) const {
    return window == o.window && mean_reward == o.mean_reward;
  }
};

struct ValidationRecord {
  std::int64_t step = 0;
  double mean_reward = 0.0;
  std::optional<double> accuracy;  // n/a when no car was resolved
  bool is_new_best = false;
  bool operator==(const ValidationRecord&) const = default;
};

// Percentage of resolved cars that were passed; nullopt when none were resolved.
std::optional<double> accuracy(std::int64_t passed, std::int64_t collided);
std::string format_accuracy(std::optional<double> acc);

struct RunMetrics {
  std::vector<StepRecord> steps;
  std::vector<WindowRecord> windows;
  std::vector<ValidationRecord> validations;
  std::int64_t passed = 0;
  std::int64_t collided = 0;

  std::optional<double> accuracy() const { return deepcars::accuracy(passed, collided); }

  // Closes episode `return_value`; appends a window record every kEpisodesPerWindow episodes.
  void end_episode(double return_value, std::int64_t at_step);

  bool operator==(const RunMetrics& o) const {
    return steps == o.steps && windows == o.windows && validations == o.validations &&
           passed == o.passed && collided == o.collided;
  }

 private:
  double window_sum_ = 0.0;
  int window_count_ = 0;
};

// steps.csv, windows.csv, validation.csv and summary.csv (passed,collided) under `dir`.
void write_csv(const RunMetrics& metrics, const std::filesystem::path& dir);
RunMetrics read_csv(const std::filesystem::path& dir);

// Shortest decimal text that parses back to the same double.
std::string format_real(double v);
double parse_real(const std::string& text);

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotOptions {
  std::string title;
  std::string x_label = "step";
  std::string y_label = "mean accumulated reward";
};

// Standalone 960x540 SVG line chart, one polyline and legend entry per series.
std::string render_svg(const std::vector<PlotSeries>& series, const PlotOptions& options = {});
void plot_svg(const std::vector<PlotSeries>& series, const std::filesystem::path& path,
              const PlotOptions& options = {});

// Window means against the step at which each window closed, falling back to window index.
PlotSeries window_series(const RunMetrics& metrics, std::string label);

}  // namespace deepcars
