#include "deepcars/metrics.hpp"

#include "deepcars/errors.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace deepcars {

std::optional<double> accuracy(std::int64_t passed, std::int64_t collided) {
  const std::int64_t total = passed + collided;
  if (total <= 0) return std::nullopt;
  return 100.0 * static_cast<double>(passed) / static_cast<double>(total);
}

std::string format_accuracy(std::optional<double> acc) {
  if (!acc) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", *acc);
  return buf;
}

void RunMetrics::end_episode(double return_value, std::int64_t at_step) {
  window_sum_ += return_value;
  if (++window_count_ == kEpisodesPerWindow) {
    windows.push_back(WindowRecord{static_cast<std::int64_t>(windows.size()),
                                   window_sum_ / kEpisodesPerWindow, at_step});
    window_sum_ = 0.0;
    window_count_ = 0;
  }
}

std::string format_real(double v) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), end);
}

double parse_real(const std::string& text) {
  double v = 0.0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || end != text.data() + text.size())
    throw ParseError("not a number: '" + text + "'");
  return v;
}

namespace {

std::int64_t parse_int(const std::string& text) {
  std::int64_t v = 0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || end != text.data() + text.size())
    throw ParseError("not an integer: '" + text + "'");
  return v;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

// Reads a CSV with the exact header; calls `row` with the fields of each data line.
template <typename RowFn>
void read_table(const std::filesystem::path& path, const std::string& header, RowFn row) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  const auto columns = static_cast<std::size_t>(std::count(header.begin(), header.end(), ',') + 1);
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line) || line != header)
    throw ParseError(path.filename().string() + ": expected header '" + header + "'", 1);
  ++lineno;
  std::vector<std::string> fields;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    fields.clear();
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, ',');) fields.push_back(f);
    if (line.back() == ',') fields.emplace_back();
    if (fields.size() != columns)
      throw ParseError(path.filename().string() + ": expected " + std::to_string(columns) +
                           " columns, got " + std::to_string(fields.size()),
                       lineno);
    try {
      row(fields);
    } catch (const ParseError& e) {
      throw ParseError(path.filename().string() + ": " + e.what(), lineno);
    }
  }
}

}  // namespace

void write_csv(const RunMetrics& m, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    auto out = open_out(dir / "steps.csv");
    out << "step,episode,reward,epsilon\n";
    for (const auto& r : m.steps)
      out << r.step << ',' << r.episode << ',' << format_real(r.reward) << ','
          << format_real(r.epsilon) << '\n';
  }
  {
    auto out = open_out(dir / "windows.csv");
    out << "window,mean_reward\n";
    for (const auto& r : m.windows) out << r.window << ',' << format_real(r.mean_reward) << '\n';
  }
  {
    auto out = open_out(dir / "validation.csv");
    out << "step,mean_reward,accuracy,is_new_best\n";
    for (const auto& r : m.validations)
      out << r.step << ',' << format_real(r.mean_reward) << ','
          << (r.accuracy ? format_real(*r.accuracy) : std::string("n/a")) << ','
          << (r.is_new_best ? 1 : 0) << '\n';
  }
  {
    auto out = open_out(dir / "summary.csv");
    out << "passed,collided\n" << m.passed << ',' << m.collided << '\n';
  }
}

RunMetrics read_csv(const std::filesystem::path& dir) {
  RunMetrics m;
  read_table(dir / "steps.csv", "step,episode,reward,epsilon", [&](const auto& f) {
    m.steps.push_back({parse_int(f[0]), parse_int(f[1]), parse_real(f[2]), parse_real(f[3])});
  });
  read_table(dir / "windows.csv", "window,mean_reward", [&](const auto& f) {
    m.windows.push_back({parse_int(f[0]), parse_real(f[1]), 0});
  });
  read_table(dir / "validation.csv", "step,mean_reward,accuracy,is_new_best", [&](const auto& f) {
    ValidationRecord r;
    r.step = parse_int(f[0]);
    r.mean_reward = parse_real(f[1]);
    if (f[2] != "n/a") r.accuracy = parse_real(f[2]);
    const auto flag = parse_int(f[3]);
    if (flag != 0 && flag != 1) throw ParseError("is_new_best must be 0 or 1");
    r.is_new_best = flag == 1;
    m.validations.push_back(r);
  });
  if (std::filesystem::exists(dir / "summary.csv")) {
    read_table(dir / "summary.csv", "passed,collided", [&](const auto& f) {
      m.passed = parse_int(f[0]);
      m.collided = parse_int(f[1]);
    });
  }
  return m;
}

// ---------------------------------------------------------------------------
// SVG

namespace {

constexpr double kWidth = 960.0;
constexpr double kHeight = 540.0;
constexpr double kLeft = 80.0, kRight = 200.0, kTop = 50.0, kBottom = 60.0;
constexpr std::array<const char*, 8> kPalette = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                                 "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

}  // namespace

std::string render_svg(const std::vector<PlotSeries>& series, const PlotOptions& options) {
  if (series.empty()) throw UsageError("plot needs at least one series");
  double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
  for (const auto& s : series) {
    if (s.y.empty()) throw UsageError("series '" + s.label + "' is empty");
    if (s.x.size() != s.y.size())
      throw UsageError("series '" + s.label + "' has mismatched x/y lengths");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]))
        throw UsageError("series '" + s.label + "' contains a non-finite value");
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, s.y[i]);
      ymax = std::max(ymax, s.y[i]);
    }
  }
  if (xmax == xmin) {
    xmin -= 0.5;
    xmax += 0.5;
  }
  if (ymax == ymin) {
    ymin -= 1.0;
    ymax += 1.0;
  }
  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double y) { return kTop + ph - (y - ymin) / (ymax - ymin) * ph; };

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"960\" "
         "height=\"540\" viewBox=\"0 0 960 540\">\n"
      << "<rect x=\"0\" y=\"0\" width=\"960\" height=\"540\" fill=\"white\"/>\n";
  if (!options.title.empty())
    svg << "<text x=\"" << fmt2(kLeft + pw / 2) << "\" y=\"30\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"18\">" << escape_xml(options.title)
        << "</text>\n";

  // Axes and ticks.
  svg << "<g stroke=\"black\" stroke-width=\"1\">\n"
      << "<line x1=\"" << fmt2(kLeft) << "\" y1=\"" << fmt2(kTop + ph) << "\" x2=\""
      << fmt2(kLeft + pw) << "\" y2=\"" << fmt2(kTop + ph) << "\"/>\n"
      << "<line x1=\"" << fmt2(kLeft) << "\" y1=\"" << fmt2(kTop) << "\" x2=\"" << fmt2(kLeft)
      << "\" y2=\"" << fmt2(kTop + ph) << "\"/>\n"
      << "</g>\n";
  constexpr int kTicks = 5;
  svg << "<g font-family=\"sans-serif\" font-size=\"12\">\n";
  for (int i = 0; i <= kTicks; ++i) {
    const double fx = xmin + (xmax - xmin) * i / kTicks;
    const double fy = ymin + (ymax - ymin) * i / kTicks;
    svg << "<line x1=\"" << fmt2(px(fx)) << "\" y1=\"" << fmt2(kTop + ph) << "\" x2=\""
        << fmt2(px(fx)) << "\" y2=\"" << fmt2(kTop + ph + 5) << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << fmt2(px(fx)) << "\" y=\"" << fmt2(kTop + ph + 20)
        << "\" text-anchor=\"middle\">" << tick_label(fx) << "</text>\n"
        << "<line x1=\"" << fmt2(kLeft - 5) << "\" y1=\"" << fmt2(py(fy)) << "\" x2=\""
        << fmt2(kLeft) << "\" y2=\"" << fmt2(py(fy)) << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << fmt2(kLeft - 8) << "\" y=\"" << fmt2(py(fy) + 4)
        << "\" text-anchor=\"end\">" << tick_label(fy) << "</text>\n";
  }
  svg << "<text x=\"" << fmt2(kLeft + pw / 2) << "\" y=\"" << fmt2(kHeight - 15)
      << "\" text-anchor=\"middle\">" << escape_xml(options.x_label) << "</text>\n"
      << "<text x=\"20\" y=\"" << fmt2(kTop + ph / 2) << "\" text-anchor=\"middle\" "
      << "transform=\"rotate(-90 20 " << fmt2(kTop + ph / 2) << ")\">"
      << escape_xml(options.y_label) << "</text>\n"
      << "</g>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = kPalette[k % kPalette.size()];
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i)
      svg << (i ? " " : "") << fmt2(px(s.x[i])) << ',' << fmt2(py(s.y[i]));
    svg << "\"/>\n";
  }

  svg << "<g font-family=\"sans-serif\" font-size=\"13\">\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const double ly = kTop + 10 + 22.0 * static_cast<double>(k);
    const double lx = kWidth - kRight + 20;
    svg << "<line class=\"legend\" x1=\"" << fmt2(lx) << "\" y1=\"" << fmt2(ly) << "\" x2=\""
        << fmt2(lx + 25) << "\" y2=\"" << fmt2(ly) << "\" stroke=\""
        << kPalette[k % kPalette.size()] << "\" stroke-width=\"2\"/>\n"
        << "<text x=\"" << fmt2(lx + 32) << "\" y=\"" << fmt2(ly + 4) << "\">"
        << escape_xml(series[k].label) << "</text>\n";
  }
  svg << "</g>\n</svg>\n";
  return svg.str();
}

void plot_svg(const std::vector<PlotSeries>& series, const std::filesystem::path& path,
              const PlotOptions& options) {
  const std::string text = render_svg(series, options);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto out = open_out(path);
  out << text;
}

PlotSeries window_series(const RunMetrics& metrics, std::string label) {
  PlotSeries s;
  s.label = std::move(label);
  const bool have_steps =
      std::any_of(metrics.windows.begin(), metrics.windows.end(),
                  [](const WindowRecord& w) { return w.end_step > 0; });
  for (const auto& w : metrics.windows) {
    s.x.push_back(static_cast<double>(have_steps ? w.end_step : w.window));
    s.y.push_back(w.mean_reward);
  }
  return s;
}

}  // namespace deepcars
