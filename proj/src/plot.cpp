#include "homeo/plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "homeo/homeostasis.hpp"
#include "homeo/metrics.hpp"

namespace homeo {

namespace fs = std::filesystem;

namespace {

constexpr double kWidth = 640, kHeight = 400;
constexpr double kLeft = 70, kRight = 150, kTop = 40, kBottom = 50;
constexpr const char* kPalette[] = {"#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860"};

std::string num(double v) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(2);
  os << v;
  return os.str();
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Axis {
  double lo, hi;
  double map(double v, double a, double b) const { return hi > lo ? a + (v - lo) / (hi - lo) * (b - a) : a; }
};

std::string tick_label(double v) {
  std::ostringstream os;
  if (std::abs(v) >= 1000) {
    os.precision(3);
    os << v;
  } else {
    os.precision(3);
    os << v;
  }
  return os.str();
}

void frame(std::ostringstream& os, const std::string& title, const std::string& x_label,
           const std::string& y_label, const Axis& x, const Axis& y, bool x_ticks) {
  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  os << "<rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";
  os << "<text x=\"" << num((x0 + x1) / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
     << escape(title) << "</text>\n";
  os << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x1 << "\" y2=\"" << y0 << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x0 << "\" y2=\"" << y1 << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double v = y.lo + (y.hi - y.lo) * i / 4.0;
    const double py = y.map(v, y0, y1);
    os << "<line x1=\"" << x0 - 4 << "\" y1=\"" << num(py) << "\" x2=\"" << x0 << "\" y2=\"" << num(py)
       << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << x0 - 6 << "\" y=\"" << num(py + 4) << "\" text-anchor=\"end\" font-size=\"11\">"
       << tick_label(v) << "</text>\n";
    if (x_ticks) {
      const double xv = x.lo + (x.hi - x.lo) * i / 4.0;
      const double px = x.map(xv, x0, x1);
      os << "<line x1=\"" << num(px) << "\" y1=\"" << y0 << "\" x2=\"" << num(px) << "\" y2=\"" << y0 + 4
         << "\" stroke=\"black\"/>\n";
      os << "<text x=\"" << num(px) << "\" y=\"" << y0 + 17 << "\" text-anchor=\"middle\" font-size=\"11\">"
         << tick_label(xv) << "</text>\n";
    }
  }
  os << "<text x=\"" << num((x0 + x1) / 2) << "\" y=\"" << kHeight - 10
     << "\" text-anchor=\"middle\" font-size=\"12\">" << escape(x_label) << "</text>\n";
  os << "<text x=\"16\" y=\"" << num((y0 + y1) / 2) << "\" text-anchor=\"middle\" font-size=\"12\" "
     << "transform=\"rotate(-90 16 " << num((y0 + y1) / 2) << ")\">" << escape(y_label) << "</text>\n";
}

std::string header() {
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\">\n";
  return os.str();
}

Axis padded(double lo, double hi, bool include_zero) {
  if (include_zero) lo = std::min(lo, 0.0), hi = std::max(hi, 0.0);
  if (!(hi > lo)) hi = lo + 1.0;
  return {lo, hi + 0.05 * (hi - lo)};
}

std::vector<fs::path> condition_dirs(const fs::path& input) {
  std::vector<fs::path> out;
  if (!fs::is_directory(input)) throw std::runtime_error("plot input " + input.string() + " is not a directory");
  // Canonical condition order first, anything else after.
  for (auto kind : {EmpathyKind::kNone, EmpathyKind::kCognitive, EmpathyKind::kAffective, EmpathyKind::kFull}) {
    const fs::path p = input / std::string(to_string(kind));
    if (fs::is_directory(p)) out.push_back(p);
  }
  return out;
}

std::vector<fs::path> seed_dirs(const fs::path& cond_dir, const char* file) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(cond_dir)) {
    if (e.is_directory() && e.path().filename().string().rfind("seed_", 0) == 0 && fs::exists(e.path() / file)) {
      out.push_back(e.path());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

}  // namespace

std::string render_line_chart(const std::string& title, const std::string& x_label,
                              const std::string& y_label, const std::vector<Series>& series) {
  double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo, ylo = xlo, yhi = -xlo;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (std::isnan(s.mean[i])) continue;
      xlo = std::min(xlo, s.x[i]);
      xhi = std::max(xhi, s.x[i]);
      ylo = std::min(ylo, s.low[i]);
      yhi = std::max(yhi, s.high[i]);
    }
  }
  if (!std::isfinite(xlo)) throw std::runtime_error("line chart '" + title + "' has no finite data");
  const Axis x{xlo, xhi > xlo ? xhi : xlo + 1.0};
  const Axis y = padded(ylo, yhi, true);
  std::ostringstream os;
  os << header();
  frame(os, title, x_label, y_label, x, y, true);
  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = kPalette[k % std::size(kPalette)];
    std::ostringstream band_top, band_bottom, line;
    std::vector<std::pair<double, double>> lows;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (std::isnan(s.mean[i])) continue;
      const double px = x.map(s.x[i], x0, x1);
      band_top << num(px) << ',' << num(y.map(s.high[i], y0, y1)) << ' ';
      lows.emplace_back(px, y.map(s.low[i], y0, y1));
      line << num(px) << ',' << num(y.map(s.mean[i], y0, y1)) << ' ';
    }
    for (auto it = lows.rbegin(); it != lows.rend(); ++it) band_bottom << num(it->first) << ',' << num(it->second) << ' ';
    os << "<polygon points=\"" << band_top.str() << band_bottom.str() << "\" fill=\"" << color
       << "\" fill-opacity=\"0.2\" stroke=\"none\"/>\n";
    os << "<polyline points=\"" << line.str() << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    const double ly = kTop + 20 + 20.0 * static_cast<double>(k);
    os << "<line x1=\"" << x1 + 15 << "\" y1=\"" << ly << "\" x2=\"" << x1 + 35 << "\" y2=\"" << ly << "\" stroke=\""
       << color << "\" stroke-width=\"3\"/>\n";
    os << "<text x=\"" << x1 + 40 << "\" y=\"" << ly + 4 << "\" font-size=\"12\">" << escape(s.label) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string render_bar_chart(const std::string& title, const std::string& y_label, const std::vector<Bar>& bars) {
  if (bars.empty()) throw std::runtime_error("bar chart '" + title + "' has no bars");
  double lo = 0.0, hi = 0.0;
  for (const auto& b : bars) {
    lo = std::min({lo, b.low, b.mean});
    hi = std::max({hi, b.high, b.mean});
  }
  const Axis y = padded(lo, hi, true);
  std::ostringstream os;
  os << header();
  frame(os, title, "", y_label, Axis{0, 1}, y, false);
  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  const double slot = (x1 - x0) / static_cast<double>(bars.size());
  for (std::size_t k = 0; k < bars.size(); ++k) {
    const auto& b = bars[k];
    const double cx = x0 + slot * (static_cast<double>(k) + 0.5);
    const double top = y.map(b.mean, y0, y1), base = y.map(0.0, y0, y1);
    os << "<rect x=\"" << num(cx - slot * 0.3) << "\" y=\"" << num(std::min(top, base)) << "\" width=\""
       << num(slot * 0.6) << "\" height=\"" << num(std::abs(base - top)) << "\" fill=\""
       << kPalette[k % std::size(kPalette)] << "\"/>\n";
    os << "<line x1=\"" << num(cx) << "\" y1=\"" << num(y.map(b.low, y0, y1)) << "\" x2=\"" << num(cx)
       << "\" y2=\"" << num(y.map(b.high, y0, y1)) << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << num(cx) << "\" y=\"" << y0 + 17 << "\" text-anchor=\"middle\" font-size=\"12\">"
       << escape(b.label) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::vector<fs::path> emit_plots(const fs::path& input, const fs::path& output_arg) {
  const fs::path output = output_arg.empty() ? input : output_arg;
  const auto conds = condition_dirs(input);
  std::vector<Series> series;
  std::vector<std::pair<std::string, std::vector<CsvTable>>> evals;
  for (const auto& dir : conds) {
    const std::string label = dir.filename().string();
    std::vector<CsvTable> trains;
    for (const auto& s : seed_dirs(dir, "train.csv")) trains.push_back(read_csv(s / "train.csv"));
    if (!trains.empty()) {
      Series ser;
      ser.label = label;
      std::size_t rows = 0;
      for (const auto& t : trains) rows = std::max(rows, t.rows.size());
      for (std::size_t r = 0; r < rows; ++r) {
        std::vector<double> v;
        double ts = std::nan("");
        for (const auto& t : trains) {
          if (r >= t.rows.size()) continue;
          v.push_back(t.number(r, "mean_episode_duration"));
          ts = t.number(r, "timestep");
        }
        const auto ci = mean_ci95(v);
        ser.x.push_back(ts);
        ser.mean.push_back(ci.mean);
        ser.low.push_back(ci.low);
        ser.high.push_back(ci.high);
      }
      series.push_back(std::move(ser));
    }
    std::vector<CsvTable> ev;
    for (const auto& s : seed_dirs(dir, "eval.csv")) ev.push_back(read_csv(s / "eval.csv"));
    if (!ev.empty()) evals.emplace_back(label, std::move(ev));
  }
  if (series.empty() && evals.empty()) {
    throw std::runtime_error("no metrics found under " + input.string());
  }
  fs::create_directories(output);
  std::vector<fs::path> written;
  if (!series.empty()) {
    bool any = false;
    for (const auto& s : series)
      for (double m : s.mean) any = any || !std::isnan(m);
    if (!any) throw std::runtime_error("learning curves under " + input.string() + " contain no episodes");
    const auto path = output / "learning_curve.svg";
    write_file(path, render_line_chart("Episode duration", "timestep", "mean episode duration", series));
    written.push_back(path);
  }
  const std::vector<std::string> metrics{"mean_episode_duration", "pass_rate", "pass_when_partner_low",
                                         "partner_low_rate", "mean_possessor_drive", "mean_partner_drive",
                                         "var_partner_drive", "rescues"};
  for (const auto& metric : metrics) {
    std::vector<Bar> bars;
    for (const auto& [label, tables] : evals) {
      std::vector<double> v;
      for (const auto& t : tables) {
        for (std::size_t r = 0; r < t.rows.size(); ++r) {
          if (t.rows[r].at(0) == metric) v.push_back(t.number(r, "value"));
        }
      }
      if (v.empty()) continue;
      const auto ci = mean_ci95(v);
      bars.push_back({label, ci.mean, ci.low, ci.high});
    }
    if (bars.empty()) continue;
    const auto path = output / ("bars_" + metric + ".svg");
    write_file(path, render_bar_chart(metric, metric, bars));
    written.push_back(path);
  }
  return written;
}

}  // namespace homeo
