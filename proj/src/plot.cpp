#include "skillmix/plot.hpp"

#include "skillmix/io.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>
#include <stdexcept>

namespace skillmix {

namespace {

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                          "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

std::string render_line_chart_svg(const std::string& title,
                                  const std::vector<std::string>& series_names,
                                  const std::vector<std::vector<double>>& series_values) {
  const double width = 640, height = 420;
  const double left = 60, right = 20, top = 40, bottom = 40;

  double lo = 0.0, hi = 1e-12;
  std::size_t max_len = 0;
  for (const auto& s : series_values) {
    max_len = std::max(max_len, s.size());
    for (double v : s) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (hi <= lo) hi = lo + 1.0;
  const double x_span = max_len > 1 ? static_cast<double>(max_len - 1) : 1.0;

  auto px = [&](std::size_t i) { return left + (width - left - right) * (i / x_span); };
  auto py = [&](double v) {
    return height - bottom - (height - top - bottom) * ((v - lo) / (hi - lo));
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
      << title << "</text>\n";
  // Axes.
  svg << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\""
      << height - bottom << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << left << "\" y1=\"" << height - bottom << "\" x2=\"" << width - right
      << "\" y2=\"" << height - bottom << "\" stroke=\"black\"/>\n";
  svg << "<text x=\"" << left - 8 << "\" y=\"" << py(hi) + 4
      << "\" text-anchor=\"end\" font-size=\"10\">" << fmt(hi) << "</text>\n";
  svg << "<text x=\"" << left - 8 << "\" y=\"" << py(lo) + 4
      << "\" text-anchor=\"end\" font-size=\"10\">" << fmt(lo) << "</text>\n";
  svg << "<text x=\"" << width - right << "\" y=\"" << height - bottom + 16
      << "\" text-anchor=\"end\" font-size=\"10\">round " << (max_len ? max_len - 1 : 0)
      << "</text>\n";

  for (std::size_t s = 0; s < series_values.size(); ++s) {
    const auto& vals = series_values[s];
    if (vals.empty()) continue;
    const char* color = kPalette[s % (sizeof(kPalette) / sizeof(kPalette[0]))];
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < vals.size(); ++i) {
      if (i > 0) svg << " ";
      svg << fmt(px(i)) << "," << fmt(py(vals[i]));
    }
    svg << "\"/>\n";
    svg << "<text x=\"" << width - right - 4 << "\" y=\"" << top + 14 * (s + 1)
        << "\" text-anchor=\"end\" font-size=\"10\" fill=\"" << color << "\">"
        << (s < series_names.size() ? series_names[s] : "series") << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

std::vector<std::string> export_plots(const std::vector<RunLog>& logs,
                                      const std::vector<std::string>& eval_names,
                                      const std::string& out_dir) {
  if (logs.empty()) throw std::invalid_argument("no data");
  for (const auto& log : logs) {
    if (log.rounds.empty()) throw std::invalid_argument("no data");
  }
  std::filesystem::create_directories(out_dir);

  const Eigen::Index m = logs.front().rounds.front().losses_before.size();
  auto skill_name = [&](Eigen::Index j) {
    return j < static_cast<Eigen::Index>(eval_names.size()) ? eval_names[j]
                                                            : "skill" + std::to_string(j + 1);
  };

  std::vector<std::string> written;
  auto emit = [&](const std::string& rel, const std::string& content) {
    write_text_file(out_dir + "/" + rel, content);
    written.push_back(rel);
  };

  // Per-(selector, skill) series files.
  for (const auto& log : logs) {
    for (Eigen::Index j = 0; j < m; ++j) {
      std::ostringstream csv;
      csv << "round,loss\n";
      csv << "0," << format_double(log.rounds.front().losses_before(j)) << "\n";
      for (const auto& r : log.rounds) {
        csv << r.round << "," << format_double(r.losses_after(j)) << "\n";
      }
      emit(log.config.label + "__" + skill_name(j) + ".csv", csv.str());
    }
  }

  // One loss chart per skill, all selectors overlaid.
  for (Eigen::Index j = 0; j < m; ++j) {
    std::vector<std::string> names;
    std::vector<std::vector<double>> series;
    for (const auto& log : logs) {
      names.push_back(log.config.label);
      std::vector<double> vals{log.rounds.front().losses_before(j)};
      for (const auto& r : log.rounds) vals.push_back(r.losses_after(j));
      series.push_back(std::move(vals));
    }
    emit("loss_" + skill_name(j) + ".svg",
         render_line_chart_svg("validation loss: " + skill_name(j), names, series));
  }

  // One mixture-trajectory chart per selector.
  for (const auto& log : logs) {
    const Eigen::Index k = log.rounds.front().mixture.size();
    std::vector<std::string> names;
    std::vector<std::vector<double>> series(k);
    for (Eigen::Index i = 0; i < k; ++i) names.push_back("skill " + std::to_string(i + 1));
    for (const auto& r : log.rounds) {
      for (Eigen::Index i = 0; i < k; ++i) series[i].push_back(r.mixture(i));
    }
    emit("mixture_" + log.config.label + ".svg",
         render_line_chart_svg("mixture weights: " + log.config.label, names, series));
  }
  return written;
}

}  // namespace skillmix
