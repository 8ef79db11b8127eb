#pragma once

#include "skillmix/core.hpp"

#include <string>
#include <vector>

namespace skillmix {

/// Writes, under `out_dir`:
///   - one `<label>__<skill>.csv` round/loss series per (selector, skill),
///   - one `loss_<skill>.svg` line chart per eval skill with all selectors,
///   - one `mixture_<label>.svg` weight-trajectory chart per selector.
/// Series are round-boundary values: row 0 is the loss before round 1, row t
/// the loss after round t, exactly as recorded in the run log.
/// Returns the relative paths written. Throws "no data" when logs are empty.
std::vector<std::string> export_plots(const std::vector<RunLog>& logs,
                                      const std::vector<std::string>& eval_names,
                                      const std::string& out_dir);

/// A single polyline chart (shared by the loss and mixture plots).
std::string render_line_chart_svg(const std::string& title,
                                  const std::vector<std::string>& series_names,
                                  const std::vector<std::vector<double>>& series_values);

}  // namespace skillmix
