#pragma once

#include <optional>
#include <span>
#include <string>

#include "hais/anneal.hpp"

namespace hais {

struct SweepPlotOptions {
  std::optional<double> truth;  // drawn as a dashed horizontal line
  std::string title = "log Z vs intermediate distributions";
};

/// Scatter of log Z against N (log-scaled x axis), one marker style per
/// estimator, with the analytic value as a dashed reference line when known.
std::string render_sweep_svg(std::span<const SweepRow> rows, const SweepPlotOptions& options);

}  // namespace hais
