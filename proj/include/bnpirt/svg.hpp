#pragma once

#include <span>
#include <string>
#include <vector>

#include "bnpirt/diagnostics.hpp"

namespace bnpirt {

/// Horizontal box plots (full range whiskers, interquartile box, median) for
/// the named parameters; all parameters when `names` is empty.
std::string box_plot_svg(const PosteriorSummary& summary, const std::vector<std::string>& names = {});

/// Line plot of one chain, thinned to at most `max_points` evenly spaced draws.
std::string trace_plot_svg(const std::string& parameter, std::span<const double> values,
                           std::size_t max_points = 5000);

}  // namespace bnpirt
