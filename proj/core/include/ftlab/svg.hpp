#pragma once

#include <string>
#include <vector>

namespace ftlab {

// Hand-rolled deterministic SVG renderers for report artifacts.

// One box (quartiles + whiskers + outlier dots) per named group.
std::string svg_boxplot(const std::vector<std::pair<std::string, std::vector<double>>>& groups);

// Single polyline chart, e.g. perplexity over k.
std::string svg_line_chart(const std::vector<double>& xs, const std::vector<double>& ys, const std::string& x_label,
                           const std::string& y_label);

// Marching-squares contour plot with a fixed number of levels.
std::string svg_contour(const std::vector<double>& a_values, const std::vector<double>& b_values,
                        const std::vector<double>& grid, int levels = 10);

}  // namespace ftlab
