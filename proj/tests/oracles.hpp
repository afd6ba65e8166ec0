#pragma once

// Independent reference implementations used only by tests. Everything here
// is deliberately brute-force and stays clear of the library's fast paths.

#include <cstdint>
#include <filesystem>
#include <map>
#include <vector>

#include "serialtrack/geometry.hpp"
#include "serialtrack/mot_metrics.hpp"

namespace serialtrack::oracles {

// IoU by rasterizing both polygons over their joint bounding box and counting
// cell centers. cells_per_axis bounds the grid resolution.
double raster_iou(const ConvexPolygon& a, const ConvexPolygon& b, int cells_per_axis = 2000);

// IoU of two circles by Monte-Carlo sampling over the union's bounding box.
double monte_carlo_circle_iou(const Circle& a, const Circle& b, std::int64_t samples,
                              std::uint64_t seed);

// Minimal assignment cost by trying every permutation (rows <= cols <= 8).
double brute_force_assignment_cost(const std::vector<std::vector<double>>& cost);

// Maximum-overlap identity matching by exhaustive search over injective
// gt-to-hypothesis mappings; returns the resulting idtp.
std::size_t brute_force_idtp(const FrameSet& gt, const FrameSet& hyp, double match_iou);

// Recursive byte comparison of two directory trees.
bool trees_identical(const std::filesystem::path& a, const std::filesystem::path& b);

}  // namespace serialtrack::oracles
