#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "serialtrack/geometry.hpp"
#include "serialtrack/transform.hpp"

// Data-parallel inner loops of the pipeline. Every kernel comes in two
// flavors: *_parallel (OpenMP, the one the modules call) and *_serial (plain
// reference loop kept for equivalence tests and the benchmark). Both compute
// element values independently, so results are bit-identical regardless of
// thread count.
namespace serialtrack::kernels {

void set_max_threads(int n);  // 0 = library default

// Fixed-point displacement-field inversion; throws NonConvergent.
DisplacementField invert_field_serial(const DisplacementField& f, double tol, int max_iter);
DisplacementField invert_field_parallel(const DisplacementField& f, double tol, int max_iter);

// Box corners carried around one registration cycle: f_t forward, f_t1
// forward, b_t inverse, then the convex hull of the returned corners.
ConvexPolygon cycle_polygon(const BBox& box, const PairTransform& f_t,
                            const PairTransform& f_t1, const PairTransform& b_t);

// Per-box IoU between each box and its cycled polygon.
std::vector<double> cycle_box_ious_serial(const std::vector<BBox>& boxes,
                                          const PairTransform& f_t,
                                          const PairTransform& f_t1,
                                          const PairTransform& b_t);
std::vector<double> cycle_box_ious_parallel(const std::vector<BBox>& boxes,
                                            const PairTransform& f_t,
                                            const PairTransform& f_t1,
                                            const PairTransform& b_t);

// Affinity matrix values, row-major rows=early, cols=late. Each late shape is
// pulled back into the early section's space through tr's inverse.
std::vector<double> affinity_boxes_serial(const std::vector<BBox>& early,
                                          const std::vector<BBox>& late,
                                          const PairTransform& tr);
std::vector<double> affinity_boxes_parallel(const std::vector<BBox>& early,
                                            const std::vector<BBox>& late,
                                            const PairTransform& tr);
std::vector<double> affinity_circles_serial(const std::vector<Circle>& early,
                                            const std::vector<Circle>& late,
                                            const PairTransform& tr);
std::vector<double> affinity_circles_parallel(const std::vector<Circle>& early,
                                              const std::vector<Circle>& late,
                                              const PairTransform& tr);

// Thin-plate-spline displacement sampled onto a grid. weights_* hold the N
// radial coefficients followed by the 3 polynomial terms (1, x, y).
std::pair<std::vector<double>, std::vector<double>> tps_grid_sample_serial(
    const std::vector<Point2D>& centers, const std::vector<double>& weights_x,
    const std::vector<double>& weights_y, const GridSpec& grid);
std::pair<std::vector<double>, std::vector<double>> tps_grid_sample_parallel(
    const std::vector<Point2D>& centers, const std::vector<double>& weights_x,
    const std::vector<double>& weights_y, const GridSpec& grid);

// IoU between each box and a randomly-shifted copy (fixed shift magnitude,
// uniform direction), trials x boxes values. Randomness is counter-based per
// (trial, box), so ordering and thread count do not matter.
std::vector<double> shifted_box_ious_serial(const std::vector<BBox>& boxes,
                                            double magnitude, int trials,
                                            std::uint64_t seed);
std::vector<double> shifted_box_ious_parallel(const std::vector<BBox>& boxes,
                                              double magnitude, int trials,
                                              std::uint64_t seed);

double tps_kernel(double r2);  // r^2 log r^2, 0 at r = 0

}  // namespace serialtrack::kernels
