#include "serialtrack/kernels.hpp"

#include <omp.h>

#include <cmath>

#include "serialtrack/rng.hpp"

namespace serialtrack::kernels {

namespace {

// One fixed-point sweep: next(p) = -f(p + g(p)) at every grid node.
void fixed_point_sweep(const DisplacementField& f, const DisplacementField& g_field,
                       std::vector<double>& nx, std::vector<double>& ny, bool parallel) {
    const int w = f.width(), h = f.height();
    const std::int64_t n = static_cast<std::int64_t>(w) * h;
#pragma omp parallel for schedule(static) if (parallel)
    for (std::int64_t i = 0; i < n; ++i) {
        const int ix = static_cast<int>(i % w);
        const int iy = static_cast<int>(i / w);
        const Point2D p = f.grid_point(ix, iy);
        const Point2D q = apply_field(g_field, p);
        const Point2D d = f.displacement(q);
        nx[i] = -d.x;
        ny[i] = -d.y;
    }
}

double roundtrip_residual(const DisplacementField& f, const DisplacementField& g,
                          bool parallel) {
    const int w = f.width(), h = f.height();
    const std::int64_t n = static_cast<std::int64_t>(w) * h;
    double worst = 0.0;
#pragma omp parallel for schedule(static) reduction(max : worst) if (parallel)
    for (std::int64_t i = 0; i < n; ++i) {
        const int ix = static_cast<int>(i % w);
        const int iy = static_cast<int>(i / w);
        const Point2D p = f.grid_point(ix, iy);
        const Point2D back = apply_field(g, apply_field(f, p));
        worst = std::max(worst, std::hypot(back.x - p.x, back.y - p.y));
    }
    return worst;
}

DisplacementField invert_field_impl(const DisplacementField& f, double tol, int max_iter,
                                    bool parallel) {
    const int w = f.width(), h = f.height();
    const std::size_t n = static_cast<std::size_t>(w) * h;

    std::vector<double> gx(n), gy(n);
    for (std::size_t i = 0; i < n; ++i) {
        gx[i] = -f.dx()[i];
        gy[i] = -f.dy()[i];
    }

    double residual = 0.0;
    for (int iter = 0; iter < max_iter; ++iter) {
        DisplacementField g(f.origin(), f.spacing(), w, h, gx, gy);
        residual = roundtrip_residual(f, g, parallel);
        if (residual <= tol) return g;

        std::vector<double> nx(n), ny(n);
        fixed_point_sweep(f, g, nx, ny, parallel);
        gx.swap(nx);
        gy.swap(ny);
    }
    DisplacementField g(f.origin(), f.spacing(), w, h, std::move(gx), std::move(gy));
    residual = roundtrip_residual(f, g, parallel);
    if (residual <= tol) return g;
    throw NonConvergent("field inversion residual " + std::to_string(residual) +
                            " above tolerance " + std::to_string(tol),
                        residual);
}

inline double cycle_iou_one(const BBox& box, const PairTransform& f_t,
                            const PairTransform& f_t1, const PairTransform& b_t) {
    return iou_polygon(box_to_polygon(box), cycle_polygon(box, f_t, f_t1, b_t));
}

std::vector<double> cycle_box_ious_impl(const std::vector<BBox>& boxes,
                                        const PairTransform& f_t, const PairTransform& f_t1,
                                        const PairTransform& b_t, bool parallel) {
    std::vector<double> out(boxes.size());
    const std::int64_t n = static_cast<std::int64_t>(boxes.size());
#pragma omp parallel for schedule(static) if (parallel)
    for (std::int64_t i = 0; i < n; ++i) out[i] = cycle_iou_one(boxes[i], f_t, f_t1, b_t);
    return out;
}

std::vector<double> affinity_boxes_impl(const std::vector<BBox>& early,
                                        const std::vector<BBox>& late,
                                        const PairTransform& tr, bool parallel) {
    const std::int64_t rows = static_cast<std::int64_t>(early.size());
    const std::int64_t cols = static_cast<std::int64_t>(late.size());
    std::vector<double> values(static_cast<std::size_t>(rows * cols), 0.0);
    if (rows == 0 || cols == 0) return values;

    // Pull every late box back once, then score all pairs.
    std::vector<ConvexPolygon> pulled;
    pulled.reserve(late.size());
    for (const BBox& b : late) pulled.push_back(tr.map_box(b, MapDirection::inverse));

    std::vector<ConvexPolygon> early_polys;
    early_polys.reserve(early.size());
    for (const BBox& b : early) early_polys.push_back(box_to_polygon(b));

#pragma omp parallel for schedule(static) collapse(2) if (parallel)
    for (std::int64_t r = 0; r < rows; ++r)
        for (std::int64_t c = 0; c < cols; ++c)
            values[r * cols + c] = iou_polygon(early_polys[r], pulled[c]);
    return values;
}

std::vector<double> affinity_circles_impl(const std::vector<Circle>& early,
                                          const std::vector<Circle>& late,
                                          const PairTransform& tr, bool parallel) {
    const std::int64_t rows = static_cast<std::int64_t>(early.size());
    const std::int64_t cols = static_cast<std::int64_t>(late.size());
    std::vector<double> values(static_cast<std::size_t>(rows * cols), 0.0);
    if (rows == 0 || cols == 0) return values;

    std::vector<Circle> pulled;
    pulled.reserve(late.size());
    for (const Circle& c : late) pulled.push_back(tr.map_circle(c, MapDirection::inverse));

#pragma omp parallel for schedule(static) collapse(2) if (parallel)
    for (std::int64_t r = 0; r < rows; ++r)
        for (std::int64_t c = 0; c < cols; ++c)
            values[r * cols + c] = iou_circle(early[r], pulled[c]);
    return values;
}

std::pair<std::vector<double>, std::vector<double>> tps_grid_sample_impl(
    const std::vector<Point2D>& centers, const std::vector<double>& wx,
    const std::vector<double>& wy, const GridSpec& grid, bool parallel) {
    const std::size_t nc = centers.size();
    const std::int64_t nodes = static_cast<std::int64_t>(grid.width) * grid.height;
    std::vector<double> dx(static_cast<std::size_t>(nodes));
    std::vector<double> dy(static_cast<std::size_t>(nodes));

#pragma omp parallel for schedule(static) if (parallel)
    for (std::int64_t i = 0; i < nodes; ++i) {
        const int ix = static_cast<int>(i % grid.width);
        const int iy = static_cast<int>(i / grid.width);
        const double px = grid.origin.x + grid.spacing * ix;
        const double py = grid.origin.y + grid.spacing * iy;

        double sx = wx[nc] + wx[nc + 1] * px + wx[nc + 2] * py;
        double sy = wy[nc] + wy[nc + 1] * px + wy[nc + 2] * py;
        for (std::size_t c = 0; c < nc; ++c) {
            const double ddx = px - centers[c].x;
            const double ddy = py - centers[c].y;
            const double u = tps_kernel(ddx * ddx + ddy * ddy);
            sx += wx[c] * u;
            sy += wy[c] * u;
        }
        dx[i] = sx;
        dy[i] = sy;
    }
    return {std::move(dx), std::move(dy)};
}

std::vector<double> shifted_box_ious_impl(const std::vector<BBox>& boxes, double magnitude,
                                          int trials, std::uint64_t seed, bool parallel) {
    const std::int64_t nb = static_cast<std::int64_t>(boxes.size());
    const std::int64_t total = nb * trials;
    std::vector<double> out(static_cast<std::size_t>(total));
#pragma omp parallel for schedule(static) if (parallel)
    for (std::int64_t i = 0; i < total; ++i) {
        const std::int64_t trial = i / nb;
        const std::int64_t b = i % nb;
        RngStream rng = RngStream::substream(seed, static_cast<std::uint64_t>(trial),
                                             static_cast<std::uint64_t>(b));
        const double angle = rng.uniform(0.0, 6.283185307179586476925286766559);
        const BBox shifted =
            boxes[b].translated(magnitude * std::cos(angle), magnitude * std::sin(angle));
        out[i] = iou_box(boxes[b], shifted);
    }
    return out;
}

}  // namespace

void set_max_threads(int n) {
    if (n > 0) omp_set_num_threads(n);
}

double tps_kernel(double r2) { return r2 > 0.0 ? r2 * std::log(r2) : 0.0; }

ConvexPolygon cycle_polygon(const BBox& box, const PairTransform& f_t,
                            const PairTransform& f_t1, const PairTransform& b_t) {
    const Point2D corners[4] = {{box.x_min, box.y_min},
                                {box.x_max, box.y_min},
                                {box.x_max, box.y_max},
                                {box.x_min, box.y_max}};
    Point2D cycled[4];
    for (int i = 0; i < 4; ++i) {
        Point2D p = f_t.map_point(corners[i], MapDirection::forward);
        p = f_t1.map_point(p, MapDirection::forward);
        cycled[i] = b_t.map_point(p, MapDirection::inverse);
    }
    return ConvexPolygon::hull_of(cycled);
}

DisplacementField invert_field_serial(const DisplacementField& f, double tol, int max_iter) {
    return invert_field_impl(f, tol, max_iter, false);
}
DisplacementField invert_field_parallel(const DisplacementField& f, double tol, int max_iter) {
    return invert_field_impl(f, tol, max_iter, true);
}

std::vector<double> cycle_box_ious_serial(const std::vector<BBox>& boxes,
                                          const PairTransform& f_t, const PairTransform& f_t1,
                                          const PairTransform& b_t) {
    return cycle_box_ious_impl(boxes, f_t, f_t1, b_t, false);
}
std::vector<double> cycle_box_ious_parallel(const std::vector<BBox>& boxes,
                                            const PairTransform& f_t, const PairTransform& f_t1,
                                            const PairTransform& b_t) {
    return cycle_box_ious_impl(boxes, f_t, f_t1, b_t, true);
}

std::vector<double> affinity_boxes_serial(const std::vector<BBox>& early,
                                          const std::vector<BBox>& late,
                                          const PairTransform& tr) {
    return affinity_boxes_impl(early, late, tr, false);
}
std::vector<double> affinity_boxes_parallel(const std::vector<BBox>& early,
                                            const std::vector<BBox>& late,
                                            const PairTransform& tr) {
    return affinity_boxes_impl(early, late, tr, true);
}
std::vector<double> affinity_circles_serial(const std::vector<Circle>& early,
                                            const std::vector<Circle>& late,
                                            const PairTransform& tr) {
    return affinity_circles_impl(early, late, tr, false);
}
std::vector<double> affinity_circles_parallel(const std::vector<Circle>& early,
                                              const std::vector<Circle>& late,
                                              const PairTransform& tr) {
    return affinity_circles_impl(early, late, tr, true);
}

std::pair<std::vector<double>, std::vector<double>> tps_grid_sample_serial(
    const std::vector<Point2D>& centers, const std::vector<double>& weights_x,
    const std::vector<double>& weights_y, const GridSpec& grid) {
    return tps_grid_sample_impl(centers, weights_x, weights_y, grid, false);
}
std::pair<std::vector<double>, std::vector<double>> tps_grid_sample_parallel(
    const std::vector<Point2D>& centers, const std::vector<double>& weights_x,
    const std::vector<double>& weights_y, const GridSpec& grid) {
    return tps_grid_sample_impl(centers, weights_x, weights_y, grid, true);
}

std::vector<double> shifted_box_ious_serial(const std::vector<BBox>& boxes, double magnitude,
                                            int trials, std::uint64_t seed) {
    return shifted_box_ious_impl(boxes, magnitude, trials, seed, false);
}
std::vector<double> shifted_box_ious_parallel(const std::vector<BBox>& boxes, double magnitude,
                                              int trials, std::uint64_t seed) {
    return shifted_box_ious_impl(boxes, magnitude, trials, seed, true);
}

}  // namespace serialtrack::kernels
