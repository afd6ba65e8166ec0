#pragma once

#include <vector>

#include "serialtrack/geometry.hpp"
#include "serialtrack/rng.hpp"

namespace serialtrack::testing {

inline BBox random_box(RngStream& rng, double extent = 100.0) {
    const double x = rng.uniform(-extent, extent);
    const double y = rng.uniform(-extent, extent);
    const double w = rng.uniform(1.0, extent / 2);
    const double h = rng.uniform(1.0, extent / 2);
    return {x, y, x + w, y + h};
}

inline Circle random_circle(RngStream& rng, double extent = 100.0) {
    return {{rng.uniform(-extent, extent), rng.uniform(-extent, extent)},
            rng.uniform(1.0, extent / 3)};
}

// Hull of 4-10 random points; retried until non-degenerate.
inline ConvexPolygon random_polygon(RngStream& rng, double extent = 100.0) {
    while (true) {
        const int n = 4 + static_cast<int>(rng.next_below(7));
        const double cx = rng.uniform(-extent, extent);
        const double cy = rng.uniform(-extent, extent);
        std::vector<Point2D> pts;
        pts.reserve(n);
        for (int i = 0; i < n; ++i)
            pts.push_back({cx + rng.uniform(-extent / 3, extent / 3),
                           cy + rng.uniform(-extent / 3, extent / 3)});
        try {
            return ConvexPolygon::hull_of(pts);
        } catch (const DegenerateGeometry&) {
        }
    }
}

inline ConvexPolygon rotated(const ConvexPolygon& poly, double radians, Point2D about) {
    const double c = std::cos(radians), s = std::sin(radians);
    std::vector<Point2D> pts;
    for (const Point2D& p : poly.vertices()) {
        const double dx = p.x - about.x, dy = p.y - about.y;
        pts.push_back({about.x + c * dx - s * dy, about.y + s * dx + c * dy});
    }
    return ConvexPolygon::hull_of(pts);
}

}  // namespace serialtrack::testing
