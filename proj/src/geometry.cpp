#include "serialtrack/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace serialtrack {

namespace {

constexpr double kMergeTol = 1e-9;
constexpr double kPi = 3.14159265358979323846264338327950288;

bool finite(Point2D p) { return std::isfinite(p.x) && std::isfinite(p.y); }

double cross(Point2D o, Point2D a, Point2D b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

}  // namespace

double distance(Point2D a, Point2D b) { return std::hypot(a.x - b.x, a.y - b.y); }

BBox::BBox(double x0, double y0, double x1, double y1)
    : x_min(x0), y_min(y0), x_max(x1), y_max(y1) {
    if (!std::isfinite(x0) || !std::isfinite(y0) || !std::isfinite(x1) || !std::isfinite(y1))
        throw DegenerateGeometry("box coordinates must be finite");
    if (!(x_min < x_max) || !(y_min < y_max))
        throw DegenerateGeometry("box must have positive extent");
}

Circle::Circle(Point2D c, double r) : center(c), radius(r) {
    if (!finite(c) || !std::isfinite(r) || !(r > 0.0))
        throw DegenerateGeometry("circle must have finite center and positive radius");
}

double Circle::area() const { return kPi * radius * radius; }

BBox Circle::bounding_box() const {
    return {center.x - radius, center.y - radius, center.x + radius, center.y + radius};
}

ConvexPolygon ConvexPolygon::hull_of(std::span<const Point2D> points) {
    std::vector<Point2D> pts(points.begin(), points.end());
    for (const Point2D& p : pts)
        if (!finite(p)) throw DegenerateGeometry("polygon vertices must be finite");

    std::sort(pts.begin(), pts.end(), [](Point2D a, Point2D b) {
        return a.x < b.x || (a.x == b.x && a.y < b.y);
    });
    pts.erase(std::unique(pts.begin(), pts.end(),
                          [](Point2D a, Point2D b) {
                              return std::abs(a.x - b.x) <= kMergeTol &&
                                     std::abs(a.y - b.y) <= kMergeTol;
                          }),
              pts.end());
    if (pts.size() < 3) throw DegenerateGeometry("polygon needs at least 3 distinct vertices");

    // Monotone chain; strict turns drop colinear vertices.
    std::vector<Point2D> hull(2 * pts.size());
    std::size_t k = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
        hull[k++] = pts[i];
    }
    const std::size_t lower = k + 1;
    for (std::size_t i = pts.size() - 1; i-- > 0;) {
        while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    if (hull.size() < 3 || polygon_area(hull) <= 0.0)
        throw DegenerateGeometry("points are colinear; no convex polygon");

    ConvexPolygon poly;
    poly.vertices_ = std::move(hull);
    return poly;
}

double polygon_area(std::span<const Point2D> v) {
    double acc = 0.0;
    for (std::size_t i = 0, n = v.size(); i < n; ++i) {
        const Point2D& a = v[i];
        const Point2D& b = v[(i + 1) % n];
        acc += a.x * b.y - b.x * a.y;
    }
    return 0.5 * acc;
}

double ConvexPolygon::area() const { return polygon_area(vertices_); }

BBox ConvexPolygon::bounding_box() const {
    double x0 = vertices_[0].x, y0 = vertices_[0].y, x1 = x0, y1 = y0;
    for (const Point2D& p : vertices_) {
        x0 = std::min(x0, p.x);
        y0 = std::min(y0, p.y);
        x1 = std::max(x1, p.x);
        y1 = std::max(y1, p.y);
    }
    return {x0, y0, x1, y1};
}

bool ConvexPolygon::contains(Point2D p) const {
    for (std::size_t i = 0, n = vertices_.size(); i < n; ++i)
        if (cross(vertices_[i], vertices_[(i + 1) % n], p) < 0.0) return false;
    return true;
}

ConvexPolygon box_to_polygon(const BBox& b) {
    const Point2D corners[4] = {
        {b.x_min, b.y_min}, {b.x_max, b.y_min}, {b.x_max, b.y_max}, {b.x_min, b.y_max}};
    return ConvexPolygon::hull_of(corners);
}

std::vector<Point2D> clip_convex(const ConvexPolygon& subject, const ConvexPolygon& clip) {
    std::vector<Point2D> output(subject.vertices().begin(), subject.vertices().end());
    std::vector<Point2D> input;
    const std::vector<Point2D>& cv = clip.vertices();

    for (std::size_t e = 0, m = cv.size(); e < m && !output.empty(); ++e) {
        const Point2D a = cv[e];
        const Point2D b = cv[(e + 1) % m];
        input.swap(output);
        output.clear();

        for (std::size_t i = 0, n = input.size(); i < n; ++i) {
            const Point2D cur = input[i];
            const Point2D prev = input[(i + n - 1) % n];
            const double side_cur = cross(a, b, cur);
            const double side_prev = cross(a, b, prev);
            const bool in_cur = side_cur >= 0.0;
            const bool in_prev = side_prev >= 0.0;

            if (in_cur != in_prev) {
                const double t = side_prev / (side_prev - side_cur);
                output.push_back({prev.x + t * (cur.x - prev.x), prev.y + t * (cur.y - prev.y)});
            }
            if (in_cur) output.push_back(cur);
        }
    }
    return output;
}

double intersection_area(const ConvexPolygon& a, const ConvexPolygon& b) {
    const std::vector<Point2D> inter = clip_convex(a, b);
    if (inter.size() < 3) return 0.0;
    const double raw = polygon_area(inter);
    return std::clamp(raw, 0.0, std::min(a.area(), b.area()));
}

double iou_box(const BBox& a, const BBox& b) {
    const double iw = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
    const double ih = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
    if (iw <= 0.0 || ih <= 0.0) return 0.0;
    const double inter = iw * ih;
    return inter / (a.area() + b.area() - inter);
}

double iou_polygon(const ConvexPolygon& a, const ConvexPolygon& b) {
    const double inter = intersection_area(a, b);
    if (inter <= 0.0) return 0.0;
    const double uni = a.area() + b.area() - inter;
    return std::clamp(inter / uni, 0.0, 1.0);
}

double iou_circle(const Circle& a, const Circle& b) {
    const double d = distance(a.center, b.center);
    const double r1 = a.radius, r2 = b.radius;
    if (d >= r1 + r2) return 0.0;

    double inter;
    if (d <= std::abs(r1 - r2)) {
        const double r = std::min(r1, r2);
        inter = kPi * r * r;
    } else {
        // Circular lens: two segment areas.
        const double c1 = std::clamp((d * d + r1 * r1 - r2 * r2) / (2.0 * d * r1), -1.0, 1.0);
        const double c2 = std::clamp((d * d + r2 * r2 - r1 * r1) / (2.0 * d * r2), -1.0, 1.0);
        const double k = (-d + r1 + r2) * (d + r1 - r2) * (d - r1 + r2) * (d + r1 + r2);
        inter = r1 * r1 * std::acos(c1) + r2 * r2 * std::acos(c2) -
                0.5 * std::sqrt(std::max(k, 0.0));
    }
    const double uni = a.area() + b.area() - inter;
    return std::clamp(inter / uni, 0.0, 1.0);
}

}  // namespace serialtrack
