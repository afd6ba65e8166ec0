#pragma once

#include <span>
#include <vector>

#include "serialtrack/errors.hpp"

namespace serialtrack {

struct Point2D {
    double x = 0.0;
    double y = 0.0;
};

inline Point2D operator+(Point2D a, Point2D b) { return {a.x + b.x, a.y + b.y}; }
inline Point2D operator-(Point2D a, Point2D b) { return {a.x - b.x, a.y - b.y}; }

double distance(Point2D a, Point2D b);

// Axis-aligned box, corner form. Degenerate extents are rejected at
// construction so the IoU routines never see zero-area shapes.
struct BBox {
    double x_min, y_min, x_max, y_max;

    BBox(double x0, double y0, double x1, double y1);

    double width() const { return x_max - x_min; }
    double height() const { return y_max - y_min; }
    double area() const { return width() * height(); }
    Point2D center() const { return {0.5 * (x_min + x_max), 0.5 * (y_min + y_max)}; }
    BBox translated(double dx, double dy) const {
        return {x_min + dx, y_min + dy, x_max + dx, y_max + dy};
    }
};

struct Circle {
    Point2D center;
    double radius;

    Circle(Point2D c, double r);
    double area() const;
    BBox bounding_box() const;
};

// Strictly convex, counter-clockwise, built as the convex hull of the input
// points. Near-duplicate vertices (within 1e-9) and colinear runs are merged;
// starting vertex is the lexicographically smallest so equal point sets yield
// identical representations.
class ConvexPolygon {
public:
    static ConvexPolygon hull_of(std::span<const Point2D> points);

    const std::vector<Point2D>& vertices() const { return vertices_; }
    double area() const;
    BBox bounding_box() const;
    bool contains(Point2D p) const;

private:
    ConvexPolygon() = default;
    std::vector<Point2D> vertices_;
};

ConvexPolygon box_to_polygon(const BBox& b);

// Intersection of two convex polygons (Sutherland-Hodgman clip of a by b).
// Result area may be zero, returned as the clipped vertex list.
std::vector<Point2D> clip_convex(const ConvexPolygon& subject, const ConvexPolygon& clip);

double polygon_area(std::span<const Point2D> vertices);  // shoelace, CCW positive

double iou_box(const BBox& a, const BBox& b);
double iou_polygon(const ConvexPolygon& a, const ConvexPolygon& b);
double iou_circle(const Circle& a, const Circle& b);
double intersection_area(const ConvexPolygon& a, const ConvexPolygon& b);

}  // namespace serialtrack
