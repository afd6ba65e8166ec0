#pragma once

#include <array>
#include <optional>
#include <vector>

#include "serialtrack/geometry.hpp"

namespace serialtrack {

// Homogeneous 2D affine map, row-major 3x3 with fixed last row (0,0,1).
class AffineTransform2D {
public:
    AffineTransform2D();  // identity
    AffineTransform2D(double m00, double m01, double m02,
                      double m10, double m11, double m12);

    static AffineTransform2D translation(double dx, double dy);
    static AffineTransform2D rotation(double radians);  // about the origin
    static AffineTransform2D similarity(double scale, double radians, double dx, double dy);

    double at(int row, int col) const;
    std::array<double, 9> matrix() const;  // full 3x3, row-major
    double det2x2() const { return m_[0] * m_[4] - m_[1] * m_[3]; }
    // |det| of the linear part, i.e. the local area scale; sqrt gives the
    // isotropic length scale used for circle radii.
    double length_scale() const;

    Point2D operator()(Point2D p) const;
    AffineTransform2D compose(const AffineTransform2D& inner) const;  // this after inner

private:
    std::array<double, 6> m_;  // m00 m01 m02 m10 m11 m12
};

Point2D apply_affine(const AffineTransform2D& t, Point2D p);
AffineTransform2D invert_affine(const AffineTransform2D& t);  // throws SingularTransform

// Dense displacement sampled on a regular grid; queries outside the grid
// clamp to the nearest edge so boundary detections never error out.
class DisplacementField {
public:
    DisplacementField(Point2D origin, double spacing, int width, int height,
                      std::vector<double> dx, std::vector<double> dy);

    static DisplacementField zero(Point2D origin, double spacing, int width, int height);

    Point2D origin() const { return origin_; }
    double spacing() const { return spacing_; }
    int width() const { return width_; }
    int height() const { return height_; }
    const std::vector<double>& dx() const { return dx_; }
    const std::vector<double>& dy() const { return dy_; }

    // Bilinear displacement at p (clamped).
    Point2D displacement(Point2D p) const;
    Point2D grid_point(int ix, int iy) const {
        return {origin_.x + spacing_ * ix, origin_.y + spacing_ * iy};
    }

private:
    Point2D origin_;
    double spacing_;
    int width_, height_;
    std::vector<double> dx_, dy_;  // row-major, index = iy * width + ix
};

Point2D apply_field(const DisplacementField& f, Point2D p);

// Grid layout shared by field fitting and serialization.
struct GridSpec {
    Point2D origin;
    double spacing = 1.0;
    int width = 2;
    int height = 2;
};

// Fixed-point inversion g0 = -f, g_{k+1}(p) = -f(p + g_k(p)); converges for
// smooth fields whose displacements are small against the grid extent.
// Throws NonConvergent if the round-trip residual stays above tol.
DisplacementField invert_field(const DisplacementField& f, double tol = 0.01,
                               int max_iter = 20);

enum class PairKind { forward_adjacent, backward_interleave };
enum class MapDirection { forward, inverse };

// Spatial map between two sections: affine plus optional non-rigid residual.
// The forward direction carries points of section `source` into the space of
// section `target`; forward applies the affine first, then the residual.
class PairTransform {
public:
    PairTransform(int source, int target, const AffineTransform2D& affine,
                  std::optional<DisplacementField> field = std::nullopt,
                  double invert_tol = 0.01, int invert_max_iter = 20);

    int source() const { return source_; }
    int target() const { return target_; }
    PairKind kind() const { return kind_; }
    const AffineTransform2D& affine() const { return affine_; }
    const std::optional<DisplacementField>& field() const { return field_; }

    Point2D map_point(Point2D p, MapDirection dir) const;
    ConvexPolygon map_box(const BBox& b, MapDirection dir) const;
    Circle map_circle(const Circle& c, MapDirection dir) const;

private:
    int source_, target_;
    PairKind kind_;
    AffineTransform2D affine_;
    AffineTransform2D affine_inverse_;
    std::optional<DisplacementField> field_;
    std::optional<DisplacementField> field_inverse_;
};

Point2D map_point(const PairTransform& t, Point2D p, MapDirection dir);
ConvexPolygon map_box(const PairTransform& t, const BBox& b, MapDirection dir);

}  // namespace serialtrack
