#include "serialtrack/transform.hpp"

#include <cmath>

#include "serialtrack/kernels.hpp"

namespace serialtrack {

namespace {
constexpr double kSingularTol = 1e-12;
}

AffineTransform2D::AffineTransform2D() : m_{1, 0, 0, 0, 1, 0} {}

AffineTransform2D::AffineTransform2D(double m00, double m01, double m02,
                                     double m10, double m11, double m12)
    : m_{m00, m01, m02, m10, m11, m12} {}

AffineTransform2D AffineTransform2D::translation(double dx, double dy) {
    return {1, 0, dx, 0, 1, dy};
}

AffineTransform2D AffineTransform2D::rotation(double radians) {
    const double c = std::cos(radians), s = std::sin(radians);
    return {c, -s, 0, s, c, 0};
}

AffineTransform2D AffineTransform2D::similarity(double scale, double radians,
                                                double dx, double dy) {
    const double c = scale * std::cos(radians), s = scale * std::sin(radians);
    return {c, -s, dx, s, c, dy};
}

double AffineTransform2D::at(int row, int col) const {
    if (row == 2) return col == 2 ? 1.0 : 0.0;
    return m_[row * 3 + col];
}

std::array<double, 9> AffineTransform2D::matrix() const {
    return {m_[0], m_[1], m_[2], m_[3], m_[4], m_[5], 0.0, 0.0, 1.0};
}

double AffineTransform2D::length_scale() const { return std::sqrt(std::abs(det2x2())); }

Point2D AffineTransform2D::operator()(Point2D p) const {
    return {m_[0] * p.x + m_[1] * p.y + m_[2], m_[3] * p.x + m_[4] * p.y + m_[5]};
}

AffineTransform2D AffineTransform2D::compose(const AffineTransform2D& inner) const {
    const auto& a = m_;
    const std::array<double, 6> b = {inner.m_[0], inner.m_[1], inner.m_[2],
                                     inner.m_[3], inner.m_[4], inner.m_[5]};
    return {a[0] * b[0] + a[1] * b[3], a[0] * b[1] + a[1] * b[4], a[0] * b[2] + a[1] * b[5] + a[2],
            a[3] * b[0] + a[4] * b[3], a[3] * b[1] + a[4] * b[4], a[3] * b[2] + a[4] * b[5] + a[5]};
}

Point2D apply_affine(const AffineTransform2D& t, Point2D p) { return t(p); }

AffineTransform2D invert_affine(const AffineTransform2D& t) {
    const double det = t.det2x2();
    if (std::abs(det) < kSingularTol)
        throw SingularTransform("affine determinant " + std::to_string(det) +
                                " below invertibility threshold");
    const double a = t.at(0, 0), b = t.at(0, 1), c = t.at(0, 2);
    const double d = t.at(1, 0), e = t.at(1, 1), f = t.at(1, 2);
    const double ia = e / det, ib = -b / det, id = -d / det, ie = a / det;
    return {ia, ib, -(ia * c + ib * f), id, ie, -(id * c + ie * f)};
}

DisplacementField::DisplacementField(Point2D origin, double spacing, int width, int height,
                                     std::vector<double> dx, std::vector<double> dy)
    : origin_(origin), spacing_(spacing), width_(width), height_(height),
      dx_(std::move(dx)), dy_(std::move(dy)) {
    if (width_ < 2 || height_ < 2 || !(spacing_ > 0.0))
        throw DegenerateGeometry("displacement field needs spacing > 0 and a >=2x2 grid");
    const std::size_t n = static_cast<std::size_t>(width_) * height_;
    if (dx_.size() != n || dy_.size() != n)
        throw DegenerateGeometry("displacement plane size does not match grid");
    for (std::size_t i = 0; i < n; ++i)
        if (!std::isfinite(dx_[i]) || !std::isfinite(dy_[i]))
            throw DegenerateGeometry("displacement values must be finite");
}

DisplacementField DisplacementField::zero(Point2D origin, double spacing, int width,
                                          int height) {
    const std::size_t n = static_cast<std::size_t>(width) * height;
    return {origin, spacing, width, height, std::vector<double>(n, 0.0),
            std::vector<double>(n, 0.0)};
}

Point2D DisplacementField::displacement(Point2D p) const {
    double gx = (p.x - origin_.x) / spacing_;
    double gy = (p.y - origin_.y) / spacing_;
    gx = std::clamp(gx, 0.0, static_cast<double>(width_ - 1));
    gy = std::clamp(gy, 0.0, static_cast<double>(height_ - 1));

    const int ix = std::min(static_cast<int>(gx), width_ - 2);
    const int iy = std::min(static_cast<int>(gy), height_ - 2);
    const double fx = gx - ix;
    const double fy = gy - iy;

    const std::size_t i00 = static_cast<std::size_t>(iy) * width_ + ix;
    const std::size_t i10 = i00 + 1;
    const std::size_t i01 = i00 + width_;
    const std::size_t i11 = i01 + 1;

    const double w00 = (1 - fx) * (1 - fy), w10 = fx * (1 - fy);
    const double w01 = (1 - fx) * fy, w11 = fx * fy;
    return {w00 * dx_[i00] + w10 * dx_[i10] + w01 * dx_[i01] + w11 * dx_[i11],
            w00 * dy_[i00] + w10 * dy_[i10] + w01 * dy_[i01] + w11 * dy_[i11]};
}

Point2D apply_field(const DisplacementField& f, Point2D p) {
    const Point2D d = f.displacement(p);
    return {p.x + d.x, p.y + d.y};
}

DisplacementField invert_field(const DisplacementField& f, double tol, int max_iter) {
    return kernels::invert_field_parallel(f, tol, max_iter);
}

PairTransform::PairTransform(int source, int target, const AffineTransform2D& affine,
                             std::optional<DisplacementField> field,
                             double invert_tol, int invert_max_iter)
    : source_(source), target_(target), affine_(affine),
      affine_inverse_(invert_affine(affine)), field_(std::move(field)) {
    const int delta = target_ - source_;
    if (delta == 1)
        kind_ = PairKind::forward_adjacent;
    else if (delta == 2)
        kind_ = PairKind::backward_interleave;
    else
        throw InvalidPair("pair (" + std::to_string(source_) + "," + std::to_string(target_) +
                          "): section offset must be 1 or 2");
    if (field_) field_inverse_ = invert_field(*field_, invert_tol, invert_max_iter);
}

Point2D PairTransform::map_point(Point2D p, MapDirection dir) const {
    if (dir == MapDirection::forward) {
        Point2D q = affine_(p);
        if (field_) q = apply_field(*field_, q);
        return q;
    }
    Point2D q = p;
    if (field_inverse_) q = apply_field(*field_inverse_, q);
    return affine_inverse_(q);
}

ConvexPolygon PairTransform::map_box(const BBox& b, MapDirection dir) const {
    const Point2D corners[4] = {
        {b.x_min, b.y_min}, {b.x_max, b.y_min}, {b.x_max, b.y_max}, {b.x_min, b.y_max}};
    Point2D mapped[4];
    for (int i = 0; i < 4; ++i) mapped[i] = map_point(corners[i], dir);
    return ConvexPolygon::hull_of(mapped);
}

Circle PairTransform::map_circle(const Circle& c, MapDirection dir) const {
    const double scale = dir == MapDirection::forward ? affine_.length_scale()
                                                      : affine_inverse_.length_scale();
    return {map_point(c.center, dir), c.radius * scale};
}

Point2D map_point(const PairTransform& t, Point2D p, MapDirection dir) {
    return t.map_point(p, dir);
}

ConvexPolygon map_box(const PairTransform& t, const BBox& b, MapDirection dir) {
    return t.map_box(b, dir);
}

}  // namespace serialtrack
