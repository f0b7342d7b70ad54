#include "tablekit/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace tablekit::geometry {

namespace {

constexpr double kAreaEps = 1e-9;

double cross(Point o, Point a, Point b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

}  // namespace

double distance(Point a, Point b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

namespace detail {

double signed_area(const std::vector<Point>& poly) {
    double s = 0.0;
    const size_t n = poly.size();
    for (size_t i = 0; i < n; ++i) {
        const Point& p = poly[i];
        const Point& q = poly[(i + 1) % n];
        s += p.x * q.y - q.x * p.y;
    }
    return 0.5 * s;
}

std::vector<Point> clip_convex(const std::vector<Point>& subject, const std::vector<Point>& clip) {
    // Sutherland-Hodgman. Both polygons screen-clockwise (positive signed
    // area with y down); a point is inside a clip edge when the cross
    // product keeps the same (positive) orientation.
    std::vector<Point> output = subject;
    const size_t m = clip.size();
    for (size_t i = 0; i < m && !output.empty(); ++i) {
        const Point a = clip[i];
        const Point b = clip[(i + 1) % m];
        std::vector<Point> input;
        input.swap(output);
        const size_t n = input.size();
        for (size_t j = 0; j < n; ++j) {
            const Point cur = input[j];
            const Point prev = input[(j + n - 1) % n];
            const double side_cur = cross(a, b, cur);
            const double side_prev = cross(a, b, prev);
            const bool in_cur = side_cur >= 0.0;
            const bool in_prev = side_prev >= 0.0;
            if (in_cur) {
                if (!in_prev) {
                    const double t = side_prev / (side_prev - side_cur);
                    output.push_back(prev + (cur - prev) * t);
                }
                output.push_back(cur);
            } else if (in_prev) {
                const double t = side_prev / (side_prev - side_cur);
                output.push_back(prev + (cur - prev) * t);
            }
        }
    }
    return output;
}

}  // namespace detail

CellQuad CellQuad::from_points(const std::array<Point, 4>& pts) {
    auto q = try_from_points(pts);
    if (!q) {
        throw std::invalid_argument("CellQuad: vertices must form a convex quad with non-zero area");
    }
    return *q;
}

std::optional<CellQuad> CellQuad::try_from_points(const std::array<Point, 4>& pts) {
    for (const Point& p : pts) {
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) return std::nullopt;
    }

    Point c{(pts[0].x + pts[1].x + pts[2].x + pts[3].x) / 4.0,
            (pts[0].y + pts[1].y + pts[2].y + pts[3].y) / 4.0};

    // Angular sort around the centroid gives screen-clockwise order in
    // image coordinates (y down).
    std::array<Point, 4> v = pts;
    std::sort(v.begin(), v.end(), [&](const Point& a, const Point& b) {
        return std::atan2(a.y - c.y, a.x - c.x) < std::atan2(b.y - c.y, b.x - c.x);
    });

    // Start at the vertex with minimal x+y, ties by minimal y.
    int first = 0;
    for (int i = 1; i < 4; ++i) {
        const double ki = v[i].x + v[i].y;
        const double kf = v[first].x + v[first].y;
        if (ki < kf || (ki == kf && v[i].y < v[first].y)) first = i;
    }
    std::rotate(v.begin(), v.begin() + first, v.end());

    // Convexity: every consecutive edge turn must keep positive orientation.
    double area2 = 0.0;
    for (int i = 0; i < 4; ++i) {
        const double z = cross(v[i], v[(i + 1) % 4], v[(i + 2) % 4]);
        if (z <= 0.0) return std::nullopt;
        area2 += v[i].x * v[(i + 1) % 4].y - v[(i + 1) % 4].x * v[i].y;
    }
    if (0.5 * area2 < kAreaEps) return std::nullopt;

    CellQuad q;
    q.v_ = v;
    return q;
}

double CellQuad::area() const {
    return detail::signed_area({v_.begin(), v_.end()});
}

Point CellQuad::min_corner() const {
    Point m = v_[0];
    for (const Point& p : v_) {
        m.x = std::min(m.x, p.x);
        m.y = std::min(m.y, p.y);
    }
    return m;
}

Point CellQuad::max_corner() const {
    Point m = v_[0];
    for (const Point& p : v_) {
        m.x = std::max(m.x, p.x);
        m.y = std::max(m.y, p.y);
    }
    return m;
}

Point quad_center(const CellQuad& q) {
    const auto& v = q.vertices();
    return {(v[0].x + v[1].x + v[2].x + v[3].x) / 4.0,
            (v[0].y + v[1].y + v[2].y + v[3].y) / 4.0};
}

double quad_iou(const CellQuad& a, const CellQuad& b, bool* degenerate) {
    const double area_a = a.area();
    const double area_b = b.area();
    if (degenerate) *degenerate = false;
    if (area_a < kAreaEps || area_b < kAreaEps) {
        if (degenerate) *degenerate = true;
        return 0.0;
    }

    const std::vector<Point> pa(a.vertices().begin(), a.vertices().end());
    const std::vector<Point> pb(b.vertices().begin(), b.vertices().end());
    const std::vector<Point> inter = detail::clip_convex(pa, pb);
    if (inter.size() < 3) return 0.0;

    const double area_i = std::abs(detail::signed_area(inter));
    const double area_u = area_a + area_b - area_i;
    if (area_u <= 0.0) return 0.0;
    return std::clamp(area_i / area_u, 0.0, 1.0);
}

Deformation Deformation::identity() {
    return Deformation{};
}

Deformation Deformation::affine(const std::array<double, 6>& m) {
    Deformation d;
    d.kind = Kind::affine;
    d.affine_m = m;
    return d;
}

Deformation Deformation::rotation(double degrees, Point center) {
    const double rad = degrees * std::numbers::pi / 180.0;
    const double c = std::cos(rad);
    const double s = std::sin(rad);
    // x' = c(x-cx) - s(y-cy) + cx, y' = s(x-cx) + c(y-cy) + cy
    return affine({c, -s, center.x - c * center.x + s * center.y,
                   s, c, center.y - s * center.x - c * center.y});
}

Deformation Deformation::perspective(const std::array<double, 9>& m) {
    const double det = m[0] * (m[4] * m[8] - m[5] * m[7]) -
                       m[1] * (m[3] * m[8] - m[5] * m[6]) +
                       m[2] * (m[3] * m[7] - m[4] * m[6]);
    if (std::abs(det) < 1e-12) {
        throw std::invalid_argument("Deformation::perspective: singular matrix");
    }
    Deformation d;
    d.kind = Kind::perspective;
    d.persp_m = m;
    return d;
}

Deformation Deformation::curve(double amplitude, double period, CurveAxis axis) {
    if (amplitude < 0.0 || period <= 0.0) {
        throw std::invalid_argument("Deformation::curve: amplitude must be >= 0 and period > 0");
    }
    Deformation d;
    d.kind = Kind::curve;
    d.curve_amplitude = amplitude;
    d.curve_period = period;
    d.curve_axis = axis;
    return d;
}

Point apply_deformation(Point p, const Deformation& d) {
    switch (d.kind) {
        case Deformation::Kind::identity:
            return p;
        case Deformation::Kind::affine: {
            const auto& m = d.affine_m;
            return {m[0] * p.x + m[1] * p.y + m[2], m[3] * p.x + m[4] * p.y + m[5]};
        }
        case Deformation::Kind::perspective: {
            const auto& m = d.persp_m;
            const double w = m[6] * p.x + m[7] * p.y + m[8];
            if (std::abs(w) < 1e-12) {
                throw std::domain_error("apply_deformation: homography maps point to infinity");
            }
            return {(m[0] * p.x + m[1] * p.y + m[2]) / w,
                    (m[3] * p.x + m[4] * p.y + m[5]) / w};
        }
        case Deformation::Kind::curve: {
            const double two_pi = 2.0 * std::numbers::pi;
            if (d.curve_axis == CurveAxis::y) {
                return {p.x, p.y + d.curve_amplitude * std::sin(two_pi * p.x / d.curve_period)};
            }
            return {p.x + d.curve_amplitude * std::sin(two_pi * p.y / d.curve_period), p.y};
        }
    }
    return p;
}

}  // namespace tablekit::geometry
