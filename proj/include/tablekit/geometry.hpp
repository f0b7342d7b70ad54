#pragma once

#include <array>
#include <optional>
#include <vector>

namespace tablekit::geometry {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

inline Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
inline Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
inline Point operator*(Point a, double s) { return {a.x * s, a.y * s}; }

double distance(Point a, Point b);

/// A convex quadrilateral cell in image coordinates (y grows downward).
///
/// Vertices are kept in canonical order: clockwise on screen, starting at
/// the vertex with minimal x+y (ties broken by minimal y). For an upright
/// rectangle this is top-left, top-right, bottom-right, bottom-left.
class CellQuad {
public:
    /// Empty (degenerate) quad: all vertices at the origin, area 0. Useful
    /// only as a placeholder; every constructed-from-points quad is convex.
    CellQuad() = default;

    /// Canonicalizes and validates. Throws std::invalid_argument on
    /// non-convex or (near-)zero-area input.
    static CellQuad from_points(const std::array<Point, 4>& pts);

    /// Non-throwing variant; returns nullopt where from_points would throw.
    static std::optional<CellQuad> try_from_points(const std::array<Point, 4>& pts);

    const std::array<Point, 4>& vertices() const { return v_; }
    Point vertex(int k) const { return v_[static_cast<size_t>(k)]; }

    double area() const;

    Point min_corner() const;
    Point max_corner() const;

private:
    std::array<Point, 4> v_{};
};

/// Arithmetic mean of the four vertices; the cell center used by every
/// encoder and decoder.
Point quad_center(const CellQuad& q);

/// Exact polygon intersection-over-union of two convex quads
/// (Sutherland-Hodgman clipping, shoelace areas). Returns 0 for disjoint
/// quads. A degenerate (zero-area) operand yields 0 and sets *degenerate
/// when provided.
double quad_iou(const CellQuad& a, const CellQuad& b, bool* degenerate = nullptr);

enum class CurveAxis { x, y };

/// Geometric deformation applied to annotation vertices: identity, affine
/// (2x3), perspective homography (3x3), or a sinusoidal bend.
struct Deformation {
    enum class Kind { identity, affine, perspective, curve };

    Kind kind = Kind::identity;
    // affine: row-major [a b tx; c d ty]
    std::array<double, 6> affine_m{1, 0, 0, 0, 1, 0};
    // perspective: row-major 3x3, must be invertible
    std::array<double, 9> persp_m{1, 0, 0, 0, 1, 0, 0, 0, 1};
    double curve_amplitude = 0.0;  // pixels, >= 0
    double curve_period = 1.0;     // pixels, > 0
    CurveAxis curve_axis = CurveAxis::y;

    static Deformation identity();
    static Deformation affine(const std::array<double, 6>& m);
    /// Rotation by `degrees` about `center` (screen-clockwise for positive
    /// angles in image coordinates).
    static Deformation rotation(double degrees, Point center);
    /// Throws std::invalid_argument if the matrix is singular.
    static Deformation perspective(const std::array<double, 9>& m);
    /// Displaces `axis` by amplitude*sin(2*pi*t/period) where t is the
    /// orthogonal coordinate. Throws on amplitude < 0 or period <= 0.
    static Deformation curve(double amplitude, double period, CurveAxis axis = CurveAxis::y);
};

/// Applies d to p. Throws std::domain_error when a homography sends p to
/// infinity (|w| ~ 0).
Point apply_deformation(Point p, const Deformation& d);

namespace detail {
/// Signed polygon area via the shoelace formula; positive for screen-
/// clockwise order in image coordinates.
double signed_area(const std::vector<Point>& poly);
/// Clips convex `subject` against convex clip polygon given in the same
/// (screen-clockwise) orientation.
std::vector<Point> clip_convex(const std::vector<Point>& subject, const std::vector<Point>& clip);
}  // namespace detail

}  // namespace tablekit::geometry
