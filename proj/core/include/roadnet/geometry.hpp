#pragma once

#include <algorithm>
#include <cmath>

namespace roadnet {

struct Point {
    double x = 0.0;
    double y = 0.0;

    Point() = default;
    Point(double px, double py) : x(px), y(py) {}

    Point operator+(const Point& o) const { return {x + o.x, y + o.y}; }
    Point operator-(const Point& o) const { return {x - o.x, y - o.y}; }
    Point operator*(double s) const { return {x * s, y * s}; }
    bool operator==(const Point& o) const { return x == o.x && y == o.y; }

    double norm() const { return std::sqrt(x * x + y * y); }
    double norm_sq() const { return x * x + y * y; }
    double max_norm() const { return std::max(std::abs(x), std::abs(y)); }
};

inline double dot(const Point& a, const Point& b) { return a.x * b.x + a.y * b.y; }

inline double distance(const Point& a, const Point& b) { return (a - b).norm(); }

struct SegmentProjection {
    Point point;     // closest point on the segment
    double t = 0.0;  // parametric position in [0,1] from a to b
    double dist = 0.0;
};

// Closest point on segment [a,b] to p. Degenerate segments collapse to a.
inline SegmentProjection project_to_segment(const Point& p, const Point& a, const Point& b) {
    const Point ab = b - a;
    const double len_sq = ab.norm_sq();
    SegmentProjection out;
    if (len_sq <= 0.0) {
        out.point = a;
        out.t = 0.0;
        out.dist = distance(p, a);
        return out;
    }
    double t = dot(p - a, ab) / len_sq;
    t = std::clamp(t, 0.0, 1.0);
    out.point = a + ab * t;
    out.t = t;
    out.dist = distance(p, out.point);
    return out;
}

inline double point_segment_distance(const Point& p, const Point& a, const Point& b) {
    return project_to_segment(p, a, b).dist;
}

// Angle of the direction node->neighbor in degrees, [0,360). Image rows grow
// downward, so the y component is negated to get the conventional
// counterclockwise orientation (0 = horizontal right, 90 = up).
inline double direction_angle_deg(const Point& node, const Point& neighbor) {
    const double dx = neighbor.x - node.x;
    const double dy = -(neighbor.y - node.y);
    double deg = std::atan2(dy, dx) * 180.0 / M_PI;
    if (deg < 0.0) deg += 360.0;
    if (deg >= 360.0) deg -= 360.0;
    return deg;
}

// Smallest difference between two undirected tangents, result in [0,90].
inline double tangent_difference_deg(double a_deg, double b_deg) {
    double d = std::fmod(std::abs(a_deg - b_deg), 180.0);
    if (d > 90.0) d = 180.0 - d;
    return d;
}

}  // namespace roadnet
