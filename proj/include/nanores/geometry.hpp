#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <utility>

namespace nanores {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

inline double cross(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }

inline double distance(const Vec2& a, const Vec2& b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

/// Proper crossing of two open segments. Shared endpoints, touching, parallel
/// and collinear overlaps all report no intersection.
inline std::optional<Vec2> segment_intersection(const Vec2& p1, const Vec2& p2,
                                                const Vec2& q1, const Vec2& q2) {
    const Vec2 d1{p2.x - p1.x, p2.y - p1.y};
    const Vec2 d2{q2.x - q1.x, q2.y - q1.y};
    const double denom = cross(d1, d2);
    if (denom == 0.0) return std::nullopt;
    const Vec2 w{q1.x - p1.x, q1.y - p1.y};
    const double t = cross(w, d2) / denom;
    const double u = cross(w, d1) / denom;
    if (t <= 0.0 || t >= 1.0 || u <= 0.0 || u >= 1.0) return std::nullopt;
    return Vec2{p1.x + t * d1.x, p1.y + t * d1.y};
}

/// Liang-Barsky clip of a segment against the square [0, side]^2.
/// Returns the clipped segment, or nothing if it lies entirely outside.
inline std::optional<std::pair<Vec2, Vec2>> clip_to_square(Vec2 p1, Vec2 p2, double side) {
    double t0 = 0.0, t1 = 1.0;
    const double dx = p2.x - p1.x;
    const double dy = p2.y - p1.y;
    const double p[4] = {-dx, dx, -dy, dy};
    const double q[4] = {p1.x, side - p1.x, p1.y, side - p1.y};
    for (int i = 0; i < 4; ++i) {
        if (p[i] == 0.0) {
            if (q[i] < 0.0) return std::nullopt;
            continue;
        }
        const double r = q[i] / p[i];
        if (p[i] < 0.0) {
            if (r > t1) return std::nullopt;
            t0 = std::max(t0, r);
        } else {
            if (r < t0) return std::nullopt;
            t1 = std::min(t1, r);
        }
    }
    if (t0 >= t1) return std::nullopt;
    // t0/t1 round-trips through q/p can land a few ulp outside the square
    const auto pin = [side](double v) { return std::clamp(v, 0.0, side); };
    const Vec2 a{pin(p1.x + t0 * dx), pin(p1.y + t0 * dy)};
    const Vec2 b{pin(p1.x + t1 * dx), pin(p1.y + t1 * dy)};
    return std::make_pair(a, b);
}

}  // namespace nanores
