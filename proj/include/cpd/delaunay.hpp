#pragma once

#include "cpd/geometry.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace cpd {

/// Bowyer-Watson Delaunay triangulation of a planar point set. Returns counter-clockwise
/// index triples covering the convex hull. Throws TriangulationError for fewer than three
/// points, duplicate points, or an all-collinear set.
std::vector<std::array<std::uint32_t, 3>> delaunay(std::span<const Vec2> points);

/// > 0 when d lies strictly inside the circumcircle of the counter-clockwise triangle abc.
long double incircle(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d);

/// > 0 for a counter-clockwise turn a -> b -> c.
long double orient(const Vec2& a, const Vec2& b, const Vec2& c);

}  // namespace cpd
