#pragma once

#include "curveflow/geometry.hpp"

namespace curveflow::predicates {

/// Sign of the orientation determinant of (a, b, c): +1 when c lies to the
/// left of the directed line a->b, -1 to the right, 0 when collinear.
/// Exact for all finite double inputs (floating-point filter, then an
/// expansion-arithmetic fallback).
int orient2d(Vec2 a, Vec2 b, Vec2 c);

/// True when the closed segments [p0,p1] and [q0,q1] share at least one point.
bool segments_intersect(Vec2 p0, Vec2 p1, Vec2 q0, Vec2 q1);

}  // namespace curveflow::predicates
