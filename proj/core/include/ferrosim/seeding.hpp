// seeding.hpp
// Recovery-type states built from prescribed defect positions and a
// connection: the canonical harmonic Q with truncated cores, and an M that
// follows the lifted director and vanishes on the connection.

#pragma once

#include "ferrosim/fields.hpp"
#include "ferrosim/geometry.hpp"

#include <span>

namespace ferrosim {

/// Q = |Q| (cos theta, sin theta) / sqrt(2) with theta the canonical angle and
/// |Q| = min(rho / eps, 1) (1 + kappa_* eps min(w / eps, 1)), rho the distance
/// to the nearest defect and w the distance to the boundary. M = lambda_* tanh(lambda_* d / (sqrt(2) eps)) times the lifted
/// director, d the distance to the nearest connection segment. Boundary nodes
/// take boundary_data. The degree is k = defects.size() / 2.
/// Throws InvalidInput for an odd or empty defect list, a defect closer than
/// 4h to the boundary, or a connection whose points are not the defects.
FieldState seeded_state(const Grid& grid, const ModelParams& params, std::span<const Point2> defects,
                        const Connection& connection);

/// Distance from p to the closed segment [a, b].
double segment_distance(Point2 p, Point2 a, Point2 b);

} // namespace ferrosim
