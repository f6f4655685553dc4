#include "ferrosim/seeding.hpp"

#include "ferrosim/error.hpp"
#include "ferrosim/profile1d.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace ferrosim {

double segment_distance(Point2 p, Point2 a, Point2 b) {
    const double dx = b.x - a.x, dy = b.y - a.y;
    const double len2 = dx * dx + dy * dy;
    double t = len2 > 0.0 ? ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return distance(p, Point2{a.x + t * dx, a.y + t * dy});
}

FieldState seeded_state(const Grid& grid, const ModelParams& params, std::span<const Point2> defects,
                        const Connection& connection) {
    params.validate();
    if (defects.empty() || defects.size() % 2 != 0) {
        throw InvalidInput("seeded_state: need an even, non-zero number of defects");
    }
    const double margin = 4.0 * grid.h();
    for (const auto& a : defects) {
        if (std::min({a.x, a.y, 1.0 - a.x, 1.0 - a.y}) < margin) {
            throw InvalidInput("seeded_state: defect closer than 4h to the boundary");
        }
    }
    if (connection.points.size() != defects.size() ||
        !std::is_permutation(connection.points.begin(), connection.points.end(), defects.begin())) {
        throw InvalidInput("seeded_state: connection does not pair the given defects");
    }

    const int k = static_cast<int>(defects.size() / 2);
    const auto consts = potential_constants(params);
    const AngleField angle = canonical_angle(defects, k, grid);
    const Lifting lift = sbv_lifting(angle, connection, params);

    FieldState s(grid);
    for (int j = 0; j <= grid.n(); ++j) {
        for (int i = 0; i <= grid.n(); ++i) {
            const std::size_t p = grid.index(i, j);
            const Point2 x{grid.x(i), grid.y(j)};
            double rho = std::numeric_limits<double>::infinity();
            for (const auto& a : defects) rho = std::min(rho, distance(x, a));
            // |Q| ramps from 1 on the boundary to 1 + kappa_* eps over a layer of
            // width eps, so the boundary datum does not create a jump in |Q|.
            const double wall = std::min({x.x, x.y, 1.0 - x.x, 1.0 - x.y});
            const double top = 1.0 + consts.kappa_star * params.eps * std::min(wall / params.eps, 1.0);
            const double mod = std::min(rho / params.eps, 1.0) * top;
            const double th = angle.theta[p];
            const QValue q{mod * std::cos(th) / std::numbers::sqrt2, mod * std::sin(th) / std::numbers::sqrt2};

            double d = std::numeric_limits<double>::infinity();
            for (const auto& pr : connection.pairs) {
                d = std::min(d, segment_distance(x, connection.points[pr[0]], connection.points[pr[1]]));
            }
            const double amp = profile_closed_form(params, d / params.eps);
            s.set(p, q, MValue{amp * lift.n1[p], amp * lift.n2[p]});
        }
    }
    apply_boundary(s, boundary_data(grid, k, params));
    return s;
}

} // namespace ferrosim
