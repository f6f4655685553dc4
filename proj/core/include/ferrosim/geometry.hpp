// geometry.hpp
// Minimal connections, canonical harmonic angle fields, renormalized
// energies and the sign lifting of the director across a connection.

#pragma once

#include "ferrosim/fields.hpp"
#include "ferrosim/potential.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace ferrosim {

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    bool operator==(const Point2&) const = default;
};

double distance(Point2 a, Point2 b);

/// Maximum number of points accepted by the exhaustive matcher.
inline constexpr std::size_t kMaxConnectionPoints = 16;

struct Connection {
    std::vector<Point2> points;
    std::vector<std::array<std::size_t, 2>> pairs; // i < j within a pair, pairs sorted by first index
    double total_length = 0.0;
};

/// Exhaustive search over all (2d-1)!! pairings. Ties are broken by the
/// lexicographically smallest pairing in enumeration order (each point is
/// paired with the smallest-index free point's candidates in increasing
/// order). Throws CapacityError above kMaxConnectionPoints points and
/// InvalidInput for odd, empty or repeated points.
Connection minimal_connection(std::span<const Point2> points);

/// Sign of the orientation of (a, b, c): +1 counter-clockwise, -1 clockwise, 0 collinear.
int orientation(Point2 a, Point2 b, Point2 c);

/// Closed segments [a, b] and [c, d] share at least one point.
bool segments_intersect(Point2 a, Point2 b, Point2 c, Point2 d);

/// True when no two segments of the connection intersect.
bool segments_disjoint(const Connection& c);

/// Angle of q for the canonical harmonic map with +1/2 defects (q-winding +1)
/// at `points` and the degree-k boundary datum.
struct AngleField {
    Grid grid;
    std::vector<Point2> points;
    int k = 1;
    std::vector<double> singular;   // sum of atan2 about each point
    std::vector<double> correction; // discrete-harmonic correction
    std::vector<double> theta;      // singular + correction
    double divergence_residual = 0.0; // max |discrete divergence of theta's increments| over interior nodes

    explicit AngleField(Grid g) : grid(g) {}
};

/// Builds theta so that its edge increments (atan2 increments about each
/// point plus differences of the correction) have zero discrete divergence
/// at every interior node, the discrete counterpart of a harmonic angle. A
/// point's own increment is zero on edges touching a node it sits on. Throws InvalidInput unless there are 2k points, all
/// strictly inside the square, and when the boundary mismatch does not
/// unwrap to a single-valued trace.
AngleField canonical_angle(std::span<const Point2> points, int k, const Grid& grid, double tol = 1e-14);

/// Max |wrapped 5-point Laplacian of theta| (divided by h^2) over interior
/// nodes at distance >= min_dist from every point.
double harmonic_residual(const AngleField& field, double min_dist);

struct SigmaRow {
    double sigma = 0.0;
    double energy = 0.0;  // 1/2 int |grad theta|^2 outside the sigma-balls
    double w_sigma = 0.0; // energy - 2 pi |k| |log sigma|
    double fitted = 0.0;  // A + B sigma
};

struct RenormalizedEnergy {
    double w = 0.0;     // A, the sigma -> 0 intercept
    double slope = 0.0; // B
    double max_fit_residual = 0.0;
    std::vector<SigmaRow> table;
};

/// Least-squares fit of W(sigma) = A + B sigma over the ladder. The energy
/// density differentiates the singular part exactly and the correction
/// bilinearly; cells cut by a ball are integrated on a 24 x 24 subgrid. Throws
/// InvalidInput when fewer than two sigmas are given, a sigma is below 4h, or
/// a ball overlaps another ball or touches the boundary.
RenormalizedEnergy renormalized_energy(const AngleField& field, std::span<const double> sigmas);
RenormalizedEnergy renormalized_energy(std::span<const Point2> points, int k, const Grid& grid,
                                       std::span<const double> sigmas);

/// {4h, 8h, 16h}, shrunk to the admissible range when large balls would
/// overlap or touch the boundary. Empty if not even 4h fits.
std::vector<double> sigma_ladder(std::span<const Point2> points, const Grid& grid);

/// W + c_beta * minimal connection length, with the default ladder.
double w_beta(std::span<const Point2> points, int k, const ModelParams& params, const PotentialConstants& consts,
              const Grid& grid);

struct WBetaMinimum {
    std::vector<Point2> points;
    double value = 0.0;
    std::size_t start = 0; // index of the start that produced it
    int evaluations = 0;
};

struct WBetaOptions {
    double margin_cells = 4.0;     // penalty margin from the boundary, in units of h
    double separation_cells = 4.0; // penalty below this pairwise separation, in units of h
    double penalty = 1e3;
    int max_evaluations = 600;
    double simplex_tol_cells = 0.25; // stop when the simplex is smaller than this many h
    unsigned threads = 0;            // 0: FERROSIM_THREADS or hardware concurrency
};

struct WBetaResult {
    WBetaMinimum best;
    std::vector<WBetaMinimum> per_start;  // in start order
    std::vector<WBetaMinimum> distinct;   // distinct local minima, sorted by value
};

/// Nelder-Mead descent of w_beta over the 4|k| coordinates from each start.
/// Starts are processed concurrently; results do not depend on the thread
/// count. Throws InvalidInput if a start has the wrong number of points and
/// SolverError if no start reaches a point where w_beta is defined.
WBetaResult minimize_w_beta(int k, const ModelParams& params, const Grid& grid,
                            const std::vector<std::vector<Point2>>& starts, const WBetaOptions& options = {});

/// Worker count honouring the FERROSIM_THREADS cap.
unsigned worker_count(unsigned requested = 0);

/// Director field (cos theta/2, sin theta/2) times a sign fixed by flood fill
/// from the boundary, where it matches the direction of M_bd. Propagation
/// never crosses a lattice edge that meets a connection segment, so the sign
/// flips exactly across the connection.
struct Lifting {
    std::vector<double> n1, n2;   // signed unit director
    std::vector<double> m1, m2;   // lambda_* times the signed director
    std::vector<std::int8_t> sign;
    std::size_t conflicts = 0;    // non-crossing edges with inconsistent signs
};

/// Throws InvalidInput if some node cannot be reached from the boundary.
Lifting sbv_lifting(const AngleField& field, const Connection& connection, const ModelParams& params);

/// True when the lattice edge (a, b) meets some connection segment. Nodes
/// lying exactly on a segment's supporting line count as being on its left.
bool edge_crosses_connection(Point2 a, Point2 b, const Connection& connection);

struct CoreEnergyRow {
    double eps = 0.0;
    double gamma = 0.0;
    double gamma_minus_log = 0.0; // gamma - pi |log eps|
    int newton_iterations = 0;
};

struct CoreEnergyResult {
    std::vector<CoreEnergyRow> table;
    double gamma_star = 0.0; // intercept of a linear fit of gamma - pi|log eps| in eps^2
};

/// Radial Ginzburg-Landau vortex energy on the unit disc,
/// pi int_0^1 (f'^2 + f^2/r^2 + (1 - f^2)^2 / (2 eps^2)) r dr with f(0) = 0,
/// f(1) = 1, minimised by damped Newton on a P1 discretisation with n cells.
/// Throws InvalidInput unless eps_list is strictly decreasing with every
/// eps >= 2/n, and SolverError if Newton fails.
CoreEnergyResult core_energy(std::span<const double> eps_list, int n);

} // namespace ferrosim
