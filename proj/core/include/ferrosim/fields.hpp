// fields.hpp
// Node-centred fields on a uniform (n+1) x (n+1) lattice of the unit square,
// and the degree-k Dirichlet data used by the square-domain experiments.

#pragma once

#include "ferrosim/potential.hpp"

#include <cstddef>
#include <iosfwd>
#include <utility>
#include <vector>

namespace ferrosim {

/// Uniform lattice of [0,1]^2 with n cells per side. The spacing is always
/// derived from n.
class Grid {
public:
    explicit Grid(int n);

    int n() const { return n_; }
    double h() const { return 1.0 / static_cast<double>(n_); }
    int side() const { return n_ + 1; }
    std::size_t nodes() const {
        return static_cast<std::size_t>(side()) * static_cast<std::size_t>(side());
    }

    /// Row-major: i (x direction) varies fastest.
    std::size_t index(int i, int j) const {
        return static_cast<std::size_t>(j) * static_cast<std::size_t>(side()) +
               static_cast<std::size_t>(i);
    }
    double x(int i) const { return static_cast<double>(i) / static_cast<double>(n_); }
    double y(int j) const { return static_cast<double>(j) / static_cast<double>(n_); }
    bool on_boundary(int i, int j) const { return i == 0 || j == 0 || i == n_ || j == n_; }

    /// Boundary nodes in counter-clockwise order starting at (0,0), each once.
    std::vector<std::pair<int, int>> boundary_loop() const;

    bool operator==(const Grid&) const = default;

private:
    int n_;
};

/// Q is stored through (q11, q12) only; symmetry and zero trace hold by
/// representation.
struct FieldState {
    Grid grid;
    std::vector<double> q11;
    std::vector<double> q12;
    std::vector<double> m1;
    std::vector<double> m2;
    double time = 0.0;

    explicit FieldState(Grid g);

    QValue q(std::size_t node) const { return {q11[node], q12[node]}; }
    MValue m(std::size_t node) const { return {m1[node], m2[node]}; }
    void set(std::size_t node, QValue q, MValue m);
};

/// Dirichlet datum on the boundary loop, in boundary_loop() order.
struct BoundaryData {
    std::vector<std::size_t> nodes;
    std::vector<double> q11;
    std::vector<double> q12;
    std::vector<double> m1;
    std::vector<double> m2;
};

/// Angle atan2(y - 1/2, x - 1/2) - pi/2 about the centre of the square;
/// atan2(0, 0) is taken as 0.
double datum_angle(double x, double y);

/// Degree-k datum evaluated at an arbitrary point: M = lambda_* (cos k t, sin k t),
/// q = sqrt(2) (Q11, Q12) = (cos 2kt, sin 2kt).
std::pair<QValue, MValue> degree_k_datum(double x, double y, int k, const ModelParams& params);

BoundaryData boundary_data(const Grid& grid, int k, const ModelParams& params);

/// The degree-k formula applied at every node, time = 0. At the centre node
/// Q follows the atan2(0, 0) = 0 convention and M is set to zero.
FieldState initial_condition(const Grid& grid, int k, const ModelParams& params);

/// Overwrite the boundary nodes of `state` with `bd`.
void apply_boundary(FieldState& state, const BoundaryData& bd);

/// Header of the field CSV format.
struct FieldFileHeader {
    int n = 0;
    double h = 0.0;
    double time = 0.0;
    double beta = 0.0;
    double eps = 0.0;
};

/// Writes `# n=.. h=.. time=.. beta=.. eps=..` followed by `x,y,q11,q12,m1,m2`
/// rows in row-major node order, at 17 significant digits.
void write_field_csv(std::ostream& os, const FieldState& state, const ModelParams& params);

/// Inverse of write_field_csv. Throws ParseError with the offending line and
/// column on malformed input.
FieldState read_field_csv(std::istream& is, FieldFileHeader* header = nullptr);

} // namespace ferrosim
