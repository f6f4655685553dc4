// diagnostics.hpp
// Discrete energies, topological charges, defect cores and jump lines of a
// FieldState.

#pragma once

#include "ferrosim/fields.hpp"
#include "ferrosim/potential.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

namespace ferrosim {

struct EnergyBreakdown {
    double elastic_q = 0.0;  // 1/2 int |grad Q|^2
    double elastic_m = 0.0;  // eps/2 int |grad M|^2
    double potential = 0.0;  // eps^-2 int f_eps
    double total = 0.0;
    double split_g = 0.0;    // int 1/2 |grad Q|^2 + g_eps(Q), cells with |Q| >= 1/2
    double split_mm = 0.0;   // int eps/2 |grad u|^2 + h(u)/eps, same cells
    double split_remainder = 0.0;
    double split_core = 0.0; // total energy of the cells left out of the split
};

/// Cell quadrature: each cell's squared gradient is the mean of its two
/// x-edge and two y-edge difference quotients squared; the potential is the
/// mean of the four corner values. The elastic part is thereby exactly the
/// energy whose nodal gradient is the 5-point Laplacian. With `cell_mask`
/// (n*n entries, ci fastest) only cells with a nonzero entry are summed.
EnergyBreakdown discrete_energy(const FieldState& state, const ModelParams& params,
                                const PotentialConstants& consts,
                                const std::vector<std::uint8_t>* cell_mask = nullptr);

/// Just `total`, without the split (cheaper, used inside the flow).
double total_energy(const FieldState& state, const ModelParams& params, const PotentialConstants& consts);

/// Winding of q = sqrt(2) (q11, q12) around each plaquette (cell), counter-
/// clockwise. Plaquettes with a corner where |q| <= min_norm are
/// indeterminate and listed separately. An edge increment of exactly pi is
/// signed by node order, so plaquette windings always sum to loop windings.
struct WindingField {
    int n = 0;                              // cells per side
    std::vector<int> winding;               // n*n, row-major by cell (ci fastest)
    std::vector<std::uint8_t> determinate;  // 1 where the winding is defined
    std::vector<std::size_t> indeterminate; // cell indices

    int total() const;
};
WindingField winding_field(const FieldState& state, double min_norm = 1e-12);

/// Winding of q along the discrete boundary loop.
int boundary_winding_q(const FieldState& state);
/// Winding of M along the discrete boundary loop.
int boundary_winding_m(const FieldState& state);

/// int det(grad q) dx over the square (sum of per-cell bilinear Jacobians),
/// so that winding-total * pi approximates it for |q| ~ 1 away from cores.
double jacobian_integral(const FieldState& state);

struct Defect {
    double x = 0.0;
    double y = 0.0;
    int q_winding = 0;
    double q_charge = 0.0;     // q_winding / 2
    double core_radius = 0.0;
    std::size_t core_nodes = 0;
    bool boundary_adjacent = false;
};

struct DefectSet {
    std::vector<Defect> defects;
    int total_winding() const;
};

/// Cores are connected clusters (4-neighbour) of nodes with
/// |Q| < threshold (1 + kappa_* eps); positions are depth-weighted
/// centroids and charges come from the q-winding on the smallest square loop
/// of lattice edges around the cluster whose corners all have
/// |Q| >= threshold.
DefectSet detect_defects(const FieldState& state, const ModelParams& params, const PotentialConstants& consts,
                         double threshold = 0.5);

/// Director frame of Q and the components of M in it, at each node.
struct Frame {
    std::vector<double> n1, n2; // unit eigenvector for the positive eigenvalue
    std::vector<double> u1, u2; // M . n, M . m with m = n rotated by +pi/2
    std::vector<std::uint8_t> defined; // |Q| >= min_q_norm and Q != 0
};
Frame frame_decompose(const FieldState& state, double min_q_norm = 0.5);

struct JumpCrossing {
    std::size_t node_a = 0;
    std::size_t node_b = 0;
    double x = 0.0; // edge midpoint
    double y = 0.0;
};

struct JumpComponent {
    std::vector<std::size_t> crossings; // indices into JumpSet::crossings
    double length_raw = 0.0;
    double length_corrected = 0.0;      // raw * pi / 4
    std::array<double, 4> endpoints{};  // x0, y0, x1, y1: the two farthest-apart crossings
};

struct JumpSet {
    std::vector<JumpCrossing> crossings;
    std::vector<JumpComponent> components;
};

/// Edges across which M changes sign relative to the transported director.
/// Edges touching a node with Q = 0 (no director) or with both ends inside a
/// defect core are skipped; crossings whose midpoints are within a cell
/// diagonal of each other form a component.
JumpSet extract_jump_set(const FieldState& state, const ModelParams& params, const PotentialConstants& consts,
                         const DefectSet* defects = nullptr);

/// Max-norm residual of the discrete Euler-Lagrange system (5-point
/// Laplacian plus potential gradient) over interior nodes, per component
/// group: {Q residual, M residual}. Divided by the friction coefficients, so
/// it is the size of the flow rhs.
std::array<double, 2> euler_lagrange_residual(const FieldState& state, const ModelParams& params);

} // namespace ferrosim
