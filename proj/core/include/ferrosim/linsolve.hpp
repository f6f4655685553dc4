// linsolve.hpp
// Preconditioned conjugate gradients for symmetric positive definite
// operators given as callables, plus a 5-point Dirichlet Laplace solver.

#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace ferrosim {

using LinearOp = std::function<void(std::span<const double>, std::span<double>)>;

struct CgResult {
    int iterations = 0;
    double relative_residual = 0.0;
    bool converged = false;
};

/// Solves A x = b starting from the contents of x. `precond` applies an
/// approximation of A^{-1}; pass an empty function for plain CG. Stops when
/// ||r|| <= tol * ||b|| (or ||r|| <= tol when b = 0).
CgResult conjugate_gradient(const LinearOp& apply, const LinearOp& precond, std::span<const double> b,
                            std::span<double> x, double tol, int max_iter);

class Grid;

/// Discrete-harmonic extension: on return `u` satisfies the 5-point Laplace
/// equation at every interior node, with boundary values taken from `u` as
/// given. Returns the max-norm interior residual of (h^2 times) the stencil.
double solve_laplace_dirichlet(const Grid& grid, std::vector<double>& u, double tol);

/// As above for sum_nb u_nb - 4 u = source at interior nodes (source indexed
/// by node, stencil units). Returns the max-norm interior residual.
double solve_poisson_dirichlet(const Grid& grid, std::vector<double>& u, std::span<const double> source,
                               double tol);

} // namespace ferrosim
