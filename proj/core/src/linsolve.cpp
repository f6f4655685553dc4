// linsolve.cpp

#include "ferrosim/linsolve.hpp"

#include "ferrosim/error.hpp"
#include "ferrosim/fields.hpp"

#include <algorithm>
#include <cmath>

namespace ferrosim {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

} // namespace

CgResult conjugate_gradient(const LinearOp& apply, const LinearOp& precond, std::span<const double> b,
                            std::span<double> x, double tol, int max_iter) {
    const std::size_t n = b.size();
    std::vector<double> r(n), z(n), p(n), ap(n);
    apply(x, ap);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - ap[i];

    const double bnorm = std::sqrt(dot(b, b));
    const double scale = bnorm > 0.0 ? bnorm : 1.0;

    CgResult res;
    double rnorm = std::sqrt(dot(r, r));
    res.relative_residual = rnorm / scale;
    if (res.relative_residual <= tol) {
        res.converged = true;
        return res;
    }

    if (precond) precond(r, z); else z = r;
    p = z;
    double rz = dot(r, z);
    for (int it = 1; it <= max_iter; ++it) {
        apply(p, ap);
        const double pap = dot(p, ap);
        if (!(pap > 0.0)) {
            res.iterations = it;
            return res; // operator not positive definite along p
        }
        const double alpha = rz / pap;
        for (std::size_t i = 0; i < n; ++i) {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        rnorm = std::sqrt(dot(r, r));
        res.iterations = it;
        res.relative_residual = rnorm / scale;
        if (res.relative_residual <= tol) {
            res.converged = true;
            return res;
        }
        if (precond) precond(r, z); else z = r;
        const double rz_new = dot(r, z);
        const double beta = rz_new / rz;
        rz = rz_new;
        for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
    return res;
}

double solve_laplace_dirichlet(const Grid& grid, std::vector<double>& u, double tol) {
    return solve_poisson_dirichlet(grid, u, {}, tol);
}

double solve_poisson_dirichlet(const Grid& grid, std::vector<double>& u, std::span<const double> source,
                               double tol) {
    const int n = grid.n();
    const int m = n - 1; // interior nodes per side
    const auto interior = [m](int i, int j) {
        return static_cast<std::size_t>(j - 1) * static_cast<std::size_t>(m) + static_cast<std::size_t>(i - 1);
    };

    // -Lap(u) = -source with Dirichlet data moved to the right-hand side.
    std::vector<double> rhs(static_cast<std::size_t>(m) * static_cast<std::size_t>(m), 0.0);
    std::vector<double> x(rhs.size(), 0.0);
    for (int j = 1; j < n; ++j) {
        for (int i = 1; i < n; ++i) {
            double b = source.empty() ? 0.0 : -source[grid.index(i, j)];
            if (i == 1) b += u[grid.index(0, j)];
            if (i == n - 1) b += u[grid.index(n, j)];
            if (j == 1) b += u[grid.index(i, 0)];
            if (j == n - 1) b += u[grid.index(i, n)];
            rhs[interior(i, j)] = b;
            x[interior(i, j)] = u[grid.index(i, j)];
        }
    }

    const LinearOp apply = [m](std::span<const double> in, std::span<double> out) {
        for (int j = 0; j < m; ++j) {
            for (int i = 0; i < m; ++i) {
                const std::size_t p = static_cast<std::size_t>(j) * m + i;
                double v = 4.0 * in[p];
                if (i > 0) v -= in[p - 1];
                if (i < m - 1) v -= in[p + 1];
                if (j > 0) v -= in[p - m];
                if (j < m - 1) v -= in[p + m];
                out[p] = v;
            }
        }
    };
    const CgResult res = conjugate_gradient(apply, {}, rhs, x, tol, 40 * (n + 10) * 4);
    if (!res.converged) {
        throw SolverError("Laplace solve did not converge (relative residual " +
                          std::to_string(res.relative_residual) + ")");
    }
    for (int j = 1; j < n; ++j) {
        for (int i = 1; i < n; ++i) u[grid.index(i, j)] = x[interior(i, j)];
    }

    double worst = 0.0;
    for (int j = 1; j < n; ++j) {
        for (int i = 1; i < n; ++i) {
            const double src = source.empty() ? 0.0 : source[grid.index(i, j)];
            const double r = u[grid.index(i - 1, j)] + u[grid.index(i + 1, j)] + u[grid.index(i, j - 1)] +
                             u[grid.index(i, j + 1)] - 4.0 * u[grid.index(i, j)] - src;
            worst = std::max(worst, std::abs(r));
        }
    }
    return worst;
}

} // namespace ferrosim
