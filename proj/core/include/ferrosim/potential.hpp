// potential.hpp
// The bulk potential f_eps of the super-dilute ferronematic model, its
// normalising constants, derivatives, and the scalar functions g_eps, h, H
// that appear after the change of variables Q, M -> (Q, u).

#pragma once

#include <array>
#include <cmath>

namespace ferrosim {

/// Physical parameters. eta1/eta2 are the friction coefficients of the
/// gradient flow for Q and M respectively.
struct ModelParams {
    double beta = 1.0;
    double eps = 0.05;
    double eta1 = 1.0;
    double eta2 = 0.05;

    /// Throws InvalidInput unless every field is finite and positive
    /// (beta = 0 is accepted as the decoupled limit).
    void validate() const;

    /// eta1 = 1, eta2 = eps, the friction choice used for the square-domain runs.
    static ModelParams with_default_friction(double beta, double eps) {
        return ModelParams{beta, eps, 1.0, eps};
    }
};

/// Constants derived from (beta, eps). x_eps = |Q|^2 at the minimiser,
/// lambda_eps = |M| at the minimiser, kappa_eps the additive constant making
/// inf f_eps = 0.
struct PotentialConstants {
    double x_eps = 1.0;
    double s_eps = 1.0;
    double lambda_eps = 1.0;
    double kappa_eps = 0.0;
    double kappa_star = 0.0;
    double c_beta = 2.0 * std::sqrt(2.0) / 3.0;
    double lambda_star = 1.0;
};

/// Trace-free symmetric 2x2 tensor [[q11, q12], [q12, -q11]].
struct QValue {
    double q11 = 0.0;
    double q12 = 0.0;

    /// Frobenius norm squared, 2 (q11^2 + q12^2).
    double norm_sq() const { return 2.0 * (q11 * q11 + q12 * q12); }
    double norm() const { return std::sqrt(norm_sq()); }
};

struct MValue {
    double m1 = 0.0;
    double m2 = 0.0;

    double norm_sq() const { return m1 * m1 + m2 * m2; }
    double norm() const { return std::sqrt(norm_sq()); }
};

/// Q M . M = q11 (m1^2 - m2^2) + 2 q12 m1 m2.
inline double coupling(QValue q, MValue m) {
    return q.q11 * (m.m1 * m.m1 - m.m2 * m.m2) + 2.0 * q.q12 * m.m1 * m.m2;
}

/// Unique root X > 1 + beta^2 eps of X (X - 1 - beta^2 eps)^2 = beta^2 eps^2 / 2.
/// Returns exactly 1 when beta == 0. Throws SolverError if the bracketed
/// search fails.
double solve_x_eps(const ModelParams& params);

/// X (X - 1 - beta^2 eps)^2 - beta^2 eps^2 / 2.
double x_eps_residual(double x, const ModelParams& params);

PotentialConstants potential_constants(const ModelParams& params);

/// The exact minimiser of f_eps with M pointing along `direction` (radians).
struct PotentialMinimiser {
    QValue q;
    MValue m;
};
PotentialMinimiser potential_minimiser(const PotentialConstants& consts, double direction);

double f_eps(QValue q, MValue m, const ModelParams& params, const PotentialConstants& consts);

/// Partial derivatives of f_eps with respect to (q11, q12) and (m1, m2).
struct PotentialGradient {
    QValue dq;
    MValue dm;
};
PotentialGradient grad_f_eps(QValue q, MValue m, const ModelParams& params);

/// Hessian of f_eps in the variable order (q11, q12, m1, m2), row-major.
using Hessian4 = std::array<double, 16>;
Hessian4 hess_f_eps(QValue q, MValue m, const ModelParams& params);

/// g_eps(|Q|) = (|Q|^2 - 1)^2 / (4 eps^2) - 2 kappa_* (|Q| - 1) / eps + kappa_*^2.
double g_eps(double q_norm, const ModelParams& params, const PotentialConstants& consts);

/// h(u) = (|u|^2 - 1)^2 / 4 - beta (u1^2 - u2^2) / sqrt(2) + (beta^2 + sqrt(2) beta) / 2.
double h_well(double u1, double u2, const ModelParams& params);

/// H(u) = sqrt(2 h(u, 0)) = |sqrt(2) beta + 1 - u^2| / sqrt(2).
double h_speed(double u, const ModelParams& params);

} // namespace ferrosim
