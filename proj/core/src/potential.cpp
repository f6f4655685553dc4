// potential.cpp

#include "ferrosim/potential.hpp"

#include "ferrosim/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace ferrosim {

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;

bool finite_nonnegative(double v) { return std::isfinite(v) && v >= 0.0; }
bool finite_positive(double v) { return std::isfinite(v) && v > 0.0; }

// The cubic is solved for the gap d = X - 1 - beta^2 eps, which keeps
// X - 1 and lambda_eps^2 free of cancellation at small eps.
struct CubicRoot {
    double gap;         // X - 1 - beta^2 eps
    double x_minus_one; // X - 1
};

double gap_residual(double d, double b2e, double rhs) { return (1.0 + b2e + d) * d * d - rhs; }

CubicRoot solve_gap(const ModelParams& p) {
    const double b2e = p.beta * p.beta * p.eps;
    const double rhs = 0.5 * p.beta * p.beta * p.eps * p.eps;

    double lo = 0.0;
    double hi = std::max(2.0, 1.0 + b2e + 2.0 * p.beta * p.eps) - 1.0 - b2e;
    if (!(gap_residual(hi, b2e, rhs) > 0.0)) {
        // P is increasing and unbounded, so widen until the sign changes.
        int widen = 0;
        while (!(gap_residual(hi, b2e, rhs) > 0.0)) {
            hi *= 2.0;
            if (++widen > 200 || !std::isfinite(hi)) {
                throw SolverError("solve_x_eps: could not bracket root for beta=" +
                                  std::to_string(p.beta) + " eps=" + std::to_string(p.eps));
            }
        }
    }

    for (int it = 0; it < 200 && hi - lo > 4.0 * std::numeric_limits<double>::epsilon() * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (gap_residual(mid, b2e, rhs) > 0.0) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    double d = 0.5 * (lo + hi);

    // Newton polish; P'(d) = d (3 d + 2 (1 + b2e)) > 0 on the bracket.
    for (int it = 0; it < 4; ++it) {
        const double deriv = d * (3.0 * d + 2.0 * (1.0 + b2e));
        if (!(deriv > 0.0)) {
            break;
        }
        const double next = d - gap_residual(d, b2e, rhs) / deriv;
        if (!(next > 0.0) || !std::isfinite(next)) {
            break;
        }
        d = next;
    }
    if (!(d > 0.0) || !std::isfinite(d)) {
        throw SolverError("solve_x_eps: bisection did not converge");
    }
    return {d, b2e + d};
}

} // namespace

void ModelParams::validate() const {
    if (!finite_nonnegative(beta)) {
        throw InvalidInput("beta must be finite and >= 0");
    }
    if (!finite_positive(eps)) {
        throw InvalidInput("eps must be finite and > 0");
    }
    if (!finite_positive(eta1) || !finite_positive(eta2)) {
        throw InvalidInput("friction coefficients eta1, eta2 must be finite and > 0");
    }
}

double x_eps_residual(double x, const ModelParams& p) {
    const double t = x - 1.0 - p.beta * p.beta * p.eps;
    return x * t * t - 0.5 * p.beta * p.beta * p.eps * p.eps;
}

double solve_x_eps(const ModelParams& params) {
    params.validate();
    if (params.beta == 0.0) {
        return 1.0;
    }
    return 1.0 + solve_gap(params).x_minus_one;
}

PotentialConstants potential_constants(const ModelParams& params) {
    params.validate();
    const double beta = params.beta;
    const double eps = params.eps;

    PotentialConstants c;
    c.kappa_star = beta * (kSqrt2 * beta + 1.0) / (2.0 * kSqrt2);
    c.c_beta = (2.0 * kSqrt2 / 3.0) * std::pow(kSqrt2 * beta + 1.0, 1.5);
    c.lambda_star = std::sqrt(kSqrt2 * beta + 1.0);

    if (beta == 0.0) {
        c.x_eps = 1.0;
        c.s_eps = 1.0;
        c.lambda_eps = 1.0;
        c.kappa_eps = 0.0;
        return c;
    }

    const CubicRoot root = solve_gap(params);
    const double xm1 = root.x_minus_one;
    c.x_eps = 1.0 + xm1;
    c.s_eps = std::sqrt(c.x_eps);
    const double lambda_sq = xm1 / root.gap;
    const double lambda_sq_minus_one = beta * beta * eps / root.gap;
    c.lambda_eps = std::sqrt(lambda_sq);
    // f_eps vanishes at the minimiser |Q| = s_eps, |M| = lambda_eps with
    // Q M . M = s_eps lambda_eps^2 / sqrt(2).
    c.kappa_eps = -0.25 * xm1 * xm1 - 0.25 * eps * lambda_sq_minus_one * lambda_sq_minus_one +
                  (beta * eps / kSqrt2) * c.s_eps * lambda_sq;
    return c;
}

PotentialMinimiser potential_minimiser(const PotentialConstants& consts, double direction) {
    PotentialMinimiser out;
    out.m = {consts.lambda_eps * std::cos(direction), consts.lambda_eps * std::sin(direction)};
    out.q = {consts.s_eps / kSqrt2 * std::cos(2.0 * direction),
             consts.s_eps / kSqrt2 * std::sin(2.0 * direction)};
    return out;
}

double f_eps(QValue q, MValue m, const ModelParams& params, const PotentialConstants& consts) {
    const double qq = q.norm_sq() - 1.0;
    const double mm = m.norm_sq() - 1.0;
    return 0.25 * qq * qq + 0.25 * params.eps * mm * mm -
           params.beta * params.eps * coupling(q, m) + consts.kappa_eps;
}

PotentialGradient grad_f_eps(QValue q, MValue m, const ModelParams& params) {
    const double be = params.beta * params.eps;
    const double qq = q.norm_sq() - 1.0;
    const double mm = m.norm_sq() - 1.0;
    PotentialGradient g;
    g.dq.q11 = 2.0 * q.q11 * qq - be * (m.m1 * m.m1 - m.m2 * m.m2);
    g.dq.q12 = 2.0 * q.q12 * qq - 2.0 * be * m.m1 * m.m2;
    g.dm.m1 = params.eps * mm * m.m1 - 2.0 * be * (q.q11 * m.m1 + q.q12 * m.m2);
    g.dm.m2 = params.eps * mm * m.m2 - 2.0 * be * (q.q12 * m.m1 - q.q11 * m.m2);
    return g;
}

Hessian4 hess_f_eps(QValue q, MValue m, const ModelParams& params) {
    const double eps = params.eps;
    const double be = params.beta * eps;
    const double a = q.q11, b = q.q12, c = m.m1, d = m.m2;
    const double qq = q.norm_sq() - 1.0;
    const double mm = m.norm_sq() - 1.0;

    Hessian4 H{};
    auto at = [&H](int i, int j) -> double& { return H[static_cast<std::size_t>(4 * i + j)]; };
    at(0, 0) = 2.0 * qq + 8.0 * a * a;
    at(0, 1) = 8.0 * a * b;
    at(1, 1) = 2.0 * qq + 8.0 * b * b;
    at(0, 2) = -2.0 * be * c;
    at(0, 3) = 2.0 * be * d;
    at(1, 2) = -2.0 * be * d;
    at(1, 3) = -2.0 * be * c;
    at(2, 2) = eps * mm + 2.0 * eps * c * c - 2.0 * be * a;
    at(2, 3) = 2.0 * eps * c * d - 2.0 * be * b;
    at(3, 3) = eps * mm + 2.0 * eps * d * d + 2.0 * be * a;
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < i; ++j) {
            at(i, j) = at(j, i);
        }
    }
    return H;
}

double g_eps(double q_norm, const ModelParams& params, const PotentialConstants& consts) {
    const double eps = params.eps;
    const double t = q_norm * q_norm - 1.0;
    return t * t / (4.0 * eps * eps) - 2.0 * consts.kappa_star / eps * (q_norm - 1.0) +
           consts.kappa_star * consts.kappa_star;
}

double h_well(double u1, double u2, const ModelParams& params) {
    const double beta = params.beta;
    const double t = u1 * u1 + u2 * u2 - 1.0;
    return 0.25 * t * t - beta / kSqrt2 * (u1 * u1 - u2 * u2) + 0.5 * (beta * beta + kSqrt2 * beta);
}

double h_speed(double u, const ModelParams& params) {
    return std::abs(kSqrt2 * params.beta + 1.0 - u * u) / kSqrt2;
}

} // namespace ferrosim
