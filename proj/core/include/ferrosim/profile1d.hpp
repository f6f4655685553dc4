// profile1d.hpp
// The one-dimensional optimal transition profile for M across a jump line
// and the associated interface cost c_beta.

#pragma once

#include "ferrosim/potential.hpp"

#include <array>
#include <span>
#include <vector>

namespace ferrosim {

struct Profile {
    std::vector<double> ts;
    std::vector<double> us;
    double energy = 0.0; // int (u'^2 + H(u)^2) / 2 dt over [0, t_max]
};

/// 20 / lambda_*, long enough for tanh to saturate below 1e-9.
double default_profile_t_max(const ModelParams& params);

/// Integrates u' = H(u) = (lambda_*^2 - u^2) / sqrt(2) from u(0) = 0 with
/// classical RK4 on n_samples equispaced points of [0, t_max].
/// Throws InvalidInput unless t_max > 0 and n_samples >= 100.
Profile optimal_profile(const ModelParams& params, double t_max, int n_samples);

/// lambda_* tanh(lambda_* t / sqrt(2)).
double profile_closed_form(const ModelParams& params, double t);

/// Sixth-order finite-difference derivative of the sampled profile.
std::vector<double> profile_derivative(const Profile& profile);

/// max |u'^2 - H(u)^2| along the samples, u' from profile_derivative.
double first_integral_residual(const ModelParams& params, const Profile& profile);

/// Composite Simpson quadrature of int (u'^2 + H(u)^2) / 2 dt. Needs an odd
/// number of samples for the pure Simpson rule; an even count closes the
/// last interval with the 3/8 rule.
double profile_cost(const ModelParams& params, const Profile& profile);

/// Gauss-Legendre value of int_0^{lambda_*} H(u) du, which equals c_beta / 2.
double half_interface_cost(const ModelParams& params);

using Vec2 = std::array<double, 2>;

/// int sqrt(2 h(u)) |u'| along the polyline through `vertices`, each segment
/// integrated by 8-point Gauss-Legendre. Needs at least two vertices.
double path_cost(const ModelParams& params, std::span<const Vec2> vertices);

} // namespace ferrosim
