#include "ferrosim/profile1d.hpp"

#include "ferrosim/error.hpp"

#include <algorithm>
#include <cmath>

namespace ferrosim {

namespace {

double lambda_star(const ModelParams& params) {
    return std::sqrt(std::sqrt(2.0) * params.beta + 1.0);
}

double speed(double u, double l2) { return (l2 - u * u) / std::sqrt(2.0); }

constexpr std::array<double, 8> kGlNodes = {
    -0.9602898564975363, -0.7966664774136267, -0.5255324099163290, -0.1834346424956498,
    0.1834346424956498,  0.5255324099163290,  0.7966664774136267,  0.9602898564975363};
constexpr std::array<double, 8> kGlWeights = {
    0.1012285362903763, 0.2223810344533745, 0.3137066458778873, 0.3626837833783620,
    0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};

} // namespace

double default_profile_t_max(const ModelParams& params) { return 20.0 / lambda_star(params); }

double profile_closed_form(const ModelParams& params, double t) {
    const double l = lambda_star(params);
    return l * std::tanh(l * t / std::sqrt(2.0));
}

Profile optimal_profile(const ModelParams& params, double t_max, int n_samples) {
    if (!(t_max > 0.0) || !std::isfinite(t_max)) throw InvalidInput("profile: t_max must be positive");
    if (n_samples < 100) throw InvalidInput("profile: n_samples must be at least 100");
    if (!(params.beta >= 0.0)) throw InvalidInput("profile: beta must be non-negative");

    const double l2 = std::sqrt(2.0) * params.beta + 1.0;
    const double dt = t_max / (n_samples - 1);
    Profile p;
    p.ts.resize(n_samples);
    p.us.resize(n_samples);
    double u = 0.0;
    for (int i = 0; i < n_samples; ++i) {
        p.ts[i] = i * dt;
        p.us[i] = u;
        const double k1 = speed(u, l2);
        const double k2 = speed(u + 0.5 * dt * k1, l2);
        const double k3 = speed(u + 0.5 * dt * k2, l2);
        const double k4 = speed(u + dt * k3, l2);
        u += dt * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
    }
    // RK4 can overshoot the fixed point by rounding; the profile is bounded by it.
    const double l = std::sqrt(l2);
    for (auto& v : p.us) v = std::min(v, l);
    p.energy = profile_cost(params, p);
    return p;
}

// Fornberg weights for the first derivative at offset x0 from nodes 0..m-1.
static std::vector<double> derivative_weights(double x0, int m) {
    std::vector<std::vector<double>> c(m, std::vector<double>(2, 0.0));
    c[0][0] = 1.0;
    double c1 = 1.0;
    for (int i = 1; i < m; ++i) {
        double c2 = 1.0;
        for (int j = 0; j < i; ++j) {
            const double c3 = i - j;
            c2 *= c3;
            if (j == i - 1) {
                c[i][1] = c1 * (c[i - 1][0] - (i - 1 - x0) * c[i - 1][1]) / c2;
                c[i][0] = -c1 * (i - 1 - x0) * c[i - 1][0] / c2;
            }
            c[j][1] = ((i - x0) * c[j][1] - c[j][0]) / c3;
            c[j][0] = (i - x0) * c[j][0] / c3;
        }
        c1 = c2;
    }
    std::vector<double> w(m);
    for (int j = 0; j < m; ++j) w[j] = c[j][1];
    return w;
}

std::vector<double> profile_derivative(const Profile& profile) {
    // Seven-point stencils: sixth order, centred in the interior.
    constexpr int kStencil = 7;
    const auto& u = profile.us;
    const int n = static_cast<int>(u.size());
    if (n < kStencil) throw InvalidInput("profile: need at least 7 samples");
    const double dt = profile.ts[1] - profile.ts[0];
    std::vector<std::vector<double>> weights(kStencil);
    for (int k = 0; k < kStencil; ++k) weights[k] = derivative_weights(k, kStencil);
    std::vector<double> d(n, 0.0);
    for (int i = 0; i < n; ++i) {
        const int start = std::clamp(i - kStencil / 2, 0, n - kStencil);
        const auto& w = weights[i - start];
        double s = 0.0;
        for (int j = 0; j < kStencil; ++j) s += w[j] * u[start + j];
        d[i] = s / dt;
    }
    return d;
}

double first_integral_residual(const ModelParams& params, const Profile& profile) {
    const double l2 = std::sqrt(2.0) * params.beta + 1.0;
    const auto d = profile_derivative(profile);
    double r = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double h = speed(profile.us[i], l2);
        r = std::max(r, std::abs(d[i] * d[i] - h * h));
    }
    return r;
}

double profile_cost(const ModelParams& params, const Profile& profile) {
    const double l2 = std::sqrt(2.0) * params.beta + 1.0;
    const auto d = profile_derivative(profile);
    const std::size_t n = d.size();
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double h = speed(profile.us[i], l2);
        g[i] = 0.5 * (d[i] * d[i] + h * h);
    }
    const double dt = profile.ts[1] - profile.ts[0];
    // Simpson over the longest even number of intervals, 3/8 rule for a leftover triple.
    std::size_t intervals = n - 1;
    std::size_t simpson_end = intervals % 2 == 0 ? intervals : intervals - 3;
    double s = 0.0;
    for (std::size_t i = 0; i + 2 <= simpson_end; i += 2) s += g[i] + 4.0 * g[i + 1] + g[i + 2];
    s *= dt / 3.0;
    if (simpson_end != intervals) {
        const std::size_t i = simpson_end;
        s += 3.0 * dt / 8.0 * (g[i] + 3.0 * g[i + 1] + 3.0 * g[i + 2] + g[i + 3]);
    }
    return s;
}

double half_interface_cost(const ModelParams& params) {
    const double l2 = std::sqrt(2.0) * params.beta + 1.0;
    const double l = std::sqrt(l2);
    double s = 0.0;
    for (std::size_t i = 0; i < kGlNodes.size(); ++i) {
        const double u = 0.5 * l * (kGlNodes[i] + 1.0);
        s += kGlWeights[i] * speed(u, l2);
    }
    return 0.5 * l * s;
}

double path_cost(const ModelParams& params, std::span<const Vec2> vertices) {
    if (vertices.size() < 2) throw InvalidInput("path_cost: need at least two vertices");
    double s = 0.0;
    for (std::size_t k = 0; k + 1 < vertices.size(); ++k) {
        const Vec2 a = vertices[k], b = vertices[k + 1];
        const double len = std::hypot(b[0] - a[0], b[1] - a[1]);
        double seg = 0.0;
        for (std::size_t i = 0; i < kGlNodes.size(); ++i) {
            const double t = 0.5 * (kGlNodes[i] + 1.0);
            const double u1 = a[0] + t * (b[0] - a[0]);
            const double u2 = a[1] + t * (b[1] - a[1]);
            seg += kGlWeights[i] * std::sqrt(2.0 * std::max(0.0, h_well(u1, u2, params)));
        }
        s += 0.5 * len * seg;
    }
    return s;
}

} // namespace ferrosim
