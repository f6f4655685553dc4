// core_energy.cpp
// Radial vortex cell problem.

#include "ferrosim/error.hpp"
#include "ferrosim/geometry.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

namespace ferrosim {

namespace {

constexpr double kPi = std::numbers::pi;

struct Radial {
    int n;
    double eps;
    double dr;

    // f has n + 1 entries with f[0] = 0 and f[n] = 1.
    double energy(const std::vector<double>& f) const {
        double e = 0.0;
        for (int c = 0; c < n; ++c) {
            const double r0 = c * dr, r1 = (c + 1) * dr, rm = (c + 0.5) * dr;
            const double d = f[c + 1] - f[c];
            const double fm = 0.5 * (f[c] + f[c + 1]);
            const double w = 1.0 - fm * fm;
            e += d * d * (r1 * r1 - r0 * r0) / (2.0 * dr * dr) + fm * fm / rm * dr + w * w * rm * dr / (2.0 * eps * eps);
        }
        return kPi * e;
    }

    // Gradient and tridiagonal Hessian with respect to f[1..n-1].
    void derivatives(const std::vector<double>& f, std::vector<double>& g, std::vector<double>& diag,
                     std::vector<double>& off) const {
        const int m = n - 1;
        g.assign(m, 0.0);
        diag.assign(m, 0.0);
        off.assign(m > 0 ? m - 1 : 0, 0.0);
        for (int c = 0; c < n; ++c) {
            const double r0 = c * dr, r1 = (c + 1) * dr, rm = (c + 0.5) * dr;
            const double a = (r1 * r1 - r0 * r0) / (2.0 * dr * dr);
            const double b = dr / rm;
            const double cc = rm * dr / (2.0 * eps * eps);
            const double d = f[c + 1] - f[c];
            const double fm = 0.5 * (f[c] + f[c + 1]);
            const double gm = b * fm - 2.0 * cc * fm * (1.0 - fm * fm);  // derivative w.r.t. either end
            const double hm = 0.5 * b - cc * (1.0 - 3.0 * fm * fm);      // second derivative, any pair of ends
            const int lo = c - 1, hi = c; // unknown indices of f[c], f[c+1]
            if (lo >= 0) {
                g[lo] += kPi * (-2.0 * a * d + gm);
                diag[lo] += kPi * (2.0 * a + hm);
            }
            if (hi < m) {
                g[hi] += kPi * (2.0 * a * d + gm);
                diag[hi] += kPi * (2.0 * a + hm);
            }
            if (lo >= 0 && hi < m) off[lo] += kPi * (-2.0 * a + hm);
        }
    }
};

// Solves the shifted tridiagonal system; false if a pivot is not positive.
bool solve_tridiagonal(const std::vector<double>& diag, const std::vector<double>& off, double shift,
                       const std::vector<double>& rhs, std::vector<double>& x) {
    const std::size_t m = diag.size();
    std::vector<double> c(m), d(m);
    double piv = diag[0] + shift;
    if (!(piv > 0.0)) return false;
    c[0] = m > 1 ? off[0] / piv : 0.0;
    d[0] = rhs[0] / piv;
    for (std::size_t i = 1; i < m; ++i) {
        piv = diag[i] + shift - off[i - 1] * c[i - 1];
        if (!(piv > 0.0)) return false;
        c[i] = i + 1 < m ? off[i] / piv : 0.0;
        d[i] = (rhs[i] - off[i - 1] * d[i - 1]) / piv;
    }
    x.resize(m);
    x[m - 1] = d[m - 1];
    for (std::size_t i = m - 1; i-- > 0;) x[i] = d[i] - c[i] * x[i + 1];
    return true;
}

CoreEnergyRow solve_cell(double eps, int n) {
    const Radial rad{n, eps, 1.0 / n};
    std::vector<double> f(n + 1);
    for (int i = 0; i <= n; ++i) f[i] = std::tanh(i * rad.dr / eps) / std::tanh(1.0 / eps);
    f[0] = 0.0;
    f[n] = 1.0;

    std::vector<double> g, diag, off, step;
    double e = rad.energy(f);
    for (int it = 1; it <= 200; ++it) {
        rad.derivatives(f, g, diag, off);
        double gnorm = 0.0;
        for (double v : g) gnorm = std::max(gnorm, std::abs(v));
        std::vector<double> rhs(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) rhs[i] = -g[i];
        double shift = 0.0;
        double dmax = 0.0;
        for (double v : diag) dmax = std::max(dmax, std::abs(v));
        while (!solve_tridiagonal(diag, off, shift, rhs, step)) {
            shift = shift == 0.0 ? 1e-8 * dmax : 4.0 * shift;
            if (shift > 1e3 * dmax) throw SolverError("core energy: Hessian shift failed at eps = " + std::to_string(eps));
        }
        double smax = 0.0;
        for (double v : step) smax = std::max(smax, std::abs(v));
        if (smax < 1e-13) return {eps, e, e - kPi * std::abs(std::log(eps)), it};

        double t = 1.0;
        std::vector<double> trial = f;
        for (;;) {
            for (int i = 1; i < n; ++i) trial[i] = f[i] + t * step[i - 1];
            const double et = rad.energy(trial);
            if (et <= e + 1e-14 * std::abs(e)) {
                f = trial;
                e = et;
                break;
            }
            t *= 0.5;
            if (t < 1e-12) {
                if (gnorm < 1e-9) return {eps, e, e - kPi * std::abs(std::log(eps)), it};
                throw SolverError("core energy: line search failed at eps = " + std::to_string(eps) +
                                  ", gradient norm " + std::to_string(gnorm));
            }
        }
    }
    throw SolverError("core energy: Newton did not converge at eps = " + std::to_string(eps));
}

} // namespace

CoreEnergyResult core_energy(std::span<const double> eps_list, int n) {
    if (eps_list.empty()) throw InvalidInput("core_energy needs at least one eps");
    if (n < 4) throw InvalidInput("core_energy needs at least 4 radial cells");
    for (std::size_t i = 0; i < eps_list.size(); ++i) {
        if (!(eps_list[i] >= 2.0 / n)) throw InvalidInput("eps below 2/n is not resolved by the radial grid");
        if (i > 0 && !(eps_list[i] < eps_list[i - 1])) throw InvalidInput("eps_list must be strictly decreasing");
    }
    CoreEnergyResult out;
    for (double eps : eps_list) out.table.push_back(solve_cell(eps, n));

    if (out.table.size() == 1) {
        out.gamma_star = out.table.front().gamma_minus_log;
        return out;
    }
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (const auto& r : out.table) {
        const double x = r.eps * r.eps;
        sx += x;
        sy += r.gamma_minus_log;
        sxx += x * x;
        sxy += x * r.gamma_minus_log;
    }
    const double m = static_cast<double>(out.table.size());
    const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    out.gamma_star = (sy - slope * sx) / m;
    return out;
}

} // namespace ferrosim
