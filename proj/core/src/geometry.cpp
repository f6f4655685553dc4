// geometry.cpp

#include "ferrosim/geometry.hpp"

#include "ferrosim/error.hpp"
#include "ferrosim/linsolve.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numbers>
#include <queue>
#include <string>
#include <thread>

namespace ferrosim {

namespace {

constexpr double kPi = std::numbers::pi;

double wrap_angle(double a) {
    a = std::remainder(a, 2.0 * kPi);
    return a <= -kPi ? a + 2.0 * kPi : a;
}

struct PairingSearch {
    std::span<const Point2> pts;
    std::vector<double> dist;
    std::vector<int> partner;
    std::vector<int> best_partner;
    double best = std::numeric_limits<double>::infinity();
    double tie_tol = 0.0;

    double d(std::size_t i, std::size_t j) const { return dist[i * pts.size() + j]; }

    void search(double partial) {
        if (partial > best - tie_tol) return;
        std::size_t i = 0;
        while (i < pts.size() && partner[i] >= 0) ++i;
        if (i == pts.size()) {
            best = partial;
            best_partner = partner;
            return;
        }
        for (std::size_t j = i + 1; j < pts.size(); ++j) {
            if (partner[j] >= 0) continue;
            partner[i] = static_cast<int>(j);
            partner[j] = static_cast<int>(i);
            search(partial + d(i, j));
            partner[i] = -1;
            partner[j] = -1;
        }
    }
};

} // namespace

double distance(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

Connection minimal_connection(std::span<const Point2> points) {
    if (points.size() > kMaxConnectionPoints) {
        throw CapacityError("minimal_connection handles at most " + std::to_string(kMaxConnectionPoints) +
                            " points, got " + std::to_string(points.size()));
    }
    if (points.empty() || points.size() % 2 != 0) {
        throw InvalidInput("minimal_connection needs a positive even number of points");
    }
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (!std::isfinite(points[i].x) || !std::isfinite(points[i].y)) {
            throw InvalidInput("non-finite point");
        }
        for (std::size_t j = i + 1; j < points.size(); ++j) {
            if (points[i] == points[j]) throw InvalidInput("repeated point in connection input");
        }
    }

    PairingSearch s;
    s.pts = points;
    const std::size_t n = points.size();
    s.dist.resize(n * n);
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            s.dist[i * n + j] = distance(points[i], points[j]);
            scale = std::max(scale, s.dist[i * n + j]);
        }
    }
    s.tie_tol = 1e-12 * scale * static_cast<double>(n);
    s.partner.assign(n, -1);
    s.search(0.0);

    Connection c;
    c.points.assign(points.begin(), points.end());
    for (std::size_t i = 0; i < n; ++i) {
        const auto j = static_cast<std::size_t>(s.best_partner[i]);
        if (i < j) {
            c.pairs.push_back({i, j});
            c.total_length += s.d(i, j);
        }
    }
    return c;
}

int orientation(Point2 a, Point2 b, Point2 c) {
    const double v = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
    return (v > 0.0) - (v < 0.0);
}

namespace {

bool on_segment(Point2 a, Point2 b, Point2 p) {
    return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
           p.y <= std::max(a.y, b.y);
}

} // namespace

bool segments_intersect(Point2 a, Point2 b, Point2 c, Point2 d) {
    const int o1 = orientation(a, b, c);
    const int o2 = orientation(a, b, d);
    const int o3 = orientation(c, d, a);
    const int o4 = orientation(c, d, b);
    if (o1 != o2 && o3 != o4 && o1 * o2 <= 0 && o3 * o4 <= 0) {
        if (o1 != 0 || o2 != 0) return true;
    }
    if (o1 == 0 && on_segment(a, b, c)) return true;
    if (o2 == 0 && on_segment(a, b, d)) return true;
    if (o3 == 0 && on_segment(c, d, a)) return true;
    if (o4 == 0 && on_segment(c, d, b)) return true;
    return false;
}

bool segments_disjoint(const Connection& c) {
    for (std::size_t s = 0; s < c.pairs.size(); ++s) {
        for (std::size_t t = s + 1; t < c.pairs.size(); ++t) {
            if (segments_intersect(c.points[c.pairs[s][0]], c.points[c.pairs[s][1]], c.points[c.pairs[t][0]],
                                   c.points[c.pairs[t][1]])) {
                return false;
            }
        }
    }
    return true;
}

namespace {

// Increment of atan2 about a along the lattice edge p -> q. It is zero when
// a coincides with an end of the edge, and an exact half turn (a inside the
// edge) also counts as zero, so increments stay antisymmetric and invariant
// under the lattice symmetries.
double singular_increment(Point2 a, Point2 p, Point2 q) {
    if ((p.x == a.x && p.y == a.y) || (q.x == a.x && q.y == a.y)) return 0.0;
    const double d = wrap_angle(std::atan2(q.y - a.y, q.x - a.x) - std::atan2(p.y - a.y, p.x - a.x));
    return d == kPi ? 0.0 : d;
}

} // namespace

AngleField canonical_angle(std::span<const Point2> points, int k, const Grid& grid, double tol) {
    if (k < 1) throw InvalidInput("canonical_angle needs k >= 1");
    if (points.size() != static_cast<std::size_t>(2 * k)) {
        throw InvalidInput("canonical_angle needs 2k = " + std::to_string(2 * k) + " points, got " +
                           std::to_string(points.size()));
    }
    for (const auto& p : points) {
        if (!(p.x > 0.0 && p.x < 1.0 && p.y > 0.0 && p.y < 1.0)) {
            throw InvalidInput("defect points must lie strictly inside the unit square");
        }
    }

    AngleField f(grid);
    f.points.assign(points.begin(), points.end());
    f.k = k;
    const std::size_t count = grid.nodes();
    f.singular.assign(count, 0.0);
    for (int j = 0; j < grid.side(); ++j) {
        for (int i = 0; i < grid.side(); ++i) {
            double s = 0.0;
            for (const auto& a : points) {
                const double dx = grid.x(i) - a.x;
                const double dy = grid.y(j) - a.y;
                s += (dx == 0.0 && dy == 0.0) ? 0.0 : std::atan2(dy, dx);
            }
            f.singular[grid.index(i, j)] = s;
        }
    }

    // Boundary values of the correction: (datum angle - singular part),
    // unwrapped along the loop.
    f.correction.assign(count, 0.0);
    const auto loop = grid.boundary_loop();
    double prev_raw = 0.0;
    double prev = 0.0;
    for (std::size_t b = 0; b < loop.size(); ++b) {
        const auto [i, j] = loop[b];
        const std::size_t p = grid.index(i, j);
        const double raw = 2.0 * k * datum_angle(grid.x(i), grid.y(j)) - f.singular[p];
        const double v = b == 0 ? wrap_angle(raw) : prev + wrap_angle(raw - prev_raw);
        f.correction[p] = v;
        prev_raw = raw;
        prev = v;
    }
    {
        const auto [i, j] = loop.front();
        const std::size_t p0 = grid.index(i, j);
        const double closing = prev + wrap_angle((2.0 * k * datum_angle(grid.x(i), grid.y(j)) - f.singular[p0]) -
                                                 prev_raw) - f.correction[p0];
        if (std::abs(closing) > 1e-6) {
            throw InvalidInput("boundary angle mismatch winds " + std::to_string(closing / (2.0 * kPi)) +
                               " times; defects and boundary degree are inconsistent");
        }
    }

    // Source: minus the divergence of the singular increments, taken point by
    // point so that a defect sitting on a node or an edge does not plant a
    // spurious charge (see singular_increment).
    auto div_singular = [&](int i, int j) {
        const Point2 c{grid.x(i), grid.y(j)};
        const Point2 nb[4] = {{grid.x(i + 1), c.y}, {grid.x(i - 1), c.y}, {c.x, grid.y(j + 1)}, {c.x, grid.y(j - 1)}};
        double div = 0.0;
        for (const auto& q : nb)
            for (const auto& a : points) div += singular_increment(a, c, q);
        return div;
    };
    std::vector<double> source(count, 0.0);
    for (int j = 1; j < grid.n(); ++j)
        for (int i = 1; i < grid.n(); ++i) source[grid.index(i, j)] = -div_singular(i, j);
    solve_poisson_dirichlet(grid, f.correction, source, tol);

    f.theta.resize(count);
    for (std::size_t p = 0; p < count; ++p) f.theta[p] = f.singular[p] + f.correction[p];

    double worst = 0.0;
    for (int j = 1; j < grid.n(); ++j) {
        for (int i = 1; i < grid.n(); ++i) {
            const double c = f.correction[grid.index(i, j)];
            const double div = div_singular(i, j) + f.correction[grid.index(i + 1, j)] +
                               f.correction[grid.index(i - 1, j)] + f.correction[grid.index(i, j + 1)] +
                               f.correction[grid.index(i, j - 1)] - 4.0 * c;
            worst = std::max(worst, std::abs(div));
        }
    }
    f.divergence_residual = worst;
    return f;
}

double harmonic_residual(const AngleField& f, double min_dist) {
    const Grid& g = f.grid;
    const double inv_h2 = 1.0 / (g.h() * g.h());
    double worst = 0.0;
    for (int j = 1; j < g.n(); ++j) {
        for (int i = 1; i < g.n(); ++i) {
            const Point2 x{g.x(i), g.y(j)};
            bool far = true;
            for (const auto& a : f.points) far = far && distance(x, a) >= min_dist;
            if (!far) continue;
            const double c = f.theta[g.index(i, j)];
            const double lap = wrap_angle(f.theta[g.index(i + 1, j)] - c) + wrap_angle(f.theta[g.index(i - 1, j)] - c) +
                               wrap_angle(f.theta[g.index(i, j + 1)] - c) + wrap_angle(f.theta[g.index(i, j - 1)] - c);
            worst = std::max(worst, std::abs(lap) * inv_h2);
        }
    }
    return worst;
}

namespace {

double dist_to_boundary(Point2 p) { return std::min({p.x, p.y, 1.0 - p.x, 1.0 - p.y}); }

// Largest radius r such that balls of radius < r are admissible.
double ball_bound(std::span<const Point2> points) {
    double bound = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < points.size(); ++a) {
        bound = std::min(bound, dist_to_boundary(points[a]));
        for (std::size_t b = a + 1; b < points.size(); ++b) bound = std::min(bound, 0.5 * distance(points[a], points[b]));
    }
    return bound;
}

enum class CellClass { outside, inside, cut };

CellClass classify(double x0, double y0, double h, std::span<const Point2> centres, double sigma) {
    bool cut = false;
    for (const auto& a : centres) {
        const double nx = std::clamp(a.x, x0, x0 + h) - a.x;
        const double ny = std::clamp(a.y, y0, y0 + h) - a.y;
        if (std::hypot(nx, ny) >= sigma) continue;
        const double fx = std::max(std::abs(x0 - a.x), std::abs(x0 + h - a.x));
        const double fy = std::max(std::abs(y0 - a.y), std::abs(y0 + h - a.y));
        if (std::hypot(fx, fy) <= sigma) return CellClass::inside;
        cut = true;
    }
    return cut ? CellClass::cut : CellClass::outside;
}

// 1/2 |grad theta|^2 at local coordinates (s, t) of cell (ci, cj): the
// singular part is differentiated exactly, the correction bilinearly.
struct DensityEval {
    const AngleField& f;

    double operator()(int ci, int cj, double s, double t) const {
        const Grid& g = f.grid;
        const double h = g.h();
        const double x = g.x(ci) + s * h;
        const double y = g.y(cj) + t * h;
        double gx = 0.0, gy = 0.0;
        for (const auto& a : f.points) {
            const double dx = x - a.x, dy = y - a.y;
            const double r2 = dx * dx + dy * dy;
            gx -= dy / r2;
            gy += dx / r2;
        }
        const double c00 = f.correction[g.index(ci, cj)];
        const double c10 = f.correction[g.index(ci + 1, cj)];
        const double c01 = f.correction[g.index(ci, cj + 1)];
        const double c11 = f.correction[g.index(ci + 1, cj + 1)];
        gx += ((1.0 - t) * (c10 - c00) + t * (c11 - c01)) / h;
        gy += ((1.0 - s) * (c01 - c00) + s * (c11 - c10)) / h;
        return 0.5 * (gx * gx + gy * gy);
    }
};

} // namespace

RenormalizedEnergy renormalized_energy(const AngleField& f, std::span<const double> sigmas) {
    const Grid& g = f.grid;
    const double h = g.h();
    if (sigmas.size() < 2) throw InvalidInput("renormalized_energy needs at least two sigmas");
    const double bound = ball_bound(f.points);
    for (std::size_t s = 0; s < sigmas.size(); ++s) {
        if (!(sigmas[s] >= 4.0 * h * (1.0 - 1e-12))) {
            throw InvalidInput("sigma " + std::to_string(sigmas[s]) + " is below 4h");
        }
        if (!(sigmas[s] < bound)) {
            throw InvalidInput("sigma " + std::to_string(sigmas[s]) +
                               " makes balls overlap or touch the boundary (limit " + std::to_string(bound) + ")");
        }
        for (std::size_t t = 0; t < s; ++t) {
            if (sigmas[s] == sigmas[t]) throw InvalidInput("sigmas must be pairwise distinct");
        }
    }

    const int n = g.n();
    const DensityEval density{f};
    // Three-point Gauss rule on [0, 1].
    constexpr double gn[3] = {0.5 - 0.3872983346207417, 0.5, 0.5 + 0.3872983346207417};
    constexpr double gw[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
    constexpr int kSub = 24;

    std::vector<double> full(static_cast<std::size_t>(n) * n);
    for (int cj = 0; cj < n; ++cj) {
        for (int ci = 0; ci < n; ++ci) {
            double e = 0.0;
            for (int b = 0; b < 3; ++b) {
                for (int a = 0; a < 3; ++a) e += gw[a] * gw[b] * density(ci, cj, gn[a], gn[b]);
            }
            full[static_cast<std::size_t>(cj) * n + ci] = e * h * h;
        }
    }

    RenormalizedEnergy out;
    const double k_abs = std::abs(f.k);
    for (double sigma : sigmas) {
        double e = 0.0;
        for (int cj = 0; cj < n; ++cj) {
            for (int ci = 0; ci < n; ++ci) {
                switch (classify(g.x(ci), g.y(cj), h, f.points, sigma)) {
                case CellClass::inside:
                    break;
                case CellClass::outside:
                    e += full[static_cast<std::size_t>(cj) * n + ci];
                    break;
                case CellClass::cut: {
                    double part = 0.0;
                    for (int sj = 0; sj < kSub; ++sj) {
                        for (int si = 0; si < kSub; ++si) {
                            const double s = (si + 0.5) / kSub, t = (sj + 0.5) / kSub;
                            const Point2 p{g.x(ci) + s * h, g.y(cj) + t * h};
                            bool outside = true;
                            for (const auto& a : f.points) outside = outside && distance(p, a) >= sigma;
                            if (outside) part += density(ci, cj, s, t);
                        }
                    }
                    e += part * h * h / (kSub * kSub);
                    break;
                }
                }
            }
        }
        out.table.push_back({sigma, e, e - 2.0 * kPi * k_abs * std::abs(std::log(sigma)), 0.0});
    }

    // Least squares for w_sigma = A + B sigma.
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (const auto& r : out.table) {
        sx += r.sigma;
        sy += r.w_sigma;
        sxx += r.sigma * r.sigma;
        sxy += r.sigma * r.w_sigma;
    }
    const double m = static_cast<double>(out.table.size());
    out.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    out.w = (sy - out.slope * sx) / m;
    for (auto& r : out.table) {
        r.fitted = out.w + out.slope * r.sigma;
        out.max_fit_residual = std::max(out.max_fit_residual, std::abs(r.w_sigma - r.fitted));
    }
    return out;
}

RenormalizedEnergy renormalized_energy(std::span<const Point2> points, int k, const Grid& grid,
                                       std::span<const double> sigmas) {
    return renormalized_energy(canonical_angle(points, k, grid), sigmas);
}

std::vector<double> sigma_ladder(std::span<const Point2> points, const Grid& grid) {
    const double h = grid.h();
    const double bound = ball_bound(points);
    std::vector<double> ladder;
    for (double s : {4.0 * h, 8.0 * h, 16.0 * h}) {
        if (s < bound) ladder.push_back(s);
    }
    if (ladder.size() >= 2) return ladder;
    const double top = bound - 0.5 * h;
    if (top < 5.0 * h) return {};
    return {4.0 * h, 0.5 * (4.0 * h + top), top};
}

double w_beta(std::span<const Point2> points, int k, [[maybe_unused]] const ModelParams& params,
              const PotentialConstants& consts, const Grid& grid) {
    const std::vector<double> ladder = sigma_ladder(points, grid);
    if (ladder.empty()) {
        throw InvalidInput("defects too close to each other or to the boundary for a 4h sigma ladder");
    }
    const RenormalizedEnergy w = renormalized_energy(points, k, grid, ladder);
    return w.w + consts.c_beta * minimal_connection(points).total_length;
}

unsigned worker_count(unsigned requested) {
    unsigned n = requested;
    if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("FERROSIM_THREADS")) {
        const long cap = std::strtol(env, nullptr, 10);
        if (cap >= 1) n = std::min(n, static_cast<unsigned>(cap));
    }
    return std::max(1u, n);
}

namespace {

struct Objective {
    int k;
    const ModelParams& params;
    PotentialConstants consts;
    const Grid& grid;
    const WBetaOptions& opt;

    // Second member: whether w_beta itself was defined at x.
    std::pair<double, bool> operator()(const std::vector<double>& x) const {
        std::vector<Point2> pts(x.size() / 2);
        for (std::size_t a = 0; a < pts.size(); ++a) pts[a] = {x[2 * a], x[2 * a + 1]};
        const double h = grid.h();
        const double margin = opt.margin_cells * h;
        const double sep = opt.separation_cells * h;
        double viol = 0.0;
        for (std::size_t a = 0; a < pts.size(); ++a) {
            viol += std::pow(std::max(0.0, margin - dist_to_boundary(pts[a])), 2);
            for (std::size_t b = a + 1; b < pts.size(); ++b) {
                viol += std::pow(std::max(0.0, sep - distance(pts[a], pts[b])), 2);
            }
        }
        const double pen = opt.penalty * viol / (h * h);
        const bool inside = std::all_of(pts.begin(), pts.end(), [](Point2 p) {
            return p.x > 0.0 && p.x < 1.0 && p.y > 0.0 && p.y < 1.0;
        });
        if (!inside || sigma_ladder(pts, grid).empty()) {
            // Outside the region where the energy is defined: a plateau above
            // any attainable value, rising quadratically with the violation.
            double out = 0.0;
            for (const auto& p : pts) {
                out += std::pow(std::max(0.0, -p.x), 2) + std::pow(std::max(0.0, p.x - 1.0), 2) +
                       std::pow(std::max(0.0, -p.y), 2) + std::pow(std::max(0.0, p.y - 1.0), 2);
            }
            return {opt.penalty * (1.0 + viol / (h * h) + out / (h * h)), false};
        }
        return {w_beta(pts, k, params, consts, grid) + pen, true};
    }
};

WBetaMinimum nelder_mead(const Objective& obj, const std::vector<Point2>& start, std::size_t start_index,
                         const WBetaOptions& opt, double h) {
    const std::size_t dim = 2 * start.size();
    std::vector<std::vector<double>> simplex(dim + 1, std::vector<double>(dim));
    for (std::size_t a = 0; a < start.size(); ++a) {
        simplex[0][2 * a] = start[a].x;
        simplex[0][2 * a + 1] = start[a].y;
    }
    const double step = std::max(8.0 * h, 0.05);
    for (std::size_t d = 0; d < dim; ++d) {
        simplex[d + 1] = simplex[0];
        simplex[d + 1][d] += (simplex[0][d] > 0.5 ? -step : step);
    }
    std::vector<double> val(dim + 1);
    std::vector<std::uint8_t> ok(dim + 1);
    int evals = 0;
    auto eval = [&](const std::vector<double>& x, std::uint8_t& defined) {
        ++evals;
        const auto [v, d] = obj(x);
        defined = d ? 1 : 0;
        return v;
    };
    for (std::size_t v = 0; v <= dim; ++v) val[v] = eval(simplex[v], ok[v]);

    std::vector<std::size_t> order(dim + 1);
    while (evals < opt.max_evaluations) {
        for (std::size_t v = 0; v <= dim; ++v) order[v] = v;
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return val[a] < val[b]; });
        const std::size_t best = order.front();
        const std::size_t worst = order.back();
        const std::size_t second = order[dim - 1];

        double size = 0.0;
        for (std::size_t v = 0; v <= dim; ++v) {
            for (std::size_t d = 0; d < dim; ++d) size = std::max(size, std::abs(simplex[v][d] - simplex[best][d]));
        }
        if (size < opt.simplex_tol_cells * h) break;

        std::vector<double> centroid(dim, 0.0);
        for (std::size_t v = 0; v <= dim; ++v) {
            if (v == worst) continue;
            for (std::size_t d = 0; d < dim; ++d) centroid[d] += simplex[v][d] / static_cast<double>(dim);
        }
        auto along = [&](double t) {
            std::vector<double> x(dim);
            for (std::size_t d = 0; d < dim; ++d) x[d] = centroid[d] + t * (simplex[worst][d] - centroid[d]);
            return x;
        };
        std::uint8_t okr = 0;
        const std::vector<double> xr = along(-1.0);
        const double fr = eval(xr, okr);
        if (fr < val[best]) {
            std::uint8_t oke = 0;
            const std::vector<double> xe = along(-2.0);
            const double fe = eval(xe, oke);
            if (fe < fr) { simplex[worst] = xe; val[worst] = fe; ok[worst] = oke; }
            else { simplex[worst] = xr; val[worst] = fr; ok[worst] = okr; }
            continue;
        }
        if (fr < val[second]) {
            simplex[worst] = xr; val[worst] = fr; ok[worst] = okr;
            continue;
        }
        std::uint8_t okc = 0;
        const bool outside = fr < val[worst];
        const std::vector<double> xc = along(outside ? -0.5 : 0.5);
        const double fc = eval(xc, okc);
        if (fc < (outside ? fr : val[worst])) {
            simplex[worst] = xc; val[worst] = fc; ok[worst] = okc;
            continue;
        }
        for (std::size_t v = 0; v <= dim; ++v) {
            if (v == best) continue;
            for (std::size_t d = 0; d < dim; ++d) simplex[v][d] = simplex[best][d] + 0.5 * (simplex[v][d] - simplex[best][d]);
            val[v] = eval(simplex[v], ok[v]);
        }
    }
    std::size_t best = 0;
    for (std::size_t v = 1; v <= dim; ++v) {
        if (val[v] < val[best]) best = v;
    }
    WBetaMinimum m;
    m.start = start_index;
    m.evaluations = evals;
    m.value = ok[best] ? val[best] : std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < start.size(); ++a) m.points.push_back({simplex[best][2 * a], simplex[best][2 * a + 1]});
    std::sort(m.points.begin(), m.points.end(), [](Point2 a, Point2 b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
    return m;
}

// Smallest over permutations of the largest point displacement.
double set_distance(std::vector<Point2> a, const std::vector<Point2>& b) {
    std::vector<std::size_t> perm(a.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    double best = std::numeric_limits<double>::infinity();
    do {
        double worst = 0.0;
        for (std::size_t i = 0; i < perm.size(); ++i) worst = std::max(worst, distance(a[i], b[perm[i]]));
        best = std::min(best, worst);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

} // namespace

WBetaResult minimize_w_beta(int k, const ModelParams& params, const Grid& grid,
                            const std::vector<std::vector<Point2>>& starts, const WBetaOptions& options) {
    if (k < 1) throw InvalidInput("minimize_w_beta needs k >= 1");
    if (starts.empty()) throw InvalidInput("minimize_w_beta needs at least one start");
    for (const auto& s : starts) {
        if (s.size() != static_cast<std::size_t>(2 * k)) {
            throw InvalidInput("every start needs 2k = " + std::to_string(2 * k) + " points");
        }
    }
    const Objective obj{k, params, potential_constants(params), grid, options};

    WBetaResult res;
    res.per_start.resize(starts.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t s = next++; s < starts.size(); s = next++) {
            res.per_start[s] = nelder_mead(obj, starts[s], s, options, grid.h());
        }
    };
    const unsigned nthreads = std::min<unsigned>(worker_count(options.threads), static_cast<unsigned>(starts.size()));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < nthreads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    std::vector<WBetaMinimum> feasible;
    for (const auto& m : res.per_start) {
        if (std::isfinite(m.value)) feasible.push_back(m);
    }
    if (feasible.empty()) throw SolverError("no start reached a configuration where W_beta is defined");
    std::stable_sort(feasible.begin(), feasible.end(), [](const auto& a, const auto& b) { return a.value < b.value; });
    res.best = feasible.front();
    for (const auto& m : feasible) {
        const bool seen = std::any_of(res.distinct.begin(), res.distinct.end(), [&](const WBetaMinimum& d) {
            return set_distance(m.points, d.points) < 2.0 * grid.h();
        });
        if (!seen) res.distinct.push_back(m);
    }
    return res;
}

bool edge_crosses_connection(Point2 a, Point2 b, const Connection& c) {
    for (const auto& pr : c.pairs) {
        const Point2 s0 = c.points[pr[0]];
        const Point2 s1 = c.points[pr[1]];
        const int sa = orientation(s0, s1, a) >= 0 ? 1 : -1;
        const int sb = orientation(s0, s1, b) >= 0 ? 1 : -1;
        if (sa == sb) continue;
        if (orientation(a, b, s0) * orientation(a, b, s1) <= 0) return true;
    }
    return false;
}

Lifting sbv_lifting(const AngleField& f, const Connection& connection, const ModelParams& params) {
    const Grid& g = f.grid;
    const std::size_t count = g.nodes();
    const double lambda_star = std::sqrt(std::numbers::sqrt2 * params.beta + 1.0);

    Lifting out;
    out.n1.resize(count);
    out.n2.resize(count);
    out.sign.assign(count, 0);
    std::vector<double> d1(count), d2(count);
    for (std::size_t p = 0; p < count; ++p) {
        d1[p] = std::cos(0.5 * f.theta[p]);
        d2[p] = std::sin(0.5 * f.theta[p]);
    }

    std::queue<std::pair<int, int>> frontier;
    for (const auto& [i, j] : g.boundary_loop()) {
        const std::size_t p = g.index(i, j);
        const auto [q, m] = degree_k_datum(g.x(i), g.y(j), f.k, params);
        out.sign[p] = (d1[p] * m.m1 + d2[p] * m.m2) >= 0.0 ? 1 : -1;
        frontier.emplace(i, j);
    }
    auto pt = [&](int i, int j) { return Point2{g.x(i), g.y(j)}; };
    while (!frontier.empty()) {
        const auto [i, j] = frontier.front();
        frontier.pop();
        const std::size_t p = g.index(i, j);
        const int nbr[4][2] = {{i + 1, j}, {i - 1, j}, {i, j + 1}, {i, j - 1}};
        for (const auto& nb : nbr) {
            if (nb[0] < 0 || nb[1] < 0 || nb[0] > g.n() || nb[1] > g.n()) continue;
            if (edge_crosses_connection(pt(i, j), pt(nb[0], nb[1]), connection)) continue;
            const std::size_t q = g.index(nb[0], nb[1]);
            const double align = d1[p] * d1[q] + d2[p] * d2[q];
            const std::int8_t want = static_cast<std::int8_t>(align >= 0.0 ? out.sign[p] : -out.sign[p]);
            if (out.sign[q] == 0) {
                out.sign[q] = want;
                frontier.emplace(nb[0], nb[1]);
            }
        }
    }

    for (std::size_t p = 0; p < count; ++p) {
        if (out.sign[p] == 0) {
            throw InvalidInput("connection separates part of the domain from the boundary");
        }
        out.n1[p] = out.sign[p] * d1[p];
        out.n2[p] = out.sign[p] * d2[p];
    }
    // Consistency over every non-crossing edge.
    for (int j = 0; j <= g.n(); ++j) {
        for (int i = 0; i <= g.n(); ++i) {
            const std::size_t p = g.index(i, j);
            for (const auto& nb : {std::pair{i + 1, j}, std::pair{i, j + 1}}) {
                if (nb.first > g.n() || nb.second > g.n()) continue;
                if (edge_crosses_connection(pt(i, j), pt(nb.first, nb.second), connection)) continue;
                const std::size_t q = g.index(nb.first, nb.second);
                if (out.n1[p] * out.n1[q] + out.n2[p] * out.n2[q] < 0.0) ++out.conflicts;
            }
        }
    }
    out.m1.resize(count);
    out.m2.resize(count);
    for (std::size_t p = 0; p < count; ++p) {
        out.m1[p] = lambda_star * out.n1[p];
        out.m2[p] = lambda_star * out.n2[p];
    }
    return out;
}

} // namespace ferrosim
