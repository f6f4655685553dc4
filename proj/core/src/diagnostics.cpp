// diagnostics.cpp

#include "ferrosim/diagnostics.hpp"

#include "ferrosim/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <queue>
#include <unordered_map>

namespace ferrosim {

namespace {

constexpr double kPi = std::numbers::pi;

double wrap_angle(double a) {
    while (a > kPi) a -= 2.0 * kPi;
    while (a <= -kPi) a += 2.0 * kPi;
    return a;
}

// Wrapped increment along the directed edge p -> q. An exact half turn is
// +pi from the lower to the higher node index and -pi back, so increments
// stay antisymmetric and plaquette windings telescope to loop windings.
double edge_increment(double to, double from, std::size_t p, std::size_t q) {
    const double d = wrap_angle(to - from);
    return (d == kPi && p > q) ? -kPi : d;
}

struct Corners {
    std::size_t p00, p10, p01, p11;
};

Corners cell_corners(const Grid& g, int ci, int cj) {
    return {g.index(ci, cj), g.index(ci + 1, cj), g.index(ci, cj + 1), g.index(ci + 1, cj + 1)};
}

// Mean of the four squared edge differences, divided by 2 h^2 per direction.
double cell_sqgrad(const std::vector<double>& u, const Corners& c, double inv_h2) {
    const double dx0 = u[c.p10] - u[c.p00];
    const double dx1 = u[c.p11] - u[c.p01];
    const double dy0 = u[c.p01] - u[c.p00];
    const double dy1 = u[c.p11] - u[c.p10];
    return 0.5 * (dx0 * dx0 + dx1 * dx1 + dy0 * dy0 + dy1 * dy1) * inv_h2;
}

double cell_sqgrad4(double u00, double u10, double u01, double u11, double inv_h2) {
    const double dx0 = u10 - u00;
    const double dx1 = u11 - u01;
    const double dy0 = u01 - u00;
    const double dy1 = u11 - u10;
    return 0.5 * (dx0 * dx0 + dx1 * dx1 + dy0 * dy0 + dy1 * dy1) * inv_h2;
}

double q_angle(const FieldState& s, std::size_t p) { return std::atan2(s.q12[p], s.q11[p]); }

int loop_winding(const FieldState& s, const std::vector<std::size_t>& loop) {
    double total = 0.0;
    for (std::size_t a = 0; a < loop.size(); ++a) {
        const std::size_t p = loop[a];
        const std::size_t q = loop[(a + 1) % loop.size()];
        total += edge_increment(q_angle(s, q), q_angle(s, p), p, q);
    }
    return static_cast<int>(std::lround(total / (2.0 * kPi)));
}

// Counter-clockwise square loop of nodes around [i0, i1] x [j0, j1].
std::vector<std::size_t> box_loop(const Grid& g, int i0, int j0, int i1, int j1) {
    std::vector<std::size_t> loop;
    for (int i = i0; i < i1; ++i) loop.push_back(g.index(i, j0));
    for (int j = j0; j < j1; ++j) loop.push_back(g.index(i1, j));
    for (int i = i1; i > i0; --i) loop.push_back(g.index(i, j1));
    for (int j = j1; j > j0; --j) loop.push_back(g.index(i0, j));
    return loop;
}

double node_q_norm(const FieldState& s, std::size_t p) { return s.q(p).norm(); }

} // namespace

EnergyBreakdown discrete_energy(const FieldState& s, const ModelParams& params, const PotentialConstants& consts,
                                const std::vector<std::uint8_t>* cell_mask) {
    const Grid& g = s.grid;
    const int n = g.n();
    if (cell_mask && cell_mask->size() != static_cast<std::size_t>(n) * static_cast<std::size_t>(n)) {
        throw InvalidInput("discrete_energy: cell mask must have n*n entries");
    }
    const double h = g.h();
    const double area = h * h;
    const double inv_h2 = 1.0 / area;
    const double eps = params.eps;
    const double inv_eps2 = 1.0 / (eps * eps);

    // Per-node potential and frame, reused by the four adjacent cells.
    std::vector<double> fnode(g.nodes()), gnode(g.nodes()), qnorm(g.nodes());
    const Frame frame = frame_decompose(s, 0.5);
    for (std::size_t p = 0; p < g.nodes(); ++p) {
        fnode[p] = f_eps(s.q(p), s.m(p), params, consts);
        qnorm[p] = s.q(p).norm();
        gnode[p] = g_eps(qnorm[p], params, consts);
    }

    EnergyBreakdown e;
    for (int cj = 0; cj < n; ++cj) {
        for (int ci = 0; ci < n; ++ci) {
            if (cell_mask && !(*cell_mask)[static_cast<std::size_t>(cj * n + ci)]) continue;
            const Corners c = cell_corners(g, ci, cj);
            const double eq = area * (cell_sqgrad(s.q11, c, inv_h2) + cell_sqgrad(s.q12, c, inv_h2));
            const double em = area * 0.5 * eps * (cell_sqgrad(s.m1, c, inv_h2) + cell_sqgrad(s.m2, c, inv_h2));
            const double ep = area * inv_eps2 * 0.25 * (fnode[c.p00] + fnode[c.p10] + fnode[c.p01] + fnode[c.p11]);
            e.elastic_q += eq;
            e.elastic_m += em;
            e.potential += ep;

            if (!(frame.defined[c.p00] && frame.defined[c.p10] && frame.defined[c.p01] && frame.defined[c.p11])) {
                e.split_core += eq + em + ep;
                continue;
            }
            // Orient the corner frames consistently with the (ci, cj) corner.
            const std::size_t ps[4] = {c.p00, c.p10, c.p01, c.p11};
            double u1[4], u2[4], hh[4];
            for (int k = 0; k < 4; ++k) {
                const std::size_t p = ps[k];
                const double sign =
                    (frame.n1[p] * frame.n1[c.p00] + frame.n2[p] * frame.n2[c.p00]) < 0.0 ? -1.0 : 1.0;
                u1[k] = sign * frame.u1[p];
                u2[k] = sign * frame.u2[p];
                hh[k] = h_well(u1[k], u2[k], params);
            }
            const double gavg = 0.25 * (gnode[c.p00] + gnode[c.p10] + gnode[c.p01] + gnode[c.p11]);
            e.split_g += eq + area * gavg;
            const double gu = cell_sqgrad4(u1[0], u1[1], u1[2], u1[3], inv_h2) +
                              cell_sqgrad4(u2[0], u2[1], u2[2], u2[3], inv_h2);
            e.split_mm += area * (0.5 * eps * gu + 0.25 * (hh[0] + hh[1] + hh[2] + hh[3]) / eps);
        }
    }
    e.total = e.elastic_q + e.elastic_m + e.potential;
    e.split_remainder = e.total - e.split_g - e.split_mm;
    return e;
}

double total_energy(const FieldState& s, const ModelParams& params, const PotentialConstants& consts) {
    const Grid& g = s.grid;
    const int n = g.n();
    const double area = g.h() * g.h();
    const double inv_h2 = 1.0 / area;
    const double inv_eps2 = 1.0 / (params.eps * params.eps);
    std::vector<double> fnode(g.nodes());
    for (std::size_t p = 0; p < g.nodes(); ++p) fnode[p] = f_eps(s.q(p), s.m(p), params, consts);

    double total = 0.0;
    for (int cj = 0; cj < n; ++cj) {
        for (int ci = 0; ci < n; ++ci) {
            const Corners c = cell_corners(g, ci, cj);
            total += area * (cell_sqgrad(s.q11, c, inv_h2) + cell_sqgrad(s.q12, c, inv_h2));
            total += area * 0.5 * params.eps * (cell_sqgrad(s.m1, c, inv_h2) + cell_sqgrad(s.m2, c, inv_h2));
            total += area * inv_eps2 * 0.25 * (fnode[c.p00] + fnode[c.p10] + fnode[c.p01] + fnode[c.p11]);
        }
    }
    return total;
}

int WindingField::total() const { return std::accumulate(winding.begin(), winding.end(), 0); }

WindingField winding_field(const FieldState& s, double min_norm) {
    const Grid& g = s.grid;
    const int n = g.n();
    WindingField w;
    w.n = n;
    w.winding.assign(static_cast<std::size_t>(n) * n, 0);
    w.determinate.assign(static_cast<std::size_t>(n) * n, 0);
    for (int cj = 0; cj < n; ++cj) {
        for (int ci = 0; ci < n; ++ci) {
            const Corners c = cell_corners(g, ci, cj);
            const std::size_t cell = static_cast<std::size_t>(cj) * n + ci;
            const bool ok = node_q_norm(s, c.p00) > min_norm && node_q_norm(s, c.p10) > min_norm &&
                            node_q_norm(s, c.p01) > min_norm && node_q_norm(s, c.p11) > min_norm;
            if (!ok) {
                w.indeterminate.push_back(cell);
                continue;
            }
            w.determinate[cell] = 1;
            w.winding[cell] = loop_winding(s, {c.p00, c.p10, c.p11, c.p01});
        }
    }
    return w;
}

int boundary_winding_q(const FieldState& s) {
    std::vector<std::size_t> loop;
    for (const auto& [i, j] : s.grid.boundary_loop()) loop.push_back(s.grid.index(i, j));
    return loop_winding(s, loop);
}

int boundary_winding_m(const FieldState& s) {
    double total = 0.0;
    const auto loop = s.grid.boundary_loop();
    for (std::size_t a = 0; a < loop.size(); ++a) {
        const std::size_t p = s.grid.index(loop[a].first, loop[a].second);
        const auto& nb = loop[(a + 1) % loop.size()];
        const std::size_t q = s.grid.index(nb.first, nb.second);
        total += edge_increment(std::atan2(s.m2[q], s.m1[q]), std::atan2(s.m2[p], s.m1[p]), p, q);
    }
    return static_cast<int>(std::lround(total / (2.0 * kPi)));
}

double jacobian_integral(const FieldState& s) {
    // For a bilinear q on a cell, int det(grad q) = oint q1 dq2 along the
    // (linear) cell edges.
    const Grid& g = s.grid;
    const double r2 = std::numbers::sqrt2;
    auto q1 = [&](std::size_t p) { return r2 * s.q11[p]; };
    auto q2 = [&](std::size_t p) { return r2 * s.q12[p]; };
    double total = 0.0;
    for (int cj = 0; cj < g.n(); ++cj) {
        for (int ci = 0; ci < g.n(); ++ci) {
            const Corners c = cell_corners(g, ci, cj);
            const std::size_t loop[5] = {c.p00, c.p10, c.p11, c.p01, c.p00};
            for (int k = 0; k < 4; ++k) {
                total += 0.5 * (q1(loop[k]) + q1(loop[k + 1])) * (q2(loop[k + 1]) - q2(loop[k]));
            }
        }
    }
    return total;
}

int DefectSet::total_winding() const {
    int t = 0;
    for (const auto& d : defects) t += d.q_winding;
    return t;
}

DefectSet detect_defects(const FieldState& s, const ModelParams& params, const PotentialConstants& consts,
                         double threshold) {
    const Grid& g = s.grid;
    const int side = g.side();
    const double thr = threshold * (1.0 + consts.kappa_star * params.eps);

    std::vector<double> qn(g.nodes());
    for (std::size_t p = 0; p < g.nodes(); ++p) qn[p] = node_q_norm(s, p);

    std::vector<int> label(g.nodes(), -1);
    std::vector<std::vector<std::size_t>> clusters;
    for (int j = 0; j < side; ++j) {
        for (int i = 0; i < side; ++i) {
            const std::size_t start = g.index(i, j);
            if (qn[start] >= thr || label[start] >= 0) continue;
            const int id = static_cast<int>(clusters.size());
            clusters.emplace_back();
            std::queue<std::pair<int, int>> frontier;
            frontier.emplace(i, j);
            label[start] = id;
            while (!frontier.empty()) {
                const auto [a, b] = frontier.front();
                frontier.pop();
                clusters.back().push_back(g.index(a, b));
                const int nbr[4][2] = {{a + 1, b}, {a - 1, b}, {a, b + 1}, {a, b - 1}};
                for (const auto& nb : nbr) {
                    if (nb[0] < 0 || nb[1] < 0 || nb[0] >= side || nb[1] >= side) continue;
                    const std::size_t q = g.index(nb[0], nb[1]);
                    if (qn[q] < thr && label[q] < 0) {
                        label[q] = id;
                        frontier.emplace(nb[0], nb[1]);
                    }
                }
            }
        }
    }

    const int side_n = side;
    DefectSet out;
    std::vector<std::uint8_t> cell_claimed(static_cast<std::size_t>(g.n()) * g.n(), 0);
    for (std::size_t c = 0; c < clusters.size(); ++c) {
        const auto& nodes = clusters[c];
        Defect d;
        double wsum = 0.0;
        int i0 = side_n, j0 = side_n, i1 = -1, j1 = -1;
        for (std::size_t p : nodes) {
            const int i = static_cast<int>(p % side_n);
            const int j = static_cast<int>(p / side_n);
            const double w = thr - qn[p];
            d.x += w * g.x(i);
            d.y += w * g.y(j);
            wsum += w;
            i0 = std::min(i0, i); i1 = std::max(i1, i);
            j0 = std::min(j0, j); j1 = std::max(j1, j);
        }
        d.x /= wsum;
        d.y /= wsum;
        for (std::size_t p : nodes) {
            const int i = static_cast<int>(p % side_n);
            const int j = static_cast<int>(p / side_n);
            d.core_radius = std::max(d.core_radius, std::hypot(g.x(i) - d.x, g.y(j) - d.y));
        }
        d.core_nodes = nodes.size();

        // Grow a square loop until every loop node is outside all cores and
        // the loop encloses no other cluster.
        bool found = false;
        for (int r = 1; !found; ++r) {
            const int a0 = i0 - r, b0 = j0 - r, a1 = i1 + r, b1 = j1 + r;
            if (a0 < 0 || b0 < 0 || a1 > g.n() || b1 > g.n()) break;
            const auto loop = box_loop(g, a0, b0, a1, b1);
            bool clean = std::all_of(loop.begin(), loop.end(), [&](std::size_t p) { return qn[p] >= thr; });
            if (clean) {
                for (int j = b0 + 1; j < b1 && clean; ++j) {
                    for (int i = a0 + 1; i < a1; ++i) {
                        const int l = label[g.index(i, j)];
                        if (l >= 0 && l != static_cast<int>(c)) { clean = false; break; }
                    }
                }
            }
            if (!clean) {
                if (r > g.n()) break;
                continue;
            }
            d.q_winding = loop_winding(s, loop);
            for (int cj = b0; cj < b1; ++cj) {
                for (int ci = a0; ci < a1; ++ci) cell_claimed[static_cast<std::size_t>(cj) * g.n() + ci] = 1;
            }
            found = true;
        }
        if (!found) {
            // Fall back to the plaquettes touching the cluster.
            d.boundary_adjacent = true;
            const WindingField wf = winding_field(s);
            int wsum_cells = 0;
            for (int cj = std::max(0, j0 - 1); cj <= std::min(g.n() - 1, j1); ++cj) {
                for (int ci = std::max(0, i0 - 1); ci <= std::min(g.n() - 1, i1); ++ci) {
                    wsum_cells += wf.winding[static_cast<std::size_t>(cj) * g.n() + ci];
                    cell_claimed[static_cast<std::size_t>(cj) * g.n() + ci] = 1;
                }
            }
            d.q_winding = wsum_cells;
        }
        d.q_charge = 0.5 * d.q_winding;
        out.defects.push_back(d);
    }

    // Cores narrower than the lattice: a charged plaquette with no node
    // below the threshold.
    const WindingField wf = winding_field(s);
    for (int cj = 0; cj < g.n(); ++cj) {
        for (int ci = 0; ci < g.n(); ++ci) {
            const std::size_t cell = static_cast<std::size_t>(cj) * g.n() + ci;
            if (cell_claimed[cell] || wf.winding[cell] == 0) continue;
            Defect d;
            d.x = g.x(ci) + 0.5 * g.h();
            d.y = g.y(cj) + 0.5 * g.h();
            d.q_winding = wf.winding[cell];
            d.q_charge = 0.5 * d.q_winding;
            d.core_radius = 0.0;
            d.core_nodes = 0;
            out.defects.push_back(d);
        }
    }
    return out;
}

Frame frame_decompose(const FieldState& s, double min_q_norm) {
    const std::size_t count = s.grid.nodes();
    Frame f;
    f.n1.assign(count, 0.0);
    f.n2.assign(count, 0.0);
    f.u1.assign(count, 0.0);
    f.u2.assign(count, 0.0);
    f.defined.assign(count, 0);
    for (std::size_t p = 0; p < count; ++p) {
        const double qn = s.q(p).norm();
        if (qn == 0.0 || qn < min_q_norm) continue;
        const double psi = 0.5 * std::atan2(s.q12[p], s.q11[p]);
        const double n1 = std::cos(psi);
        const double n2 = std::sin(psi);
        f.n1[p] = n1;
        f.n2[p] = n2;
        f.u1[p] = s.m1[p] * n1 + s.m2[p] * n2;
        f.u2[p] = -s.m1[p] * n2 + s.m2[p] * n1;
        f.defined[p] = 1;
    }
    return f;
}

JumpSet extract_jump_set(const FieldState& s, const ModelParams& /*params*/, const PotentialConstants& /*consts*/,
                         const DefectSet* defects) {
    const Grid& g = s.grid;
    const int n = g.n();
    const double h = g.h();
    const Frame fr = frame_decompose(s, 0.0);

    auto in_core = [&](std::size_t p) {
        if (!defects) return false;
        const int i = static_cast<int>(p % static_cast<std::size_t>(g.side()));
        const int j = static_cast<int>(p / static_cast<std::size_t>(g.side()));
        for (const auto& d : defects->defects) {
            if (std::hypot(g.x(i) - d.x, g.y(j) - d.y) <= d.core_radius) return true;
        }
        return false;
    };

    JumpSet js;
    // Midpoints in half-spacing units: x-edges at (2i+1, 2j), y-edges at (2i, 2j+1).
    std::unordered_map<long long, std::size_t> by_mid;
    auto key = [](long long X, long long Y) { return X * 1000003LL + Y; };

    auto test_edge = [&](int ia, int ja, int ib, int jb) {
        const std::size_t a = g.index(ia, ja);
        const std::size_t b = g.index(ib, jb);
        if (!fr.defined[a] || !fr.defined[b]) return;
        if (in_core(a) && in_core(b)) return;
        const double orient = (fr.n1[a] * fr.n1[b] + fr.n2[a] * fr.n2[b]) < 0.0 ? -1.0 : 1.0;
        const double sa = fr.u1[a];
        const double sb = fr.u1[b];
        // A node where M vanishes exactly (a jump line through nodes) has no
        // sign of its own; the edge crosses when its neighbour is negative in
        // the vanishing node's frame. This puts each such crossing on one side.
        bool crossing = false;
        if (sa == 0.0 && sb == 0.0) crossing = false;
        else if (sa == 0.0) crossing = orient * sb < 0.0;
        else if (sb == 0.0) crossing = orient * sa < 0.0;
        else crossing = sa * orient * sb < 0.0;
        if (crossing) {
            JumpCrossing c;
            c.node_a = a;
            c.node_b = b;
            c.x = 0.5 * (g.x(ia) + g.x(ib));
            c.y = 0.5 * (g.y(ja) + g.y(jb));
            by_mid[key(ia + ib, ja + jb)] = js.crossings.size();
            js.crossings.push_back(c);
        }
    };
    for (int j = 0; j <= n; ++j) {
        for (int i = 0; i <= n; ++i) {
            if (i < n) test_edge(i, j, i + 1, j);
            if (j < n) test_edge(i, j, i, j + 1);
        }
    }

    // Union-find over crossings within a cell diagonal of each other.
    std::vector<std::size_t> parent(js.crossings.size());
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };
    for (std::size_t c = 0; c < js.crossings.size(); ++c) {
        const auto& cr = js.crossings[c];
        const long long X = std::llround(2.0 * cr.x / h);
        const long long Y = std::llround(2.0 * cr.y / h);
        for (long long dy = -2; dy <= 2; ++dy) {
            for (long long dx = -2; dx <= 2; ++dx) {
                if (dx * dx + dy * dy > 8 || (dx == 0 && dy == 0)) continue;
                const auto it = by_mid.find(key(X + dx, Y + dy));
                if (it == by_mid.end()) continue;
                const std::size_t ra = find(c), rb = find(it->second);
                if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
            }
        }
    }
    std::unordered_map<std::size_t, std::size_t> comp_of_root;
    for (std::size_t c = 0; c < js.crossings.size(); ++c) {
        const std::size_t r = find(c);
        auto [it, inserted] = comp_of_root.try_emplace(r, js.components.size());
        if (inserted) js.components.emplace_back();
        js.components[it->second].crossings.push_back(c);
    }
    for (auto& comp : js.components) {
        comp.length_raw = static_cast<double>(comp.crossings.size()) * h;
        comp.length_corrected = comp.length_raw * kPi / 4.0;
        double best = -1.0;
        for (std::size_t a = 0; a < comp.crossings.size(); ++a) {
            for (std::size_t b = a; b < comp.crossings.size(); ++b) {
                const auto& A = js.crossings[comp.crossings[a]];
                const auto& B = js.crossings[comp.crossings[b]];
                const double d = std::hypot(A.x - B.x, A.y - B.y);
                if (d > best) {
                    best = d;
                    comp.endpoints = {A.x, A.y, B.x, B.y};
                }
            }
        }
    }
    return js;
}

std::array<double, 2> euler_lagrange_residual(const FieldState& s, const ModelParams& params) {
    const Grid& g = s.grid;
    const int n = g.n();
    const double inv_h2 = 1.0 / (g.h() * g.h());
    const double inv_eps2 = 1.0 / (params.eps * params.eps);
    std::array<double, 2> worst{0.0, 0.0};
    auto lap = [&](const std::vector<double>& u, int i, int j) {
        return (u[g.index(i + 1, j)] + u[g.index(i - 1, j)] + u[g.index(i, j + 1)] + u[g.index(i, j - 1)] -
                4.0 * u[g.index(i, j)]) * inv_h2;
    };
    for (int j = 1; j < n; ++j) {
        for (int i = 1; i < n; ++i) {
            const std::size_t p = g.index(i, j);
            const PotentialGradient gr = grad_f_eps(s.q(p), s.m(p), params);
            const double r11 = (2.0 * lap(s.q11, i, j) - inv_eps2 * gr.dq.q11) / (2.0 * params.eta1);
            const double r12 = (2.0 * lap(s.q12, i, j) - inv_eps2 * gr.dq.q12) / (2.0 * params.eta1);
            const double r1 = (params.eps * lap(s.m1, i, j) - inv_eps2 * gr.dm.m1) / params.eta2;
            const double r2 = (params.eps * lap(s.m2, i, j) - inv_eps2 * gr.dm.m2) / params.eta2;
            worst[0] = std::max({worst[0], std::abs(r11), std::abs(r12)});
            worst[1] = std::max({worst[1], std::abs(r1), std::abs(r2)});
        }
    }
    return worst;
}

} // namespace ferrosim
