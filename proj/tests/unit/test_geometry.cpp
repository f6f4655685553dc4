#include "ferrosim/diagnostics.hpp"
#include "ferrosim/error.hpp"
#include "ferrosim/geometry.hpp"

#include "reference_runs.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

using namespace ferrosim;

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;

// Oracle: every permutation of the indices, consecutive entries paired.
double permutation_oracle(const std::vector<Point2>& pts) {
    std::vector<int> perm(pts.size());
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double len = 0.0;
        for (std::size_t i = 0; i < perm.size(); i += 2) len += distance(pts[perm[i]], pts[perm[i + 1]]);
        best = std::min(best, len);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

std::vector<Point2> random_points(std::mt19937_64& rng, std::size_t count) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Point2> pts(count);
    for (auto& p : pts) p = {u(rng), u(rng)};
    return pts;
}

// q = (cos theta, sin theta) of an angle field as a FieldState.
FieldState q_from_angle(const AngleField& f) {
    FieldState s(f.grid);
    for (std::size_t p = 0; p < f.grid.nodes(); ++p)
        s.set(p, {std::cos(f.theta[p]) / kSqrt2, std::sin(f.theta[p]) / kSqrt2}, {});
    return s;
}

// The eight symmetries of the square.
Point2 d4(int which, Point2 p) {
    double x = p.x - 0.5, y = p.y - 0.5;
    for (int r = 0; r < which % 4; ++r) {
        const double t = x;
        x = -y;
        y = t;
    }
    if (which >= 4) x = -x;
    return {x + 0.5, y + 0.5};
}

double set_distance(const std::vector<Point2>& a, const std::vector<Point2>& b) {
    // Max over a of the distance to the nearest point of b, both ways.
    double d = 0.0;
    for (const auto* pair : {&a, &b}) {
        const auto& from = *pair;
        const auto& to = pair == &a ? b : a;
        for (const Point2& p : from) {
            double best = 1e9;
            for (const Point2& q : to) best = std::min(best, distance(p, q));
            d = std::max(d, best);
        }
    }
    return d;
}

std::vector<double> ladder(const Grid& g) { return {4 * g.h(), 8 * g.h(), 16 * g.h()}; }

} // namespace

TEST(MinimalConnection, Examples) {
    const std::vector<Point2> two{{0, 0}, {1, 1}};
    EXPECT_NEAR(minimal_connection(two).total_length, kSqrt2, 1e-15);

    const std::vector<Point2> square{{0, 0}, {1, 0}, {0, 1}, {1, 1}};
    const Connection c = minimal_connection(square);
    EXPECT_DOUBLE_EQ(c.total_length, 2.0);
    ASSERT_EQ(c.pairs.size(), 2u);
    EXPECT_EQ(c.pairs[0], (std::array<std::size_t, 2>{0, 1}));
    EXPECT_EQ(c.pairs[1], (std::array<std::size_t, 2>{2, 3}));

    const std::vector<Point2> line{{0, 0}, {1, 0}, {2, 0}, {3, 0}};
    const Connection l = minimal_connection(line);
    EXPECT_DOUBLE_EQ(l.total_length, 2.0);
    EXPECT_EQ(l.pairs[0], (std::array<std::size_t, 2>{0, 1}));
    EXPECT_EQ(l.pairs[1], (std::array<std::size_t, 2>{2, 3}));
}

TEST(MinimalConnection, AgreesWithPermutationOracle) {
    std::mt19937_64 rng(2024);
    for (int inst = 0; inst < 200; ++inst) {
        const std::size_t count = 2 * (1 + inst % 5);
        const auto pts = random_points(rng, count);
        const Connection c = minimal_connection(pts);
        EXPECT_NEAR(c.total_length, permutation_oracle(pts), 1e-12) << "instance " << inst;
        std::vector<int> seen(count, 0);
        double len = 0.0;
        for (const auto& pr : c.pairs) {
            EXPECT_LT(pr[0], pr[1]);
            ++seen[pr[0]];
            ++seen[pr[1]];
            len += distance(pts[pr[0]], pts[pr[1]]);
        }
        for (int s : seen) EXPECT_EQ(s, 1);
        EXPECT_NEAR(len, c.total_length, 1e-12);
        EXPECT_TRUE(segments_disjoint(c)) << "instance " << inst;
    }
}

TEST(MinimalConnection, Errors) {
    EXPECT_THROW(minimal_connection(std::vector<Point2>{}), InvalidInput);
    EXPECT_THROW(minimal_connection(std::vector<Point2>{{0, 0}, {1, 0}, {2, 0}}), InvalidInput);
    EXPECT_THROW(minimal_connection(std::vector<Point2>{{0, 0}, {0, 0}}), InvalidInput);
    std::mt19937_64 rng(1);
    EXPECT_THROW(minimal_connection(random_points(rng, 18)), CapacityError);
}

TEST(MinimalConnection, CapacityBoundIsExact) {
    // 16 points on two rows: the optimum pairs vertical neighbours.
    std::vector<Point2> pts;
    for (int i = 0; i < 8; ++i) {
        pts.push_back({3.0 * i, 0.0});
        pts.push_back({3.0 * i, 1.0});
    }
    EXPECT_DOUBLE_EQ(minimal_connection(pts).total_length, 8.0);
}

TEST(Segments, OrientationPredicates) {
    EXPECT_EQ(orientation({0, 0}, {1, 0}, {0, 1}), 1);
    EXPECT_EQ(orientation({0, 0}, {1, 0}, {0, -1}), -1);
    EXPECT_EQ(orientation({0, 0}, {1, 1}, {2, 2}), 0);
    EXPECT_TRUE(segments_intersect({0, 0}, {1, 1}, {0, 1}, {1, 0}));
    EXPECT_TRUE(segments_intersect({0, 0}, {1, 0}, {1, 0}, {2, 1}));
    EXPECT_FALSE(segments_intersect({0, 0}, {1, 0}, {0, 1}, {1, 1}));
    EXPECT_FALSE(segments_intersect({0, 0}, {1, 0}, {2, 0}, {3, 0}));
}

TEST(CanonicalAngle, WindingAndHarmonicity) {
    const Grid g(100);
    const std::vector<Point2> pts{{0.305, 0.415}, {0.705, 0.585}};
    const AngleField f = canonical_angle(pts, 1, g);
    const FieldState s = q_from_angle(f);
    const WindingField w = winding_field(s);
    EXPECT_EQ(w.total(), 2);
    for (const Point2& a : pts) {
        const int ci = static_cast<int>(a.x * 100), cj = static_cast<int>(a.y * 100);
        EXPECT_EQ(w.winding[static_cast<std::size_t>(cj * 100 + ci)], 1);
    }
    EXPECT_LE(harmonic_residual(f, 4 * g.h()), 1e-8);
    EXPECT_LE(f.divergence_residual, 1e-8);
    // q has unit norm and matches the boundary datum.
    for (const auto& [i, j] : g.boundary_loop()) {
        const auto [q, m] = degree_k_datum(g.x(i), g.y(j), 1, ModelParams{});
        const std::size_t p = g.index(i, j);
        EXPECT_NEAR(s.q11[p], q.q11, 1e-12);
        EXPECT_NEAR(s.q12[p], q.q12, 1e-12);
    }
}

TEST(CanonicalAngle, DegreeTwo) {
    const Grid g(100);
    const std::vector<Point2> pts{{0.3, 0.3}, {0.7, 0.3}, {0.3, 0.7}, {0.71, 0.69}};
    const AngleField f = canonical_angle(pts, 2, g);
    EXPECT_EQ(winding_field(q_from_angle(f)).total(), 4);
    EXPECT_LE(harmonic_residual(f, 4 * g.h()), 1e-8);
}

TEST(CanonicalAngle, Errors) {
    const Grid g(40);
    EXPECT_THROW(canonical_angle(std::vector<Point2>{{0.3, 0.3}}, 1, g), InvalidInput);
    EXPECT_THROW(canonical_angle(std::vector<Point2>{{0.3, 0.3}, {1.0, 0.5}}, 1, g), InvalidInput);
    EXPECT_THROW(canonical_angle(std::vector<Point2>{{0.3, 0.3}, {0.6, 0.5}}, 2, g), InvalidInput);
}

TEST(RenormalizedEnergy, LinearFitResidualAtN200) {
    const Grid g(200);
    for (const auto& pts : {std::vector<Point2>{{0.5, 0.3}, {0.5, 0.7}},
                            std::vector<Point2>{{0.31, 0.42}, {0.67, 0.61}}}) {
        const RenormalizedEnergy w = renormalized_energy(pts, 1, g, ladder(g));
        ASSERT_EQ(w.table.size(), 3u);
        EXPECT_LT(w.max_fit_residual, 0.02 * std::abs(w.w));
        for (const SigmaRow& r : w.table)
            EXPECT_NEAR(r.w_sigma, r.energy - 2.0 * std::numbers::pi * std::abs(std::log(r.sigma)), 1e-12);
    }
}

TEST(RenormalizedEnergy, RepulsionAlongSeparationSweep) {
    const Grid g(200);
    double prev = -std::numeric_limits<double>::infinity();
    for (double sep = 0.2; sep >= 0.1 - 1e-12; sep -= 0.02) {
        const std::vector<Point2> pts{{0.5 - sep / 2, 0.5}, {0.5 + sep / 2, 0.5}};
        const std::vector<double> sig{4 * g.h(), 6 * g.h(), 8 * g.h()};
        const double w = renormalized_energy(pts, 1, g, sig).w;
        EXPECT_GT(w, prev) << "separation " << sep;
        prev = w;
    }
}

TEST(RenormalizedEnergy, DiagonalReflectionAndRelabelling) {
    const Grid g(100);
    const std::vector<Point2> a{{0.32, 0.45}, {0.68, 0.62}};
    const std::vector<Point2> refl{{0.45, 0.32}, {0.62, 0.68}};
    const std::vector<Point2> swapped{a[1], a[0]};
    const double wa = renormalized_energy(a, 1, g, ladder(g)).w;
    EXPECT_NEAR(renormalized_energy(refl, 1, g, ladder(g)).w, wa, 1e-6);
    EXPECT_NEAR(renormalized_energy(swapped, 1, g, ladder(g)).w, wa, 1e-9);
}

TEST(RenormalizedEnergy, RejectsBadLadders) {
    const Grid g(100);
    const std::vector<Point2> pts{{0.5, 0.3}, {0.5, 0.7}};
    EXPECT_THROW(renormalized_energy(pts, 1, g, std::vector<double>{0.04}), InvalidInput);
    EXPECT_THROW(renormalized_energy(pts, 1, g, std::vector<double>{0.01, 0.04}), InvalidInput);
    EXPECT_THROW(renormalized_energy(pts, 1, g, std::vector<double>{0.04, 0.25}), InvalidInput);
    EXPECT_THROW(renormalized_energy(pts, 1, g, std::vector<double>{0.04, 0.31}), InvalidInput);
}

TEST(WBeta, DecoupledLimitAndMonotoneInBeta) {
    const Grid g(60);
    const std::vector<Point2> pts{{0.4, 0.35}, {0.6, 0.66}};
    const double w = renormalized_energy(pts, 1, g, sigma_ladder(pts, g)).w;
    const double len = minimal_connection(pts).total_length;
    const ModelParams p0{0.0, 0.05, 1.0, 0.05};
    EXPECT_NEAR(w_beta(pts, 1, p0, potential_constants(p0), g), w + 2.0 * kSqrt2 / 3.0 * len, 1e-12);
    double prev = -1e300;
    for (double beta : {0.0, 0.5, 1.0, 2.0, 5.0}) {
        const ModelParams p{beta, 0.05, 1.0, 0.05};
        const double v = w_beta(pts, 1, p, potential_constants(p), g);
        EXPECT_GT(v, prev);
        prev = v;
    }
}

TEST(WBeta, CandidateGridMinimiserCloserAtLargerBeta) {
    // Configurations symmetric about the centre: (0.5 +- a, 0.5 +- b).
    const Grid g(50);
    auto best_separation = [&](double beta) {
        const ModelParams p{beta, 0.05, 1.0, 0.05};
        const auto c = potential_constants(p);
        double best = 1e300, sep = 0.0;
        for (int ia = 0; ia < 9; ++ia)
            for (int ib = 0; ib < 9; ++ib) {
                const double a = 0.04 * ia, b = -0.32 + 0.08 * ib;
                const std::vector<Point2> pts{{0.5 + a, 0.5 + b}, {0.5 - a, 0.5 - b}};
                if (std::hypot(a, b) < 0.05) continue;
                if (sigma_ladder(pts, g).empty()) continue;
                const double v = w_beta(pts, 1, p, c, g);
                if (v < best) best = v, sep = 2.0 * std::hypot(a, b);
            }
        return sep;
    };
    const double s1 = best_separation(1.0), s5 = best_separation(5.0);
    RecordProperty("separation_beta1", std::to_string(s1));
    RecordProperty("separation_beta5", std::to_string(s5));
    EXPECT_LT(s5, s1);
}

TEST(MinimizeWBeta, SymmetricDescentAndFlowComparison) {
    const Grid g(50);
    const ModelParams p = ModelParams::with_default_friction(1.0, 0.02);
    const auto c = potential_constants(p);
    const std::vector<std::vector<Point2>> starts{{{0.3, 0.45}, {0.72, 0.5}},
                                                  {{0.5, 0.25}, {0.45, 0.7}},
                                                  {{0.35, 0.35}, {0.6, 0.7}}};
    const WBetaResult res = minimize_w_beta(1, p, g, starts);
    for (std::size_t s = 0; s < starts.size(); ++s) {
        EXPECT_LE(res.best.value, w_beta(starts[s], 1, p, c, g));
        EXPECT_LE(res.per_start[s].value, w_beta(starts[s], 1, p, c, g) + 1e-12);
    }
    EXPECT_NEAR(res.best.value, w_beta(res.best.points, 1, p, c, g), 1e-9);
    ASSERT_FALSE(res.distinct.empty());
    EXPECT_DOUBLE_EQ(res.distinct.front().value, res.best.value);

    // The half turn about the centre maps the optimum onto itself.
    const auto& b = res.best.points;
    const std::vector<Point2> turned{d4(2, b[0]), d4(2, b[1])};
    EXPECT_LE(set_distance(b, turned), 2.0 * g.h());

    // Soft comparison with the flow: the square's symmetries map minimisers
    // to minimisers, so the closest image is compared.
    const auto& run = ferrosim::testing::reference_run(1.0, 0.02, 1);
    ASSERT_EQ(run.defects.defects.size(), 2u);
    const std::vector<Point2> flow{{run.defects.defects[0].x, run.defects.defects[0].y},
                                   {run.defects.defects[1].x, run.defects.defects[1].y}};
    double best = 1e9;
    for (int s = 0; s < 8; ++s) best = std::min(best, set_distance(flow, {d4(s, b[0]), d4(s, b[1])}));
    RecordProperty("flow_to_optimum", std::to_string(best));
    EXPECT_LE(best, 4.0 * g.h() + 4.0 * p.eps);
}

TEST(MinimizeWBeta, DeterministicAcrossThreadCounts) {
    const Grid g(40);
    const ModelParams p = ModelParams::with_default_friction(1.0, 0.05);
    const std::vector<std::vector<Point2>> starts{{{0.3, 0.45}, {0.72, 0.5}}, {{0.5, 0.25}, {0.45, 0.7}}};
    WBetaOptions one, four;
    one.threads = 1;
    four.threads = 4;
    one.max_evaluations = four.max_evaluations = 150;
    const WBetaResult a = minimize_w_beta(1, p, g, starts, one);
    const WBetaResult b = minimize_w_beta(1, p, g, starts, four);
    EXPECT_EQ(a.best.value, b.best.value);
    EXPECT_EQ(a.best.points, b.best.points);
    EXPECT_THROW(minimize_w_beta(1, p, g, {{{0.3, 0.3}}}), InvalidInput);
}

TEST(SbvLifting, ReconstructsQAndJumpsOnConnection) {
    const Grid g(80);
    const ModelParams p = ModelParams::with_default_friction(1.0, 0.05);
    const double ls2 = kSqrt2 * p.beta + 1.0;
    const std::vector<Point2> pts{{0.3137, 0.4211}, {0.6913, 0.5789}};
    const AngleField f = canonical_angle(pts, 1, g);
    const Connection con = minimal_connection(pts);
    const Lifting l = sbv_lifting(f, con, p);
    EXPECT_EQ(l.conflicts, 0u);
    for (std::size_t n = 0; n < g.nodes(); ++n) {
        const double m1 = l.m1[n], m2 = l.m2[n];
        EXPECT_NEAR(m1 * m1 + m2 * m2, ls2, 1e-12);
        EXPECT_NEAR(kSqrt2 * (m1 * m1 / ls2 - 0.5), std::cos(f.theta[n]) / kSqrt2, 1e-10);
        EXPECT_NEAR(kSqrt2 * m1 * m2 / ls2, std::sin(f.theta[n]) / kSqrt2, 1e-10);
    }
    for (const auto& [i, j] : g.boundary_loop()) {
        const auto [q, m] = degree_k_datum(g.x(i), g.y(j), 1, p);
        EXPECT_NEAR(l.m1[g.index(i, j)], m.m1, 1e-10);
        EXPECT_NEAR(l.m2[g.index(i, j)], m.m2, 1e-10);
    }
    // Away from the singular points the signed director flips exactly on
    // the edges that cross the connection.
    int crossing_edges = 0;
    for (int j = 0; j <= g.n(); ++j)
        for (int i = 0; i <= g.n(); ++i)
            for (const auto& nb : {std::pair{i + 1, j}, std::pair{i, j + 1}}) {
                if (nb.first > g.n() || nb.second > g.n()) continue;
                const Point2 a{g.x(i), g.y(j)}, b{g.x(nb.first), g.y(nb.second)};
                if (std::min({distance(a, pts[0]), distance(a, pts[1]), distance(b, pts[0]), distance(b, pts[1])}) <
                    2 * g.h())
                    continue;
                const std::size_t u = g.index(i, j), v = g.index(nb.first, nb.second);
                const bool flip = l.n1[u] * l.n1[v] + l.n2[u] * l.n2[v] < 0.0;
                const bool cross = edge_crosses_connection(a, b, con);
                EXPECT_EQ(flip, cross) << "edge (" << i << "," << j << ")-(" << nb.first << "," << nb.second << ")";
                crossing_edges += cross;
            }
    EXPECT_GT(crossing_edges, 20);
}

TEST(CoreEnergy, MonotoneAndPositive) {
    const std::vector<double> eps{0.2, 0.1, 0.05, 0.02};
    const CoreEnergyResult r = core_energy(eps, 4000);
    ASSERT_EQ(r.table.size(), 4u);
    // Non-decreasing as a function of eps: it decreases as eps shrinks.
    for (std::size_t i = 1; i < r.table.size(); ++i)
        EXPECT_LE(r.table[i].gamma_minus_log, r.table[i - 1].gamma_minus_log + 1e-9);
    EXPECT_GT(r.gamma_star, 0.0);
    for (const auto& row : r.table)
        EXPECT_NEAR(row.gamma_minus_log, row.gamma - std::numbers::pi * std::abs(std::log(row.eps)), 1e-12);
}

TEST(CoreEnergy, GridSelfConvergence) {
    const std::vector<double> eps{0.2, 0.1, 0.05, 0.02};
    const double a = core_energy(eps, 2000).gamma_star;
    const double b = core_energy(eps, 4000).gamma_star;
    EXPECT_NEAR(a / b, 1.0, 0.01);
}

TEST(CoreEnergy, Errors) {
    EXPECT_THROW(core_energy(std::vector<double>{0.1, 0.2}, 1000), InvalidInput);
    EXPECT_THROW(core_energy(std::vector<double>{0.001}, 1000), InvalidInput);
    EXPECT_THROW(core_energy(std::vector<double>{}, 1000), InvalidInput);
}
