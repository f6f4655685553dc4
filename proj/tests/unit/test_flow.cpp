#include "ferrosim/diagnostics.hpp"
#include "ferrosim/error.hpp"
#include "ferrosim/flow.hpp"

#include "reference_runs.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace ferrosim;
using ferrosim::testing::energy_central_difference;
using ferrosim::testing::reference_run;

namespace {

FieldState uniform_minimiser(const Grid& g, const PotentialConstants& c, double dir) {
    FieldState s(g);
    const auto mn = potential_minimiser(c, dir);
    for (std::size_t p = 0; p < g.nodes(); ++p) s.set(p, mn.q, mn.m);
    return s;
}

FieldState random_state(const Grid& g, unsigned seed) {
    FieldState s(g);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (std::size_t p = 0; p < g.nodes(); ++p) s.set(p, {0.7 * u(rng), 0.7 * u(rng)}, {1.5 * u(rng), 1.5 * u(rng)});
    return s;
}

// Minimiser plus a smooth bump that vanishes on the boundary.
FieldState smooth_state(const Grid& g, const PotentialConstants& c) {
    FieldState s = uniform_minimiser(g, c, 0.3);
    for (int j = 0; j <= g.n(); ++j)
        for (int i = 0; i <= g.n(); ++i) {
            const double b = std::sin(std::numbers::pi * g.x(i)) * std::sin(std::numbers::pi * g.y(j));
            const std::size_t p = g.index(i, j);
            s.q11[p] += 0.3 * b;
            s.q12[p] -= 0.2 * b * b;
            s.m1[p] += 0.4 * b;
            s.m2[p] += 0.25 * b * std::cos(std::numbers::pi * g.x(i));
        }
    return s;
}

double max_diff(const FieldState& a, const FieldState& b) {
    double m = 0.0;
    for (std::size_t p = 0; p < a.grid.nodes(); ++p)
        m = std::max({m, std::abs(a.q11[p] - b.q11[p]), std::abs(a.q12[p] - b.q12[p]), std::abs(a.m1[p] - b.m1[p]),
                      std::abs(a.m2[p] - b.m2[p])});
    return m;
}

} // namespace

TEST(FlowRhs, VanishesAtUniformMinimiser) {
    const ModelParams p = ModelParams::with_default_friction(1.0, 0.05);
    const auto c = potential_constants(p);
    const FieldState s = uniform_minimiser(Grid(16), c, 0.8);
    const FieldRates r = rhs(s, p);
    for (std::size_t i = 0; i < s.grid.nodes(); ++i) {
        EXPECT_NEAR(r.q11[i], 0.0, 1e-9);
        EXPECT_NEAR(r.q12[i], 0.0, 1e-9);
        EXPECT_NEAR(r.m1[i], 0.0, 1e-9);
        EXPECT_NEAR(r.m2[i], 0.0, 1e-9);
    }
}

TEST(FlowRhs, IsNegativeScaledEnergyGradient) {
    // The discrete energy is sum over cells times h^2, so
    // rhs = -(1 / (w h^2)) dE/du with w = 2 eta1 for Q and eta2 for M.
    const ModelParams p{1.0, 0.05, 1.3, 0.07};
    const auto c = potential_constants(p);
    const Grid g(12);
    FieldState s = random_state(g, 21);
    const FieldRates r = rhs(s, p);
    const double h2 = g.h() * g.h(), d = 1e-6;
    const std::vector<double>* rates[4] = {&r.q11, &r.q12, &r.m1, &r.m2};
    const double w[4] = {2.0 * p.eta1, 2.0 * p.eta1, p.eta2, p.eta2};
    double worst = 0.0;
    for (int j = 1; j < g.n(); ++j)
        for (int i = 1; i < g.n(); ++i)
            for (int cpt = 0; cpt < 4; ++cpt) {
                const std::size_t node = g.index(i, j);
                const double slope = energy_central_difference(s, p, c, i, j, cpt, d);
                const double oracle = -slope / (w[cpt] * h2);
                const double got = (*rates[cpt])[node];
                const double rel = std::abs(got - oracle) / std::abs(oracle);
                worst = std::max(worst, rel);
                EXPECT_LT(rel, 1e-5) << "node (" << i << "," << j << ") component " << cpt;
            }
    RecordProperty("worst_relative_error", std::to_string(worst));
    const FieldRates rb = rhs(s, p);
    for (int i = 0; i <= g.n(); ++i) EXPECT_EQ(rb.m1[g.index(i, 0)], 0.0);
}

TEST(FlowRhs, FrictionScaling) {
    const ModelParams p{1.0, 0.05, 1.0, 0.05};
    ModelParams p2 = p;
    p2.eta1 = 2.0;
    const FieldState s = random_state(Grid(12), 4);
    const FieldRates a = rhs(s, p), b = rhs(s, p2);
    for (std::size_t i = 0; i < s.grid.nodes(); ++i) {
        EXPECT_EQ(b.q11[i], 0.5 * a.q11[i]);
        EXPECT_EQ(b.q12[i], 0.5 * a.q12[i]);
        EXPECT_EQ(b.m1[i], a.m1[i]);
        EXPECT_EQ(b.m2[i], a.m2[i]);
    }
}

TEST(FlowStep, FixedPointAtUniformMinimiser) {
    FlowConfig cfg;
    cfg.params = ModelParams::with_default_friction(1.0, 0.05);
    cfg.grid_n = 16;
    const auto c = potential_constants(cfg.params);
    FieldState s = uniform_minimiser(Grid(16), c, 0.2);
    const FieldState before = s;
    const StepReport rep = step(s, cfg, c);
    EXPECT_LT(max_diff(s, before), 1e-9);
    EXPECT_LE(rep.picard_iters, 2);
    EXPECT_DOUBLE_EQ(s.time, cfg.tau);
}

TEST(FlowStep, EnergyDecreaseMatchesDissipationIdentity) {
    // The segment-averaged scheme satisfies
    // E1 - E0 = -sum w |u1 - u0|^2 h^2 / tau up to solver tolerance.
    FlowConfig cfg;
    cfg.params = ModelParams::with_default_friction(1.0, 0.1);
    cfg.grid_n = 20;
    cfg.tau = 2e-3;
    cfg.picard_tol = 1e-13;
    cfg.linsolve_tol = 1e-13;
    const auto c = potential_constants(cfg.params);
    const Grid g(20);
    FieldState s = smooth_state(g, c);
    const FieldState before = s;
    const StepReport rep = step(s, cfg, c);
    double dissip = 0.0;
    for (std::size_t p = 0; p < g.nodes(); ++p) {
        const double dq = (s.q11[p] - before.q11[p]) * (s.q11[p] - before.q11[p]) +
                          (s.q12[p] - before.q12[p]) * (s.q12[p] - before.q12[p]);
        const double dm = (s.m1[p] - before.m1[p]) * (s.m1[p] - before.m1[p]) +
                          (s.m2[p] - before.m2[p]) * (s.m2[p] - before.m2[p]);
        dissip += (2.0 * cfg.params.eta1 * dq + cfg.params.eta2 * dm) * g.h() * g.h() / cfg.tau;
    }
    EXPECT_LT(rep.energy_delta, 0.0);
    EXPECT_NEAR(rep.energy_delta, -dissip, 1e-8 * dissip);
}

TEST(FlowStep, BoundaryNodesUntouched) {
    FlowConfig cfg;
    cfg.params = ModelParams::with_default_friction(1.0, 0.05);
    cfg.grid_n = 20;
    cfg.t_end = 0.01;
    const Grid g(20);
    const FieldState s0 = initial_condition(g, 1, cfg.params);
    cfg.snapshot_times = {0.005, 0.01};
    const RunResult res = run(cfg, s0);
    const auto bd = boundary_data(g, 1, cfg.params);
    for (const Snapshot& snap : res.snapshots)
        for (std::size_t i = 0; i < bd.nodes.size(); ++i) {
            EXPECT_EQ(snap.state.q11[bd.nodes[i]], bd.q11[i]);
            EXPECT_EQ(snap.state.q12[bd.nodes[i]], bd.q12[i]);
            EXPECT_EQ(snap.state.m1[bd.nodes[i]], bd.m1[i]);
            EXPECT_EQ(snap.state.m2[bd.nodes[i]], bd.m2[i]);
        }
}

TEST(FlowStep, SecondOrderSelfConvergence) {
    FlowConfig cfg;
    cfg.params = ModelParams::with_default_friction(1.0, 0.2);
    cfg.grid_n = 16;
    cfg.picard_tol = 1e-13;
    cfg.linsolve_tol = 1e-13;
    const auto c = potential_constants(cfg.params);
    const Grid g(16);
    const FieldState init = smooth_state(g, c);
    const double t_end = 0.08, tau = 0.01;
    auto advance = [&](double dt) {
        FlowConfig k = cfg;
        k.tau = dt;
        FieldState s = init;
        const int steps = static_cast<int>(std::lround(t_end / dt));
        for (int i = 0; i < steps; ++i) step(s, k, c);
        return s;
    };
    const FieldState ref = advance(tau / 8.0);
    const double e1 = max_diff(advance(tau), ref);
    const double e2 = max_diff(advance(tau / 2.0), ref);
    const double ratio = e1 / e2;
    RecordProperty("error_ratio", std::to_string(ratio));
    EXPECT_GT(ratio, 3.2) << "e1=" << e1 << " e2=" << e2;
    EXPECT_LT(ratio, 4.8) << "e1=" << e1 << " e2=" << e2;
}

TEST(FlowStep, SolverFailureAfterHalvings) {
    FlowConfig cfg;
    cfg.params = ModelParams::with_default_friction(1.0, 0.05);
    cfg.grid_n = 20;
    cfg.tau = 0.5;
    cfg.picard_max = 1;
    cfg.max_halvings = 0;
    const auto c = potential_constants(cfg.params);
    FieldState s = initial_condition(Grid(20), 1, cfg.params);
    const FieldState before = s;
    EXPECT_THROW(step(s, cfg, c), SolverError);
    EXPECT_EQ(max_diff(s, before), 0.0);
}

TEST(FlowConfig, Validation) {
    FlowConfig cfg;
    EXPECT_NO_THROW(cfg.validate());
    cfg.tau = 0.0;
    EXPECT_THROW(cfg.validate(), InvalidInput);
    cfg = {};
    cfg.snapshot_times = {0.5, 0.1};
    EXPECT_THROW(cfg.validate(), InvalidInput);
    cfg = {};
    cfg.grid_n = 4;
    EXPECT_THROW(cfg.validate(), InvalidInput);
    cfg = {};
    const FieldState wrong(Grid(10));
    EXPECT_THROW(run(cfg, wrong), InvalidInput);
}

TEST(FlowRun, SnapshotsAndEarlySteadyStop) {
    FlowConfig cfg;
    cfg.params = ModelParams::with_default_friction(1.0, 0.05);
    cfg.grid_n = 16;
    cfg.t_end = 1.0;
    cfg.snapshot_times = {0.0, 0.5, 1.0};
    const auto c = potential_constants(cfg.params);
    const RunResult res = run(cfg, uniform_minimiser(Grid(16), c, 0.0));
    EXPECT_TRUE(res.steady);
    EXPECT_EQ(res.reports.size(), 1u);
    ASSERT_EQ(res.snapshots.size(), 3u);
    EXPECT_EQ(res.snapshots[2].requested_time, 1.0);
}

// The square-domain runs (each about ten seconds).

TEST(ReferenceRun, FirstHundredStepsDissipate) {
    const auto& run = reference_run(1.0, 0.05, 1);
    ASSERT_GE(run.result.reports.size(), 100u);
    for (std::size_t i = 0; i < 100; ++i) {
        const StepReport& r = run.result.reports[i];
        EXPECT_LE(r.energy_delta, 1e-10 * std::abs(r.energy_total)) << "step " << i;
    }
}

TEST(ReferenceRun, BetaOneEpsFiveHundredthsHasTwoDefects) {
    const auto& run = reference_run(1.0, 0.05, 1);
    EXPECT_EQ(run.defects.defects.size(), 2u);
    ASSERT_EQ(run.result.snapshots.size(), 3u);
    EXPECT_NEAR(run.result.snapshots[0].state.time, 0.02, 1e-12);
    EXPECT_NEAR(run.result.snapshots[1].state.time, 0.05, 1e-12);
    // The state at t = 1 is close to steady and solves the discrete
    // Euler-Lagrange system to within ten times the last update rate plus
    // the steady tolerance (the residual is in rate units).
    const auto el = euler_lagrange_residual(run.result.final_state, run.config.params);
    EXPECT_LT(run.last_update_rate, 1e-6);
    EXPECT_LT(std::max(el[0], el[1]), 10.0 * run.last_update_rate + 10.0 * run.config.steady_tol);
}

TEST(ReferenceRun, SmallerEpsGivesNarrowerCores) {
    const auto& a = reference_run(1.0, 0.05, 1);
    const auto& b = reference_run(1.0, 0.02, 1);
    ASSERT_EQ(b.defects.defects.size(), 2u);
    double ra = 0.0, rb = 0.0;
    for (const auto& d : a.defects.defects) ra = std::max(ra, d.core_radius);
    for (const auto& d : b.defects.defects) rb = std::max(rb, d.core_radius);
    EXPECT_LT(rb, ra);
}

TEST(ReferenceRun, DegreeTwoHasFourDefectsAndTwoJumps) {
    for (double eps : {0.05, 0.02}) {
        const auto& run = reference_run(1.0, eps, 2);
        EXPECT_EQ(run.defects.defects.size(), 4u) << "eps=" << eps;
        EXPECT_EQ(run.jumps.components.size(), 2u) << "eps=" << eps;
    }
}
