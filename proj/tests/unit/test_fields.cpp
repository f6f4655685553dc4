#include "ferrosim/diagnostics.hpp"
#include "ferrosim/error.hpp"
#include "ferrosim/fields.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>
#include <random>
#include <sstream>

using namespace ferrosim;

namespace {

const ModelParams kParams = ModelParams::with_default_friction(1.0, 0.05);

// Independent winding count: sum of wrapped angle increments along a loop.
double loop_winding(const std::vector<double>& a, const std::vector<double>& b) {
    double total = 0.0;
    const std::size_t n = a.size();
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = (i + 1) % n;
        double d = std::atan2(b[j], a[j]) - std::atan2(b[i], a[i]);
        d -= 2.0 * std::numbers::pi * std::round(d / (2.0 * std::numbers::pi));
        total += d;
    }
    return total / (2.0 * std::numbers::pi);
}

} // namespace

TEST(Grid, SpacingDerivedFromN) {
    for (int n : {8, 50, 200}) {
        const Grid g(n);
        EXPECT_EQ(g.h() * n, 1.0);
        EXPECT_EQ(g.nodes(), static_cast<std::size_t>((n + 1) * (n + 1)));
        EXPECT_EQ(g.x(n), 1.0);
        EXPECT_EQ(g.boundary_loop().size(), static_cast<std::size_t>(4 * n));
    }
    EXPECT_THROW(Grid(7), InvalidInput);
}

TEST(BoundaryData, ExampleNodeOnRightSide) {
    const Grid g(50);
    const auto bd = boundary_data(g, 1, kParams);
    const std::size_t node = g.index(50, 25);
    bool found = false;
    for (std::size_t i = 0; i < bd.nodes.size(); ++i) {
        if (bd.nodes[i] != node) continue;
        found = true;
        EXPECT_NEAR(bd.m1[i], 0.0, 1e-15);
        EXPECT_NEAR(bd.m2[i], -1.5537740, 1e-7);
        // theta = -pi/2 so 2 theta = -pi.
        EXPECT_NEAR(bd.q11[i], -std::sqrt(0.5), 1e-15);
        EXPECT_NEAR(bd.q12[i], 0.0, 1e-15);
    }
    EXPECT_TRUE(found);
}

TEST(BoundaryData, WindingsAreKAndTwoK) {
    for (int n : {8, 21, 50})
        for (int k : {1, 2, 3}) {
            const Grid g(n);
            const auto bd = boundary_data(g, k, kParams);
            EXPECT_NEAR(loop_winding(bd.m1, bd.m2), k, 1e-12);
            EXPECT_NEAR(loop_winding(bd.q11, bd.q12), 2 * k, 1e-12);
            const FieldState s = initial_condition(g, k, kParams);
            EXPECT_EQ(boundary_winding_m(s), k);
            EXPECT_EQ(boundary_winding_q(s), 2 * k);
        }
}

TEST(BoundaryData, NormsOnBoundary) {
    const Grid g(30);
    const double ls = potential_constants(kParams).lambda_star;
    for (int k : {1, 2}) {
        const auto bd = boundary_data(g, k, kParams);
        for (std::size_t i = 0; i < bd.nodes.size(); ++i) {
            EXPECT_NEAR(std::hypot(bd.m1[i], bd.m2[i]), ls, 1e-14);
            EXPECT_NEAR(2.0 * (bd.q11[i] * bd.q11[i] + bd.q12[i] * bd.q12[i]), 1.0, 1e-14);
        }
    }
}

TEST(BoundaryData, InvariantUnderKFoldRotation) {
    // Quarter turns map the loop onto itself shifted by n entries.
    const int n = 40;
    const Grid g(n);
    for (int k : {2, 4}) {
        const auto bd = boundary_data(g, k, kParams);
        const std::size_t len = bd.nodes.size();
        const std::size_t shift = static_cast<std::size_t>(4 * n / k);
        for (std::size_t i = 0; i < len; ++i) {
            const std::size_t j = (i + shift) % len;
            EXPECT_NEAR(bd.m1[i], bd.m1[j], 1e-12);
            EXPECT_NEAR(bd.m2[i], bd.m2[j], 1e-12);
            EXPECT_NEAR(bd.q11[i], bd.q11[j], 1e-12);
            EXPECT_NEAR(bd.q12[i], bd.q12[j], 1e-12);
        }
    }
}

TEST(BoundaryData, RejectsNonPositiveDegree) {
    EXPECT_THROW(boundary_data(Grid(10), 0, kParams), InvalidInput);
    EXPECT_THROW(initial_condition(Grid(10), -1, kParams), InvalidInput);
}

TEST(InitialCondition, BoundaryRestrictionEqualsBoundaryData) {
    const Grid g(50);
    for (int k : {1, 2}) {
        const FieldState s = initial_condition(g, k, kParams);
        const auto bd = boundary_data(g, k, kParams);
        for (std::size_t i = 0; i < bd.nodes.size(); ++i) {
            EXPECT_EQ(s.q11[bd.nodes[i]], bd.q11[i]);
            EXPECT_EQ(s.q12[bd.nodes[i]], bd.q12[i]);
            EXPECT_EQ(s.m1[bd.nodes[i]], bd.m1[i]);
            EXPECT_EQ(s.m2[bd.nodes[i]], bd.m2[i]);
        }
        EXPECT_EQ(s.time, 0.0);
    }
}

TEST(InitialCondition, MagnetisationNormExceptCentreNode) {
    // The centre node carries M = 0 (see the fields notes in the README).
    const Grid g(50);
    const double ls = potential_constants(kParams).lambda_star;
    const FieldState s = initial_condition(g, 1, kParams);
    const std::size_t centre = g.index(25, 25);
    for (std::size_t i = 0; i < g.nodes(); ++i) {
        if (i == centre) continue;
        EXPECT_NEAR(s.m(i).norm(), ls, 1e-14);
    }
    EXPECT_EQ(s.m1[centre], 0.0);
    EXPECT_EQ(s.m2[centre], 0.0);
    EXPECT_NEAR(s.q(centre).norm(), 1.0, 1e-15);
    for (std::size_t i = 0; i < g.nodes(); ++i) EXPECT_TRUE(std::isfinite(s.q11[i] + s.q12[i]));
}

TEST(InitialCondition, PlaquetteWindingAroundCentre) {
    for (int k : {1, 2}) {
        const FieldState s = initial_condition(Grid(50), k, kParams);
        const WindingField w = winding_field(s);
        EXPECT_TRUE(w.indeterminate.empty());
        EXPECT_EQ(w.total(), 2 * k);
        // Square loop of radius r nodes about the centre node. For k = 2 the
        // q-angle turns by exactly pi per edge on the radius-1 loop, so the
        // charge is only resolved on the radius-2 loop.
        const Grid g(50);
        const int r = k;
        std::vector<double> a, b;
        auto push = [&](int i, int j) {
            a.push_back(s.q11[g.index(i, j)]);
            b.push_back(s.q12[g.index(i, j)]);
        };
        for (int i = 25 - r; i < 25 + r; ++i) push(i, 25 - r);
        for (int j = 25 - r; j < 25 + r; ++j) push(25 + r, j);
        for (int i = 25 + r; i > 25 - r; --i) push(i, 25 + r);
        for (int j = 25 + r; j > 25 - r; --j) push(25 - r, j);
        EXPECT_NEAR(loop_winding(a, b), 2 * k, 1e-12);
        int near_centre = 0;
        for (int cj = 25 - r; cj < 25 + r; ++cj)
            for (int ci = 25 - r; ci < 25 + r; ++ci) near_centre += w.winding[static_cast<std::size_t>(cj * 50 + ci)];
        EXPECT_EQ(near_centre, 2 * k);
    }
}

TEST(FieldState, ReconstructionInvariant) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        const QValue q{u(rng), u(rng)};
        // Full matrix [[a, b], [b, -a]]: trace zero and symmetric by construction.
        const double a = q.q11, b = q.q12, d = -q.q11;
        EXPECT_EQ(a + d, 0.0);
        EXPECT_DOUBLE_EQ(q.norm_sq(), a * a + 2 * b * b + d * d);
    }
}

TEST(FieldCsv, BitExactRoundTrip) {
    const Grid g(12);
    FieldState s(g);
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (std::size_t i = 0; i < g.nodes(); ++i) s.set(i, {u(rng), u(rng) * 1e-300}, {u(rng) * 1e300, u(rng)});
    s.time = 0.1 + 0.2;
    std::stringstream ss;
    write_field_csv(ss, s, kParams);
    FieldFileHeader hdr;
    const FieldState r = read_field_csv(ss, &hdr);
    EXPECT_EQ(hdr.n, 12);
    EXPECT_EQ(hdr.beta, 1.0);
    EXPECT_EQ(hdr.eps, 0.05);
    EXPECT_EQ(r.time, s.time);
    ASSERT_EQ(r.grid, g);
    EXPECT_EQ(0, std::memcmp(r.q11.data(), s.q11.data(), sizeof(double) * g.nodes()));
    EXPECT_EQ(0, std::memcmp(r.q12.data(), s.q12.data(), sizeof(double) * g.nodes()));
    EXPECT_EQ(0, std::memcmp(r.m1.data(), s.m1.data(), sizeof(double) * g.nodes()));
    EXPECT_EQ(0, std::memcmp(r.m2.data(), s.m2.data(), sizeof(double) * g.nodes()));
}

TEST(FieldCsv, HeaderLine) {
    std::stringstream ss;
    write_field_csv(ss, initial_condition(Grid(8), 1, kParams), kParams);
    std::string first, second;
    std::getline(ss, first);
    std::getline(ss, second);
    EXPECT_EQ(first, "# n=8 h=0.125 time=0 beta=1 eps=0.050000000000000003");
    // Rows are x,y,q11,q12,m1,m2.
    EXPECT_EQ(std::count(second.begin(), second.end(), ','), 5);
    EXPECT_EQ(second.rfind("0,0,", 0), 0u);
}

TEST(FieldCsv, MalformedInputReportsPosition) {
    std::stringstream good;
    write_field_csv(good, initial_condition(Grid(8), 1, kParams), kParams);
    std::string text = good.str();
    const std::size_t third = text.find('\n', text.find('\n') + 1) + 1;
    std::string bad = text;
    bad.replace(bad.find(',', bad.find(',', third) + 1) + 1, 1, "z");
    std::stringstream in(bad);
    try {
        read_field_csv(in);
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3);
        EXPECT_GT(e.column(), 1);
    }
    std::stringstream empty("");
    EXPECT_THROW(read_field_csv(empty), ParseError);
    std::stringstream truncated(text.substr(0, text.size() / 2));
    EXPECT_THROW(read_field_csv(truncated), ParseError);
}

TEST(ApplyBoundary, OverwritesOnlyBoundary) {
    const Grid g(10);
    FieldState s(g);
    apply_boundary(s, boundary_data(g, 1, kParams));
    for (int j = 0; j <= 10; ++j)
        for (int i = 0; i <= 10; ++i) {
            const std::size_t node = g.index(i, j);
            if (g.on_boundary(i, j)) EXPECT_GT(s.m(node).norm(), 1.0);
            else EXPECT_EQ(s.m(node).norm(), 0.0);
        }
}
