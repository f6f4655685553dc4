// flow.cpp

#include "ferrosim/flow.hpp"

#include "ferrosim/diagnostics.hpp"
#include "ferrosim/error.hpp"
#include "ferrosim/linsolve.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace ferrosim {

void FlowConfig::validate() const {
    params.validate();
    if (grid_n < 8) throw InvalidInput("grid_n must be >= 8");
    if (!(tau > 0.0) || !std::isfinite(tau)) throw InvalidInput("tau must be positive");
    if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw InvalidInput("t_end must be >= 0");
    if (!(picard_tol > 0.0) || !(linsolve_tol > 0.0) || !(steady_tol > 0.0)) {
        throw InvalidInput("tolerances must be positive");
    }
    if (picard_max < 1) throw InvalidInput("picard_max must be >= 1");
    if (max_halvings < 0) throw InvalidInput("max_halvings must be >= 0");
    if (!std::is_sorted(snapshot_times.begin(), snapshot_times.end())) {
        throw InvalidInput("snapshot_times must be sorted");
    }
}

namespace {

using Block = Eigen::Matrix4d;
using Vec4 = Eigen::Vector4d;

struct Coeffs {
    std::array<double, 4> c; // stiffness of each component
    std::array<double, 4> w; // friction (mass) of each component
    double inv_eps2;
};

Coeffs coeffs(const ModelParams& p) {
    return {{2.0, 2.0, p.eps, p.eps}, {2.0 * p.eta1, 2.0 * p.eta1, p.eta2, p.eta2}, 1.0 / (p.eps * p.eps)};
}

Vec4 node_vec(const FieldState& s, std::size_t p) { return {s.q11[p], s.q12[p], s.m1[p], s.m2[p]}; }

Vec4 grad_vec(const Vec4& u, const ModelParams& params) {
    const PotentialGradient g = grad_f_eps({u[0], u[1]}, {u[2], u[3]}, params);
    return {g.dq.q11, g.dq.q12, g.dm.m1, g.dm.m2};
}

Block hess_block(const Vec4& u, const ModelParams& params) {
    const Hessian4 h = hess_f_eps({u[0], u[1]}, {u[2], u[3]}, params);
    Block b;
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) b(r, c) = h[static_cast<std::size_t>(4 * r + c)];
    }
    return b;
}

Block clip_psd(const Block& b) {
    Eigen::SelfAdjointEigenSolver<Block> es(0.5 * (b + b.transpose()));
    const Vec4 ev = es.eigenvalues().cwiseMax(0.0);
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

// Interior nodes, packed as 4 unknowns per node.
class Stepper {
public:
    Stepper(const FieldState& s, const ModelParams& params, double dt, const FlowConfig& cfg)
        : g_(s.grid), params_(params), k_(coeffs(params)), dt_(dt), cfg_(cfg), m_(g_.n() - 1) {
        const std::size_t count = static_cast<std::size_t>(m_) * static_cast<std::size_t>(m_);
        blocks_.resize(count);
        inv_diag_.resize(count);
        inv_h2_ = 1.0 / (g_.h() * g_.h());
    }

    // Advances `s` in place by dt_. Returns the number of inner iterations,
    // or -1 if the iteration failed (s unchanged in that case). Full Newton
    // is tried first; on loss of definiteness or stagnation the iteration
    // continues with the clipped linearisation, which is always SPD.
    int advance(FieldState& s) {
        const FieldState u0 = s;
        FieldState v = s;
        const std::size_t count = blocks_.size();
        std::vector<double> r(4 * count), d(4 * count);
        double prev_change = std::numeric_limits<double>::infinity();
        for (int it = 1; it <= cfg_.picard_max; ++it) {
            CgResult cg;
            for (;;) {
                const bool ok = assemble(u0, v, r);
                std::fill(d.begin(), d.end(), 0.0);
                if (ok) {
                    const LinearOp apply = [this](std::span<const double> x, std::span<double> y) { apply_op(x, y); };
                    const LinearOp precond = [this](std::span<const double> x, std::span<double> y) {
                        for (std::size_t b = 0; b < blocks_.size(); ++b) {
                            const Vec4 xb(x[4 * b], x[4 * b + 1], x[4 * b + 2], x[4 * b + 3]);
                            const Vec4 yb = inv_diag_[b] * xb;
                            for (int c = 0; c < 4; ++c) y[4 * b + static_cast<std::size_t>(c)] = yb[c];
                        }
                    };
                    cg = conjugate_gradient(apply, precond, r, d, cfg_.linsolve_tol, 2000);
                }
                if (ok && cg.converged) break;
                if (!exact_) return -1;
                exact_ = false;
            }

            double change = 0.0;
            for (int j = 1; j < g_.n(); ++j) {
                for (int i = 1; i < g_.n(); ++i) {
                    const std::size_t b = packed(i, j);
                    const std::size_t p = g_.index(i, j);
                    v.q11[p] += d[4 * b];
                    v.q12[p] += d[4 * b + 1];
                    v.m1[p] += d[4 * b + 2];
                    v.m2[p] += d[4 * b + 3];
                    for (int c = 0; c < 4; ++c) change = std::max(change, std::abs(d[4 * b + static_cast<std::size_t>(c)]));
                }
            }
            if (!std::isfinite(change)) return -1;
            if (change < cfg_.picard_tol) {
                v.time = u0.time + dt_;
                s = std::move(v);
                return it;
            }
            // Newton should contract quickly; if it does not, fall back.
            if (exact_ && it >= 3 && change > 0.5 * prev_change) exact_ = false;
            prev_change = change;
        }
        return -1;
    }

private:
    std::size_t packed(int i, int j) const {
        return static_cast<std::size_t>(j - 1) * static_cast<std::size_t>(m_) + static_cast<std::size_t>(i - 1);
    }

    double lap(const std::vector<double>& u, int i, int j) const {
        return (u[g_.index(i + 1, j)] + u[g_.index(i - 1, j)] + u[g_.index(i, j + 1)] + u[g_.index(i, j - 1)] -
                4.0 * u[g_.index(i, j)]) * inv_h2_;
    }

    // Residual of the implicit equations at the iterate v, plus the
    // linearisation blocks. Returns false if a diagonal block of the exact
    // linearisation is not positive definite.
    bool assemble(const FieldState& u0, const FieldState& v, std::vector<double>& r) {
        const std::vector<double>* comp0[4] = {&u0.q11, &u0.q12, &u0.m1, &u0.m2};
        const std::vector<double>* compv[4] = {&v.q11, &v.q12, &v.m1, &v.m2};
        bool ok = true;
        for (int j = 1; j < g_.n(); ++j) {
            for (int i = 1; i < g_.n(); ++i) {
                const std::size_t b = packed(i, j);
                const std::size_t p = g_.index(i, j);
                const Vec4 a = node_vec(u0, p);
                const Vec4 z = node_vec(v, p);
                const Vec4 mid = 0.5 * (a + z);
                const Vec4 avg = (grad_vec(a, params_) + 4.0 * grad_vec(mid, params_) + grad_vec(z, params_)) / 6.0;
                for (int c = 0; c < 4; ++c) {
                    const double l = lap(*comp0[c], i, j) + lap(*compv[c], i, j);
                    r[4 * b + static_cast<std::size_t>(c)] = k_.w[c] / dt_ * (a[c] - z[c]) + 0.5 * k_.c[c] * l -
                                                            k_.inv_eps2 * avg[c];
                }
                const Block jac = (2.0 * hess_block(mid, params_) + hess_block(z, params_)) * (k_.inv_eps2 / 6.0);
                if (exact_) {
                    blocks_[b] = jac;
                } else {
                    // Most nodes sit near the well where the block is already PSD.
                    Eigen::LLT<Block> llt(jac);
                    blocks_[b] = llt.info() == Eigen::Success ? jac : clip_psd(jac);
                }
                Block diag = blocks_[b];
                for (int c = 0; c < 4; ++c) diag(c, c) += k_.w[c] / dt_ + 2.0 * k_.c[c] * inv_h2_;
                if (exact_ && Eigen::LLT<Block>(diag).info() != Eigen::Success) ok = false;
                inv_diag_[b] = diag.inverse();
            }
        }
        return ok;
    }

    void apply_op(std::span<const double> x, std::span<double> y) const {
        for (int j = 1; j < g_.n(); ++j) {
            for (int i = 1; i < g_.n(); ++i) {
                const std::size_t b = packed(i, j);
                const Vec4 xb(x[4 * b], x[4 * b + 1], x[4 * b + 2], x[4 * b + 3]);
                Vec4 yb = blocks_[b] * xb;
                for (int c = 0; c < 4; ++c) {
                    const std::size_t o = static_cast<std::size_t>(c);
                    double nb = 0.0;
                    if (i > 1) nb += x[4 * packed(i - 1, j) + o];
                    if (i < m_) nb += x[4 * packed(i + 1, j) + o];
                    if (j > 1) nb += x[4 * packed(i, j - 1) + o];
                    if (j < m_) nb += x[4 * packed(i, j + 1) + o];
                    yb[c] += k_.w[c] / dt_ * xb[c] + 0.5 * k_.c[c] * (4.0 * xb[c] - nb) * inv_h2_;
                }
                for (int c = 0; c < 4; ++c) y[4 * b + static_cast<std::size_t>(c)] = yb[c];
            }
        }
    }

    const Grid& g_;
    const ModelParams& params_;
    Coeffs k_;
    double dt_;
    const FlowConfig& cfg_;
    int m_;
    double inv_h2_ = 0.0;
    std::vector<Block> blocks_;
    std::vector<Block> inv_diag_;
    bool exact_ = true;
};

// Advance by dt, halving up to `depth_left` more times on failure.
bool advance_with_halving(FieldState& s, const FlowConfig& cfg, double dt, int depth_left, int depth,
                          int& iters, int& deepest) {
    Stepper st(s, cfg.params, dt, cfg);
    const int it = st.advance(s);
    if (it >= 0) {
        iters += it;
        deepest = std::max(deepest, depth);
        return true;
    }
    if (depth_left == 0) return false;
    FieldState trial = s;
    if (!advance_with_halving(trial, cfg, 0.5 * dt, depth_left - 1, depth + 1, iters, deepest)) return false;
    if (!advance_with_halving(trial, cfg, 0.5 * dt, depth_left - 1, depth + 1, iters, deepest)) return false;
    s = std::move(trial);
    return true;
}

double max_abs_diff(const FieldState& a, const FieldState& b) {
    double worst = 0.0;
    for (std::size_t p = 0; p < a.grid.nodes(); ++p) {
        worst = std::max({worst, std::abs(a.q11[p] - b.q11[p]), std::abs(a.q12[p] - b.q12[p]),
                          std::abs(a.m1[p] - b.m1[p]), std::abs(a.m2[p] - b.m2[p])});
    }
    return worst;
}

} // namespace

FieldRates rhs(const FieldState& s, const ModelParams& params) {
    const Grid& g = s.grid;
    const Coeffs k = coeffs(params);
    const double inv_h2 = 1.0 / (g.h() * g.h());
    FieldRates out;
    out.q11.assign(g.nodes(), 0.0);
    out.q12.assign(g.nodes(), 0.0);
    out.m1.assign(g.nodes(), 0.0);
    out.m2.assign(g.nodes(), 0.0);
    const std::vector<double>* in[4] = {&s.q11, &s.q12, &s.m1, &s.m2};
    std::vector<double>* res[4] = {&out.q11, &out.q12, &out.m1, &out.m2};
    for (int j = 1; j < g.n(); ++j) {
        for (int i = 1; i < g.n(); ++i) {
            const std::size_t p = g.index(i, j);
            const Vec4 gr = grad_vec(node_vec(s, p), params);
            for (int c = 0; c < 4; ++c) {
                const std::vector<double>& u = *in[c];
                const double l = (u[g.index(i + 1, j)] + u[g.index(i - 1, j)] + u[g.index(i, j + 1)] +
                                  u[g.index(i, j - 1)] - 4.0 * u[p]) * inv_h2;
                (*res[c])[p] = (k.c[c] * l - k.inv_eps2 * gr[c]) / k.w[c];
            }
        }
    }
    return out;
}

StepReport step(FieldState& state, const FlowConfig& config, const PotentialConstants& consts) {
    const FieldState before = state;
    const double e0 = total_energy(state, config.params, consts);
    int iters = 0;
    int deepest = 0;
    if (!advance_with_halving(state, config, config.tau, config.max_halvings, 0, iters, deepest)) {
        state = before;
        throw SolverError("implicit step at t = " + std::to_string(before.time) + " failed after " +
                          std::to_string(config.max_halvings) + " halvings of tau = " + std::to_string(config.tau));
    }
    state.time = before.time + config.tau;
    StepReport rep;
    rep.time = state.time;
    rep.energy_total = total_energy(state, config.params, consts);
    rep.energy_delta = rep.energy_total - e0;
    rep.picard_iters = iters;
    rep.max_update = max_abs_diff(state, before);
    rep.halvings = deepest;
    return rep;
}

RunResult run(const FlowConfig& config, const FieldState& initial, const StepObserver& observer) {
    config.validate();
    if (initial.grid.n() != config.grid_n) {
        throw InvalidInput("initial state grid does not match grid_n");
    }
    const PotentialConstants consts = potential_constants(config.params);
    const double t0 = initial.time;
    const long long nsteps =
        std::max(0LL, static_cast<long long>(std::ceil((config.t_end - t0) / config.tau - 1e-9)));

    // Step index at which each snapshot is taken.
    std::vector<long long> snap_at;
    for (double t : config.snapshot_times) {
        snap_at.push_back(std::clamp(std::llround((t - t0) / config.tau), 0LL, nsteps));
    }

    RunResult out{initial, {}, {}, false};
    FieldState& s = out.final_state;
    std::size_t next_snap = 0;
    auto take_snapshots = [&](long long k) {
        while (next_snap < snap_at.size() && snap_at[next_snap] <= k) {
            out.snapshots.push_back({config.snapshot_times[next_snap], s});
            ++next_snap;
        }
    };
    take_snapshots(0);
    for (long long k = 1; k <= nsteps; ++k) {
        StepReport rep = step(s, config, consts);
        s.time = t0 + static_cast<double>(k) * config.tau;
        rep.time = s.time;
        out.reports.push_back(rep);
        if (observer) observer(rep);
        take_snapshots(k);
        if (rep.max_update / config.tau < config.steady_tol) {
            out.steady = true;
            break;
        }
    }
    take_snapshots(nsteps);
    return out;
}

} // namespace ferrosim
