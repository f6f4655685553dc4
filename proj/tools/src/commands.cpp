#include "ferrosim_cli/commands.hpp"

#include "ferrosim/error.hpp"
#include "ferrosim/flow.hpp"
#include "ferrosim/numfmt.hpp"
#include "ferrosim/profile1d.hpp"
#include "ferrosim/seeding.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

namespace ferrosim::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::ofstream open_out(const fs::path& path) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot write " + path.string());
    return os;
}

void write_json(const fs::path& path, const json& j) {
    auto os = open_out(path);
    os << j.dump(2) << '\n';
    if (!os) throw IoError("write failed: " + path.string());
}

void write_resolved(const fs::path& out_dir, const RunConfig& cfg) {
    auto os = open_out(out_dir / "resolved.cfg");
    write_config(os, cfg);
}

std::vector<Point2> input_points(const RunConfig& cfg) {
    if (cfg.input.empty()) throw InvalidInput("this command needs a points file (input = PATH)");
    return read_points_file(cfg.input);
}

json points_json(std::span<const Point2> pts) {
    json a = json::array();
    for (const auto& p : pts) a.push_back({p.x, p.y});
    return a;
}

json connection_json(const Connection& c) {
    json pairs = json::array();
    for (const auto& pr : c.pairs) pairs.push_back({pr[0], pr[1]});
    return {{"pairs", pairs}, {"length", c.total_length}, {"points", points_json(c.points)}};
}

// Uniform double in [0, 1) from the raw 64-bit output; identical on every
// standard library, unlike std::uniform_real_distribution.
double unit_draw(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::string field_file_name(std::size_t index) {
    std::ostringstream os;
    os << "snapshot_" << std::setw(3) << std::setfill('0') << index << ".csv";
    return os.str();
}

} // namespace

std::vector<Point2> read_points_csv(std::istream& is) {
    std::vector<Point2> pts;
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) {
            throw ParseError("expected 'x,y'", line_no, static_cast<int>(line.size()) + 1);
        }
        auto field = [](const std::string& s) {
            const auto b = s.find_first_not_of(" \t");
            const auto e = s.find_last_not_of(" \t");
            return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
        };
        const std::string xs = field(line.substr(0, comma));
        const std::string ys = field(line.substr(comma + 1));
        if (pts.empty() && xs == "x" && ys == "y") continue;
        Point2 p;
        if (!parse_double(xs, p.x)) throw ParseError("bad x value '" + xs + "'", line_no, 1);
        if (!parse_double(ys, p.y)) throw ParseError("bad y value '" + ys + "'", line_no, static_cast<int>(comma) + 2);
        pts.push_back(p);
    }
    return pts;
}

std::vector<Point2> read_points_file(const fs::path& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot read " + path.string());
    return read_points_csv(is);
}

json analysis_json(const FieldState& s, const ModelParams& params, double threshold) {
    const auto consts = potential_constants(params);
    const EnergyBreakdown e = discrete_energy(s, params, consts);
    const DefectSet ds = detect_defects(s, params, consts, threshold);
    const JumpSet js = extract_jump_set(s, params, consts, &ds);
    const WindingField wf = winding_field(s);

    json defects = json::array();
    for (const auto& d : ds.defects) {
        defects.push_back({{"x", d.x},
                           {"y", d.y},
                           {"charge", d.q_charge},
                           {"q_winding", d.q_winding},
                           {"core_radius", d.core_radius},
                           {"boundary_adjacent", d.boundary_adjacent}});
    }
    json comps = json::array();
    for (const auto& c : js.components) {
        comps.push_back({{"length_raw", c.length_raw},
                         {"length_corrected", c.length_corrected},
                         {"crossings", c.crossings.size()},
                         {"endpoints", {c.endpoints[0], c.endpoints[1], c.endpoints[2], c.endpoints[3]}}});
    }
    const auto el = euler_lagrange_residual(s, params);
    return {{"time", s.time},
            {"n", s.grid.n()},
            {"beta", params.beta},
            {"eps", params.eps},
            {"energy",
             {{"elastic_q", e.elastic_q},
              {"elastic_m", e.elastic_m},
              {"potential", e.potential},
              {"total", e.total},
              {"split_g", e.split_g},
              {"split_mm", e.split_mm},
              {"split_remainder", e.split_remainder},
              {"split_core", e.split_core}}},
            {"defects", defects},
            {"jump_components", comps},
            {"total_winding", wf.total()},
            {"indeterminate_plaquettes", wf.indeterminate.size()},
            {"boundary_winding_q", boundary_winding_q(s)},
            {"boundary_winding_m", boundary_winding_m(s)},
            {"jacobian_integral", s.grid.n() > 0 ? jacobian_integral(s) : 0.0},
            {"euler_lagrange_residual", {el[0], el[1]}}};
}

void cmd_simulate(const RunConfig& cfg, const fs::path& out_dir, std::ostream& log) {
    write_resolved(out_dir, cfg);
    const Grid grid(cfg.flow.grid_n);
    const FieldState s0 = initial_condition(grid, cfg.k, cfg.params);

    auto report = open_out(out_dir / "report.csv");
    report << "time,energy,delta,picard_iters,max_update\n";
    // On a solver failure the report stream is flushed while unwinding, so
    // the steps completed so far stay on disk.
    const RunResult res = run(cfg.flow, s0, [&](const StepReport& r) {
        report << format_double(r.time) << ',' << format_double(r.energy_total) << ','
               << format_double(r.energy_delta) << ',' << r.picard_iters << ',' << format_double(r.max_update)
               << '\n';
    });
    if (!report) throw IoError("write failed: report.csv");

    json snaps = json::array();
    for (std::size_t i = 0; i < res.snapshots.size(); ++i) {
        const std::string name = field_file_name(i);
        auto os = open_out(out_dir / name);
        write_field_csv(os, res.snapshots[i].state, cfg.params);
        snaps.push_back({{"requested_time", res.snapshots[i].requested_time},
                         {"time", res.snapshots[i].state.time},
                         {"file", name}});
    }
    {
        auto os = open_out(out_dir / "final_state.csv");
        write_field_csv(os, res.final_state, cfg.params);
    }
    json summary = analysis_json(res.final_state, cfg.params, cfg.threshold);
    summary["steady"] = res.steady;
    summary["steps"] = res.reports.size();
    summary["snapshots"] = snaps;
    write_json(out_dir / "analysis.json", summary);
    log << "simulate: " << res.reports.size() << " steps, final energy "
        << format_double(summary["energy"]["total"].get<double>()) << ", " << summary["defects"].size()
        << " defects\n";
}

void cmd_analyze(const RunConfig& cfg, const fs::path& out_dir, std::ostream& log) {
    if (cfg.input.empty()) throw InvalidInput("analyze needs a state file (input = PATH)");
    std::ifstream is(cfg.input);
    if (!is) throw IoError("cannot read " + cfg.input);
    FieldFileHeader hdr;
    const FieldState s = read_field_csv(is, &hdr);
    write_resolved(out_dir, cfg);
    // The file's own beta and eps define the energy being analysed.
    ModelParams params = cfg.params;
    params.beta = hdr.beta;
    params.eps = hdr.eps;
    params.validate();
    const json j = analysis_json(s, params, cfg.threshold);
    write_json(out_dir / "analysis.json", j);
    log << "analyze: " << j["defects"].size() << " defects, " << j["jump_components"].size()
        << " jump components\n";
}

void cmd_minconn(const RunConfig& cfg, const fs::path& out_dir, std::ostream& log) {
    const auto pts = input_points(cfg);
    write_resolved(out_dir, cfg);
    const Connection c = minimal_connection(pts);
    write_json(out_dir / "connection.json", connection_json(c));
    log << "minconn: length " << format_double(c.total_length) << '\n';
}

void cmd_renorm(const RunConfig& cfg, const fs::path& out_dir, std::ostream& log) {
    const auto pts = input_points(cfg);
    write_resolved(out_dir, cfg);
    const Grid grid(cfg.flow.grid_n);
    const int k = static_cast<int>(pts.size() / 2);
    const std::vector<double> sigmas = cfg.sigmas.empty() ? sigma_ladder(pts, grid) : cfg.sigmas;
    const RenormalizedEnergy r = renormalized_energy(pts, k, grid, sigmas);
    json table = json::array();
    for (const auto& row : r.table) {
        table.push_back({{"sigma", row.sigma}, {"energy", row.energy}, {"w_sigma", row.w_sigma}, {"fitted", row.fitted}});
    }
    const auto consts = potential_constants(cfg.params);
    const Connection c = minimal_connection(pts);
    write_json(out_dir / "renorm.json", {{"W", r.w},
                                         {"slope", r.slope},
                                         {"max_fit_residual", r.max_fit_residual},
                                         {"k", k},
                                         {"n", grid.n()},
                                         {"table", table},
                                         {"connection_length", c.total_length},
                                         {"w_beta", r.w + consts.c_beta * c.total_length}});
    log << "renorm: W " << format_double(r.w) << '\n';
}

void cmd_optimize(const RunConfig& cfg, const fs::path& out_dir, std::ostream& log) {
    write_resolved(out_dir, cfg);
    const Grid grid(cfg.flow.grid_n);
    const int count = 2 * cfg.k;
    std::mt19937_64 rng(cfg.seed);
    std::vector<std::vector<Point2>> starts;
    for (int s = 0; s < cfg.starts; ++s) {
        std::vector<Point2> pts;
        for (int i = 0; i < count; ++i) pts.push_back({0.15 + 0.7 * unit_draw(rng), 0.15 + 0.7 * unit_draw(rng)});
        starts.push_back(std::move(pts));
    }
    WBetaOptions opt;
    opt.threads = cfg.threads;
    const WBetaResult r = minimize_w_beta(cfg.k, cfg.params, grid, starts, opt);
    auto minimum = [](const WBetaMinimum& m) {
        return json{{"points", points_json(m.points)}, {"value", m.value}, {"start", m.start}, {"evaluations", m.evaluations}};
    };
    json per_start = json::array(), distinct = json::array(), start_pts = json::array();
    for (const auto& m : r.per_start) per_start.push_back(minimum(m));
    for (const auto& m : r.distinct) distinct.push_back(minimum(m));
    for (const auto& s : starts) start_pts.push_back(points_json(s));
    write_json(out_dir / "optimize.json",
               {{"best", minimum(r.best)}, {"per_start", per_start}, {"distinct", distinct}, {"starts", start_pts}});
    log << "optimize-defects: best value " << format_double(r.best.value) << ", " << r.distinct.size()
        << " distinct minima\n";
}

void cmd_profile(const RunConfig& cfg, const fs::path& out_dir, std::ostream& log) {
    write_resolved(out_dir, cfg);
    const double t_max = cfg.profile_t_max > 0.0 ? cfg.profile_t_max : default_profile_t_max(cfg.params);
    const Profile p = optimal_profile(cfg.params, t_max, cfg.profile_samples);
    {
        auto os = open_out(out_dir / "profile.csv");
        os << "t,u\n";
        for (std::size_t i = 0; i < p.ts.size(); ++i) os << format_double(p.ts[i]) << ',' << format_double(p.us[i]) << '\n';
    }
    double err = 0.0;
    for (std::size_t i = 0; i < p.ts.size(); ++i) err = std::max(err, std::abs(p.us[i] - profile_closed_form(cfg.params, p.ts[i])));
    const auto consts = potential_constants(cfg.params);
    write_json(out_dir / "profile_cost.json", {{"beta", cfg.params.beta},
                                               {"lambda_star", consts.lambda_star},
                                               {"t_max", t_max},
                                               {"samples", cfg.profile_samples},
                                               {"cost", p.energy},
                                               {"half_c_beta", 0.5 * consts.c_beta},
                                               {"quadrature_int_H", half_interface_cost(cfg.params)},
                                               {"first_integral_residual", first_integral_residual(cfg.params, p)},
                                               {"max_error_closed_form", err}});
    log << "profile: cost " << format_double(p.energy) << " (c_beta/2 = " << format_double(0.5 * consts.c_beta) << ")\n";
}

void cmd_core_energy(const RunConfig& cfg, const fs::path& out_dir, std::ostream& log) {
    write_resolved(out_dir, cfg);
    const CoreEnergyResult r = core_energy(cfg.eps_list, cfg.core_n);
    json table = json::array();
    for (const auto& row : r.table) {
        table.push_back({{"eps", row.eps},
                         {"gamma", row.gamma},
                         {"gamma_minus_log", row.gamma_minus_log},
                         {"newton_iterations", row.newton_iterations}});
    }
    write_json(out_dir / "core_energy.json", {{"n", cfg.core_n}, {"table", table}, {"gamma_star", r.gamma_star}});
    log << "core-energy: gamma_* ~ " << format_double(r.gamma_star) << '\n';
}

void cmd_seed(const RunConfig& cfg, const fs::path& out_dir, std::ostream& log) {
    const auto pts = input_points(cfg);
    write_resolved(out_dir, cfg);
    if (static_cast<int>(pts.size()) != 2 * cfg.k) {
        throw InvalidInput("seed-state: the points file must hold 2k = " + std::to_string(2 * cfg.k) + " points");
    }
    const Grid grid(cfg.flow.grid_n);
    const Connection c = minimal_connection(pts);
    const FieldState s = seeded_state(grid, cfg.params, pts, c);
    {
        auto os = open_out(out_dir / "seeded_state.csv");
        write_field_csv(os, s, cfg.params);
    }
    write_json(out_dir / "connection.json", connection_json(c));
    write_json(out_dir / "analysis.json", analysis_json(s, cfg.params, cfg.threshold));
    log << "seed-state: wrote seeded_state.csv\n";
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"ferronematic simulator and analysis tools", "ferrosim"};
    app.require_subcommand(1);

    struct Common {
        std::string config;
        std::vector<std::string> sets;
        std::string out = ".";
        std::optional<long long> seed;
        std::optional<double> beta;
        std::string input;
    };
    Common common;
    using Handler = void (*)(const RunConfig&, const fs::path&, std::ostream&);
    const std::vector<std::tuple<std::string, std::string, Handler>> commands = {
        {"simulate", "run the gradient flow from the degree-k initial datum", cmd_simulate},
        {"analyze", "energy split, defects and jump set of a stored state", cmd_analyze},
        {"minconn", "minimal connection of a points file", cmd_minconn},
        {"renorm", "renormalized energy of a points file", cmd_renorm},
        {"optimize-defects", "minimize W_beta over defect positions", cmd_optimize},
        {"profile", "optimal 1-D profile and interface cost", cmd_profile},
        {"core-energy", "radial vortex core energies and gamma_*", cmd_core_energy},
        {"seed-state", "recovery state from a points file", cmd_seed},
    };
    Handler chosen = nullptr;
    for (const auto& [name, help, fn] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("input", common.input, "input file (state or points)");
        sub->add_option("--config", common.config, "flat key = value config file");
        sub->add_option("--set", common.sets, "override key=value (repeatable)")->allow_extra_args(false);
        sub->add_option("--out", common.out, "output directory");
        sub->add_option("--seed", common.seed, "random seed for optimizer starts");
        sub->add_option("--beta", common.beta, "shorthand for --set beta=B");
        sub->callback([&chosen, f = fn] { chosen = f; });
    }

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitParse;
    }

    try {
        KeyValues kv;
        if (!common.config.empty()) {
            std::ifstream is(common.config);
            if (!is) throw IoError("cannot read config " + common.config);
            kv = parse_config_text(is);
        }
        for (const auto& s : common.sets) {
            const auto [key, value] = parse_override(s);
            kv[key] = value;
        }
        if (common.seed) kv["seed"] = std::to_string(*common.seed);
        if (common.beta) kv["beta"] = format_double(*common.beta);
        if (!common.input.empty()) kv["input"] = common.input;
        const RunConfig cfg = resolve_config(kv);

        if (cfg.threads > 0) {
            // The geometry pool reads the cap from the environment.
            ::setenv("FERROSIM_THREADS", std::to_string(cfg.threads).c_str(), 1);
        }
        std::error_code ec;
        fs::create_directories(common.out, ec);
        if (ec) throw IoError("cannot create output directory " + common.out + ": " + ec.message());
        chosen(cfg, common.out, out);
        return kExitOk;
    } catch (const SolverError& e) {
        err << "solver failure: " << e.what() << '\n';
        return kExitSolver;
    } catch (const IoError& e) {
        err << "i/o error: " << e.what() << '\n';
        return kExitIo;
    } catch (const ParseError& e) {
        err << "parse error: " << e.what() << '\n';
        return kExitParse;
    } catch (const InvalidInput& e) {
        err << "invalid input: " << e.what() << '\n';
        return kExitParse;
    } catch (const CapacityError& e) {
        err << "capacity exceeded: " << e.what() << '\n';
        return kExitParse;
    }
}

} // namespace ferrosim::cli
