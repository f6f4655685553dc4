#include "ferrosim_cli/config.hpp"

#include "ferrosim/error.hpp"
#include "ferrosim/numfmt.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>

namespace ferrosim::cli {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

bool known_key(const std::string& key) {
    const auto& d = config_defaults();
    return std::any_of(d.begin(), d.end(), [&](const auto& kv) { return kv.first == key; });
}

double as_double(const KeyValues& v, const std::string& key) {
    double out = 0.0;
    if (!parse_double(v.at(key), out)) throw ParseError("bad number for '" + key + "': " + v.at(key), 0, 0);
    return out;
}

long long as_int(const KeyValues& v, const std::string& key) {
    long long out = 0;
    if (!parse_int(v.at(key), out)) throw ParseError("bad integer for '" + key + "': " + v.at(key), 0, 0);
    return out;
}

std::vector<double> as_list(const KeyValues& v, const std::string& key) {
    std::vector<double> out;
    const std::string& text = v.at(key);
    if (trim(text).empty()) return out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        double x = 0.0;
        if (!parse_double(trim(item), x)) throw ParseError("bad list entry for '" + key + "': " + item, 0, 0);
        out.push_back(x);
    }
    return out;
}

std::string list_text(const std::vector<double>& xs) {
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) s += ",";
        s += format_double(xs[i]);
    }
    return s;
}

} // namespace

const std::vector<std::pair<std::string, std::string>>& config_defaults() {
    static const std::vector<std::pair<std::string, std::string>> d = {
        {"beta", "1"},
        {"eps", "0.05"},
        {"eta1", "1"},
        {"eta2", ""}, // empty: eps
        {"n", "50"},
        {"tau", "0.001"},
        {"t_end", "1"},
        {"k", "1"},
        {"snapshots", "0.02,0.05,1"},
        {"picard_tol", "1e-10"},
        {"picard_max", "50"},
        {"linsolve_tol", "1e-10"},
        {"steady_tol", "1e-08"},
        {"max_halvings", "3"},
        {"input", ""},
        {"eps_list", "0.2,0.1,0.05,0.02"},
        {"core_n", "4000"},
        {"sigmas", ""}, // empty: default ladder
        {"starts", "8"},
        {"seed", "1"},
        {"profile_t_max", "0"}, // 0: 20 / lambda_*
        {"profile_samples", "10001"},
        {"threads", "0"},
        {"threshold", "0.5"},
    };
    return d;
}

KeyValues parse_config_text(std::istream& is) {
    KeyValues out;
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        const auto hash = line.find('#');
        const std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            throw ParseError("expected 'key = value'", line_no, static_cast<int>(line.find(body)) + 1);
        }
        const std::string key = trim(body.substr(0, eq));
        if (key.empty()) throw ParseError("empty key", line_no, 1);
        if (!known_key(key)) {
            throw ParseError("unknown key '" + key + "'", line_no, static_cast<int>(line.find(key)) + 1);
        }
        out[key] = trim(body.substr(eq + 1));
    }
    return out;
}

std::pair<std::string, std::string> parse_override(const std::string& text) {
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ParseError("--set expects key=value, got '" + text + "'", 0, 0);
    std::string key = trim(text.substr(0, eq));
    if (!known_key(key)) throw ParseError("unknown key '" + key + "'", 0, 0);
    return {key, trim(text.substr(eq + 1))};
}

RunConfig resolve_config(const KeyValues& values) {
    KeyValues v;
    for (const auto& [key, def] : config_defaults()) v[key] = def;
    for (const auto& [key, val] : values) {
        if (!known_key(key)) throw ParseError("unknown key '" + key + "'", 0, 0);
        v[key] = val;
    }

    RunConfig c;
    c.params.beta = as_double(v, "beta");
    c.params.eps = as_double(v, "eps");
    c.params.eta1 = as_double(v, "eta1");
    c.params.eta2 = trim(v["eta2"]).empty() ? c.params.eps : as_double(v, "eta2");
    c.params.validate();

    c.flow.params = c.params;
    c.flow.grid_n = static_cast<int>(as_int(v, "n"));
    c.flow.tau = as_double(v, "tau");
    c.flow.t_end = as_double(v, "t_end");
    c.flow.snapshot_times = as_list(v, "snapshots");
    c.flow.picard_tol = as_double(v, "picard_tol");
    c.flow.picard_max = static_cast<int>(as_int(v, "picard_max"));
    c.flow.linsolve_tol = as_double(v, "linsolve_tol");
    c.flow.steady_tol = as_double(v, "steady_tol");
    c.flow.max_halvings = static_cast<int>(as_int(v, "max_halvings"));
    c.flow.validate();

    c.k = static_cast<int>(as_int(v, "k"));
    if (c.k < 1) throw InvalidInput("k must be >= 1");
    c.input = v["input"];
    c.eps_list = as_list(v, "eps_list");
    c.core_n = static_cast<int>(as_int(v, "core_n"));
    c.sigmas = as_list(v, "sigmas");
    c.starts = static_cast<int>(as_int(v, "starts"));
    if (c.starts < 1) throw InvalidInput("starts must be >= 1");
    const long long seed = as_int(v, "seed");
    if (seed < 0) throw InvalidInput("seed must be >= 0");
    c.seed = static_cast<std::uint64_t>(seed);
    c.profile_t_max = as_double(v, "profile_t_max");
    c.profile_samples = static_cast<int>(as_int(v, "profile_samples"));
    const long long threads = as_int(v, "threads");
    if (threads < 0) throw InvalidInput("threads must be >= 0");
    c.threads = static_cast<unsigned>(threads);
    c.threshold = as_double(v, "threshold");
    if (!(c.threshold > 0.0 && c.threshold < 1.0)) throw InvalidInput("threshold must lie in (0, 1)");
    return c;
}

void write_config(std::ostream& os, const RunConfig& c) {
    auto kv = [&](const char* key, const std::string& value) { os << key << " = " << value << '\n'; };
    kv("beta", format_double(c.params.beta));
    kv("eps", format_double(c.params.eps));
    kv("eta1", format_double(c.params.eta1));
    kv("eta2", format_double(c.params.eta2));
    kv("n", std::to_string(c.flow.grid_n));
    kv("tau", format_double(c.flow.tau));
    kv("t_end", format_double(c.flow.t_end));
    kv("k", std::to_string(c.k));
    kv("snapshots", list_text(c.flow.snapshot_times));
    kv("picard_tol", format_double(c.flow.picard_tol));
    kv("picard_max", std::to_string(c.flow.picard_max));
    kv("linsolve_tol", format_double(c.flow.linsolve_tol));
    kv("steady_tol", format_double(c.flow.steady_tol));
    kv("max_halvings", std::to_string(c.flow.max_halvings));
    kv("input", c.input);
    kv("eps_list", list_text(c.eps_list));
    kv("core_n", std::to_string(c.core_n));
    kv("sigmas", list_text(c.sigmas));
    kv("starts", std::to_string(c.starts));
    kv("seed", std::to_string(c.seed));
    kv("profile_t_max", format_double(c.profile_t_max));
    kv("profile_samples", std::to_string(c.profile_samples));
    kv("threads", std::to_string(c.threads));
    kv("threshold", format_double(c.threshold));
}

} // namespace ferrosim::cli
