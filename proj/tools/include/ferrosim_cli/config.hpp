// config.hpp
// Flat `key = value` run configuration shared by every command.

#pragma once

#include "ferrosim/flow.hpp"
#include "ferrosim/potential.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace ferrosim::cli {

/// Raw key/value pairs, later entries overriding earlier ones.
using KeyValues = std::map<std::string, std::string>;

/// Parses `key = value` lines; `#` starts a comment, blank lines are
/// ignored. Throws ParseError on a line without `=`, an empty key or an
/// unknown key.
KeyValues parse_config_text(std::istream& is);

/// One `key=value` override from the command line. Throws ParseError.
std::pair<std::string, std::string> parse_override(const std::string& text);

struct RunConfig {
    ModelParams params;         // beta, eps, eta1, eta2 (eta2 defaults to eps)
    FlowConfig flow;            // n, tau, t_end, snapshots and solver tolerances
    int k = 1;                  // boundary degree
    std::string input;          // state or points file
    std::vector<double> eps_list{0.2, 0.1, 0.05, 0.02};
    int core_n = 4000;
    std::vector<double> sigmas; // empty: default ladder
    int starts = 8;
    std::uint64_t seed = 1;
    double profile_t_max = 0.0; // 0: 20 / lambda_*
    int profile_samples = 10001;
    unsigned threads = 0;
    double threshold = 0.5;
};

/// Every known key with its default value, in echo order.
const std::vector<std::pair<std::string, std::string>>& config_defaults();

/// Applies defaults, then `values`. Throws ParseError (line 0) for a value
/// that does not parse, InvalidInput for one out of range.
RunConfig resolve_config(const KeyValues& values);

/// The resolved configuration as `key = value` lines, 17 significant digits.
void write_config(std::ostream& os, const RunConfig& cfg);

} // namespace ferrosim::cli
