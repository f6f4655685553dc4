// commands.hpp
// Command implementations of the ferrosim tool. Each writes its outputs
// into `out_dir` and returns the process exit status.

#pragma once

#include "ferrosim/diagnostics.hpp"
#include "ferrosim/geometry.hpp"
#include "ferrosim_cli/config.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

namespace ferrosim::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitSolver = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitParse = 4;

/// Rows `x,y`; `#` comments, blank lines and an optional `x,y` header line
/// are skipped. Throws ParseError with line and column.
std::vector<Point2> read_points_csv(std::istream& is);
std::vector<Point2> read_points_file(const std::filesystem::path& path);

/// Summary of a state: energy split, defects, jump components, windings.
nlohmann::json analysis_json(const FieldState& state, const ModelParams& params, double threshold);

// These throw the core exception types; run_cli maps them to exit codes.
void cmd_simulate(const RunConfig& cfg, const std::filesystem::path& out_dir, std::ostream& log);
void cmd_analyze(const RunConfig& cfg, const std::filesystem::path& out_dir, std::ostream& log);
void cmd_minconn(const RunConfig& cfg, const std::filesystem::path& out_dir, std::ostream& log);
void cmd_renorm(const RunConfig& cfg, const std::filesystem::path& out_dir, std::ostream& log);
void cmd_optimize(const RunConfig& cfg, const std::filesystem::path& out_dir, std::ostream& log);
void cmd_profile(const RunConfig& cfg, const std::filesystem::path& out_dir, std::ostream& log);
void cmd_core_energy(const RunConfig& cfg, const std::filesystem::path& out_dir, std::ostream& log);
void cmd_seed(const RunConfig& cfg, const std::filesystem::path& out_dir, std::ostream& log);

/// Full command line: `ferrosim <command> [input] [--config PATH]
/// [--set key=value]... [--out DIR] [--seed N] [--beta B]`.
/// Exit codes: 0 ok, 2 solver failure, 3 I/O, 4 parse or invalid input.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace ferrosim::cli
