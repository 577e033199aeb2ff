#pragma once

#include <map>
#include <string>
#include <vector>

namespace pslab::cli {

inline constexpr const char* kToolVersion = "1.0.0";
inline constexpr int kSchemaVersion = 1;

// Flag values keyed by long option name without dashes, as typed by the user.
using Settings = std::map<std::string, std::string>;

struct RunConfig {
    std::string command;
    Settings settings;
};

struct RunResult {
    int exit_code = 0;
    std::vector<std::string> outputs;  // data files written, in order
    std::string manifest;              // path of the manifest
    std::string message;               // human-readable summary or error
};

// Subcommand names in help order.
const std::vector<std::string>& commands();

// Simple key = value file; '#' starts a comment.
Settings parse_config_file(const std::string& path);

// Command and settings echoed by a previous run.
RunConfig load_manifest(const std::string& path);

// Runs one subcommand, writes its outputs and a manifest, and maps every
// library error onto an exit code. Never throws for bad input.
RunResult run(const RunConfig& config);

// Full command line front end: parsing, config file, manifest replay.
int main_entry(int argc, char** argv);

} // namespace pslab::cli
