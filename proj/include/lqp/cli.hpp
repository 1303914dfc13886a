#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace lqp {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitBadInput = 2;   // missing/invalid files and arguments
inline constexpr int kExitWouldClobber = 3;  // output exists and --overwrite not given

struct RunManifest {
    std::string command;
    std::filesystem::path scene_path;
    std::filesystem::path engine_path;
    std::filesystem::path out_dir;
    std::filesystem::path log_path;  // replay input
    std::vector<std::string> methods{"rp-im"};
    std::vector<std::uint64_t> seeds{1};
    std::vector<std::string> tq_values;  // seconds or "inf"
    long ticks = 500;
    bool overwrite = false;
    bool dump_frames = false;
    int jobs = 2;
};

// Each command prints a single-line diagnostic to stderr on failure and
// returns one of the exit codes above.
int cmd_simulate(const RunManifest& manifest);
int cmd_evaluate(const RunManifest& manifest);
int cmd_ablate(const RunManifest& manifest);
int cmd_timing(const RunManifest& manifest);
int cmd_replay(const RunManifest& manifest);

std::vector<std::uint64_t> parse_seed_list(const std::string& text);
std::vector<std::string> parse_name_list(const std::string& text);

}  // namespace lqp
