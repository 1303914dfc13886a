#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace lqp {

// Shortest decimal form that parses back to the identical double. All CSV
// output goes through this so exported logs can be re-scored exactly.
std::string format_double(double x);

double parse_double(std::string_view s);
long parse_long(std::string_view s);

std::vector<std::string> split_csv_line(std::string_view line);

// Minimal line-oriented CSV reader: returns all rows, header included.
std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path);

// Opens an output file and throws std::runtime_error on failure.
std::ofstream open_output(const std::filesystem::path& path);

}  // namespace lqp
