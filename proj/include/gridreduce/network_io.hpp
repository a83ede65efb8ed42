#pragma once

#include <filesystem>
#include <string>

#include "gridreduce/network.hpp"

namespace gridreduce {

RawNetwork load_network(const std::filesystem::path& buses, const std::filesystem::path& lines);
RawNetwork parse_network(const std::string& buses_text, const std::string& lines_text,
                         const std::string& buses_name = "buses.csv", const std::string& lines_name = "lines.csv");

std::string format_buses(const Network& net);
std::string format_lines(const Network& net);
// Writes buses.csv and lines.csv into dir.
void save_network(const Network& net, const std::filesystem::path& dir);

// Network already in canonical form (no parallel or self lines).
Network network_from_raw(const RawNetwork& raw);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

std::string format_double(double value);

}  // namespace gridreduce
