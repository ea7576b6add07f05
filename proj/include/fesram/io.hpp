#pragma once

// CSV / JSON writers and the run manifest. Numbers are written with 9
// significant digits, independent of the process locale.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "fesram/analysis.hpp"

namespace fesram::io {

/// Shortest %g-style rendering at 9 significant digits ("1e-09", "0.25").
std::string format_sig(double value);
/// The value that format_sig prints, so JSON carries the same digits.
double round_sig(double value);

std::string csv_string(const analysis::Table& table);
void write_csv(const std::filesystem::path& path, const analysis::Table& table);
void write_json(const std::filesystem::path& path, const nlohmann::json& doc);

struct RunManifest {
    std::vector<std::string> command;
    std::string config_digest;
    std::uint64_t seed = 0;
    std::string version;
    std::vector<std::string> files;  ///< relative to the output directory

    nlohmann::json to_json() const;
    /// Writes manifest.json into `dir`, listing itself too.
    void write(const std::filesystem::path& dir);
};

inline constexpr const char* kVersion = "0.1.0";

}  // namespace fesram::io
