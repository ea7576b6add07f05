#include "fesram/io.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>

#include "fesram/error.hpp"

namespace fesram::io {

std::string format_sig(double value) {
    if (!std::isfinite(value)) return std::isnan(value) ? "nan" : (value > 0 ? "inf" : "-inf");
    if (value == 0.0) return "0";
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value, std::chars_format::general, 9);
    return {buf.data(), res.ptr};
}

double round_sig(double value) {
    if (!std::isfinite(value) || value == 0.0) return value;
    const auto s = format_sig(value);
    double out = 0.0;
    std::from_chars(s.data(), s.data() + s.size(), out);
    return out;
}

std::string csv_string(const analysis::Table& table) {
    std::string out;
    for (std::size_t i = 0; i < table.columns.size(); ++i) {
        if (i) out += ',';
        out += table.columns[i];
    }
    out += '\n';
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            out += format_sig(row[i]);
        }
        out += '\n';
    }
    return out;
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write " + path.string());
    f << text;
    if (!f) throw Error("write failed: " + path.string());
}

}  // namespace

void write_csv(const std::filesystem::path& path, const analysis::Table& table) { write_text(path, csv_string(table)); }

void write_json(const std::filesystem::path& path, const nlohmann::json& doc) { write_text(path, doc.dump(2) + "\n"); }

nlohmann::json RunManifest::to_json() const {
    return {{"command", command},
            {"config_digest", config_digest},
            {"seed", seed},
            {"version", version},
            {"files", files}};
}

void RunManifest::write(const std::filesystem::path& dir) {
    if (std::find(files.begin(), files.end(), "manifest.json") == files.end()) files.push_back("manifest.json");
    std::sort(files.begin(), files.end());
    files.erase(std::unique(files.begin(), files.end()), files.end());
    write_json(dir / "manifest.json", to_json());
}

}  // namespace fesram::io
