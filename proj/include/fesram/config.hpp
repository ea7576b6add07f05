#pragma once

// Layered key/value configuration: embedded defaults, then files, then flags.
// Keys are "section.key"; values keep their text and are parsed on access.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fesram::config {

class Config {
public:
    /// The built-in defaults.ini.
    static Config defaults();
    static const std::string& defaults_text();

    /// Merges INI text on top; unknown keys are rejected so typos surface.
    void merge_ini(const std::string& text, const std::string& origin);
    void merge_file(const std::string& path);
    /// Sets one "section.key" value (CLI flag override).
    void set(const std::string& key, const std::string& value);

    bool has(const std::string& key) const { return values_.count(key) > 0; }
    const std::string& text(const std::string& key) const;
    double number(const std::string& key) const;
    int integer(const std::string& key) const;
    std::vector<double> list(const std::string& key) const;

    const std::map<std::string, std::string>& values() const noexcept { return values_; }
    /// Canonical "key = value" dump, one line per key in key order.
    std::string canonical() const;
    /// FNV-1a of canonical(), as 16 hex digits.
    std::string digest() const;

private:
    std::map<std::string, std::string> values_;
};

/// Defaults, then $FERRO_CONFIG if set, then `path` if given.
Config load(const std::optional<std::string>& path);

std::uint64_t fnv1a(const std::string& data);

/// Comma-separated numbers with SI suffixes.
std::vector<double> parse_list(const std::string& text);

}  // namespace fesram::config
