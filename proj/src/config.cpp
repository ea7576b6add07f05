#include "fesram/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "default_config.hpp"
#include "fesram/error.hpp"
#include "fesram/netlist.hpp"

namespace fesram::config {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::map<std::string, std::string> read_ini(const std::string& text, const std::string& origin) {
    boost::property_tree::ptree tree;
    std::istringstream in(text);
    try {
        boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ParseError(origin + ": " + e.message(), static_cast<int>(e.line()), 1);
    }
    std::map<std::string, std::string> out;
    for (const auto& [section, body] : tree) {
        if (body.empty()) throw ParseError(origin + ": key '" + section + "' outside a section", 0, 1);
        for (const auto& [key, value] : body) out[section + "." + key] = trim(value.data());
    }
    return out;
}

}  // namespace

const std::string& Config::defaults_text() {
    static const std::string text = kDefaultConfig;
    return text;
}

Config Config::defaults() {
    Config c;
    c.values_ = read_ini(defaults_text(), "defaults.ini");
    return c;
}

void Config::merge_ini(const std::string& text, const std::string& origin) {
    for (const auto& [k, v] : read_ini(text, origin)) {
        if (!values_.empty() && !values_.count(k)) throw Error(origin + ": unknown config key '" + k + "'");
        values_[k] = v;
    }
}

void Config::merge_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    merge_ini(ss.str(), path);
}

void Config::set(const std::string& key, const std::string& value) {
    if (!values_.count(key)) throw Error("unknown config key '" + key + "'");
    values_[key] = value;
}

const std::string& Config::text(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw Error("missing config key '" + key + "'");
    return it->second;
}

double Config::number(const std::string& key) const {
    const auto& t = text(key);
    if (auto v = netlist::parse_si(t)) return *v;
    throw Error("config key '" + key + "' is not a number: '" + t + "'");
}

int Config::integer(const std::string& key) const {
    const double v = number(key);
    if (v != static_cast<double>(static_cast<int>(v))) throw Error("config key '" + key + "' must be an integer");
    return static_cast<int>(v);
}

std::vector<double> Config::list(const std::string& key) const {
    try {
        return parse_list(text(key));
    } catch (const Error& e) {
        throw Error("config key '" + key + "': " + e.what());
    }
}

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        auto v = netlist::parse_si(item);
        if (!v) throw Error("bad list item '" + item + "'");
        out.push_back(*v);
    }
    return out;
}

std::string Config::canonical() const {
    std::string out;
    for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
    return out;
}

std::uint64_t fnv1a(const std::string& data) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string Config::digest() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(canonical())));
    return buf;
}

Config load(const std::optional<std::string>& path) {
    Config c = Config::defaults();
    if (const char* env = std::getenv("FERRO_CONFIG"); env && *env) c.merge_file(env);
    if (path) c.merge_file(*path);
    return c;
}

}  // namespace fesram::config
