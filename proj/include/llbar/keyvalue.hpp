#pragma once

// Flat configuration text: one `key = value` per line, '#' starts a comment,
// blank lines ignored. Keys are case sensitive.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <string>
#include <utility>
#include <vector>

#include "llbar/calibration.hpp"
#include "llbar/error.hpp"

namespace llbar {

using KeyValues = std::vector<std::pair<std::string, std::string>>;

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline KeyValues read_key_values(std::istream& is) {
    KeyValues out;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw UsageError("config line " + std::to_string(lineno) + ": expected key = value");
        auto key = trim(line.substr(0, eq));
        if (key.empty()) throw UsageError("config line " + std::to_string(lineno) + ": empty key");
        out.emplace_back(key, trim(line.substr(eq + 1)));
    }
    return out;
}

inline KeyValues load_key_values(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open config file " + path.string());
    return read_key_values(is);
}

// Value parsers that name the offending key in their errors.

inline double value_as_double(const std::string& key, const std::string& v) {
    try {
        return parse_double(v, key);
    } catch (const FormatError&) {
        throw UsageError(key + ": expected a number, got '" + v + "'");
    }
}

inline long long value_as_int(const std::string& key, const std::string& v) {
    long long out = 0;
    auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size())
        throw UsageError(key + ": expected an integer, got '" + v + "'");
    return out;
}

inline bool value_as_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw UsageError(key + ": expected true or false, got '" + v + "'");
}

inline std::vector<double> value_as_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    std::string cell;
    for (std::size_t i = 0; i <= v.size(); ++i) {
        if (i == v.size() || v[i] == ',') {
            auto t = trim(cell);
            if (!t.empty()) out.push_back(value_as_double(key, t));
            cell.clear();
        } else {
            cell += v[i];
        }
    }
    return out;
}

inline std::string list_to_string(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ',';
        s += format_double(v[i]);
    }
    return s;
}

}  // namespace llbar
