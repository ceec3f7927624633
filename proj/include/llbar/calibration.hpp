#pragma once

// Calibration file: plain text, one record per line,
//
//   id=<property id> kernel=<gaussian|bump|none> epsilon=<real> value=<real>
//
// '#' starts a comment. Values are written with 17 significant digits.

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "llbar/error.hpp"

namespace llbar {

inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);  // shortest round-trip form
    return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& text, const std::string& what) {
    if (text == "nan") return std::nan("");
    if (text == "inf") return INFINITY;
    if (text == "-inf") return -INFINITY;
    double v = 0.0;
    const char* first = text.data();
    const char* last = first + text.size();
    if (first != last && *first == '+') ++first;
    auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last) throw FormatError("cannot parse '" + text + "' as a number for " + what);
    return v;
}

struct CalibrationRecord {
    std::string id;
    std::string kernel = "none";
    double epsilon = 0.0;
    double value = 0.0;
};

class CalibrationFile {
public:
    void set(const CalibrationRecord& rec) {
        for (auto& r : records_)
            if (same_key(r, rec)) {
                r.value = rec.value;
                return;
            }
        records_.push_back(rec);
    }

    std::optional<double> find(const std::string& id, const std::string& kernel = "none", double epsilon = 0.0) const {
        for (const auto& r : records_)
            if (r.id == id && r.kernel == kernel && std::abs(r.epsilon - epsilon) <= 1e-12 * std::max(1.0, epsilon))
                return r.value;
        return std::nullopt;
    }

    const std::vector<CalibrationRecord>& records() const { return records_; }

    void write(std::ostream& os) const {
        os << "# llbar calibration records\n";
        for (const auto& r : records_)
            os << "id=" << r.id << " kernel=" << r.kernel << " epsilon=" << format_double(r.epsilon)
               << " value=" << format_double(r.value) << '\n';
    }

    static CalibrationFile read(std::istream& is) {
        CalibrationFile f;
        std::string line;
        int lineno = 0;
        while (std::getline(is, line)) {
            ++lineno;
            if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
            std::istringstream ls(line);
            std::string tok;
            CalibrationRecord rec;
            bool any = false, has_id = false, has_value = false;
            while (ls >> tok) {
                any = true;
                auto eq = tok.find('=');
                if (eq == std::string::npos)
                    throw FormatError("calibration line " + std::to_string(lineno) + ": expected key=value");
                auto key = tok.substr(0, eq), val = tok.substr(eq + 1);
                if (key == "id") {
                    rec.id = val;
                    has_id = true;
                } else if (key == "kernel") {
                    rec.kernel = val;
                } else if (key == "epsilon") {
                    rec.epsilon = parse_double(val, "epsilon");
                } else if (key == "value") {
                    rec.value = parse_double(val, "value");
                    has_value = true;
                } else {
                    throw FormatError("calibration line " + std::to_string(lineno) + ": unknown key '" + key + "'");
                }
            }
            if (!any) continue;
            if (!has_id || !has_value)
                throw FormatError("calibration line " + std::to_string(lineno) + ": id and value are required");
            f.records_.push_back(rec);
        }
        return f;
    }

    static CalibrationFile load(const std::filesystem::path& path) {
        std::ifstream is(path);
        if (!is) throw IoError("cannot open calibration file " + path.string());
        return read(is);
    }

    void save(const std::filesystem::path& path) const {
        std::ofstream os(path, std::ios::trunc);
        if (!os) throw IoError("cannot open " + path.string() + " for writing");
        write(os);
    }

private:
    static bool same_key(const CalibrationRecord& a, const CalibrationRecord& b) {
        return a.id == b.id && a.kernel == b.kernel && a.epsilon == b.epsilon;
    }

    std::vector<CalibrationRecord> records_;
};

}  // namespace llbar
