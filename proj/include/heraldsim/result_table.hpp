#pragma once

// CSV result tables. Numbers are written in scientific notation with 9
// significant digits; missing values are empty fields.

#include <cstdio>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "heraldsim/errors.hpp"
#include "heraldsim/optsweep.hpp"

namespace heraldsim {

inline std::string format_sci(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.8e", v);
    return buf;
}

inline std::string format_opt(const std::optional<double>& v) { return v ? format_sci(*v) : std::string(); }

inline std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c == '\n' ? ' ' : c;
    }
    return out + "\"";
}

inline std::string result_table_header(opt::SweepParameter param) {
    return std::string(to_string(param)) +
           ",model,source_type,g2,n_opt,g2_min,plateau_lo_hz,plateau_hi_hz,sigma,error";
}

inline std::string result_table_row(const opt::SweepRow& row) {
    std::ostringstream out;
    out << format_sci(row.value) << ',' << to_string(row.model) << ',' << to_string(row.source) << ','
        << format_opt(row.g2) << ',' << format_opt(row.n_opt) << ',' << format_opt(row.g2_min) << ','
        << format_opt(row.plateau_lo) << ',' << format_opt(row.plateau_hi) << ',' << ','
        << csv_escape(row.error);
    return out.str();
}

inline void write_result_table(std::ostream& out, opt::SweepParameter param, const std::vector<opt::SweepRow>& rows) {
    out << result_table_header(param) << '\n';
    for (const auto& r : rows) out << result_table_row(r) << '\n';
}

/// Parsed fields of one result-table row.
struct ParsedRow {
    double value = 0.0;
    std::string model;
    std::string source_type;
    std::optional<double> g2;
    std::string error;
};

inline ParsedRow parse_result_row(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    fields.push_back(cur);
    if (fields.size() != 10) throw ConfigError("result row must have 10 fields, got " + std::to_string(fields.size()));
    ParsedRow row;
    row.value = std::stod(fields[0]);
    row.model = fields[1];
    row.source_type = fields[2];
    if (!fields[3].empty()) row.g2 = std::stod(fields[3]);
    row.error = fields[9];
    return row;
}

}  // namespace heraldsim
