#include "pival/json_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "pival/errors.hpp"

namespace pival {

namespace {

std::string format_double(double v) {
    if (!std::isfinite(v)) return "null";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    std::string s(buf);
    // Keep a number that re-parses as floating point.
    if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
    return s;
}

void emit(const nlohmann::json& v, std::string& out, int depth) {
    const std::string pad(static_cast<std::size_t>(2 * (depth + 1)), ' ');
    const std::string close_pad(static_cast<std::size_t>(2 * depth), ' ');
    switch (v.type()) {
        case nlohmann::json::value_t::object: {
            if (v.empty()) {
                out += "{}";
                return;
            }
            out += "{\n";
            bool first = true;
            for (auto it = v.begin(); it != v.end(); ++it) {
                if (!first) out += ",\n";
                first = false;
                out += pad + nlohmann::json(it.key()).dump() + ": ";
                emit(it.value(), out, depth + 1);
            }
            out += "\n" + close_pad + "}";
            return;
        }
        case nlohmann::json::value_t::array: {
            if (v.empty()) {
                out += "[]";
                return;
            }
            bool scalar = true;
            for (const auto& e : v) scalar = scalar && !e.is_structured();
            out += "[";
            bool first = true;
            for (const auto& e : v) {
                if (!first) out += scalar ? ", " : ",";
                first = false;
                if (!scalar) out += "\n" + pad;
                emit(e, out, depth + 1);
            }
            if (!scalar) out += "\n" + close_pad;
            out += "]";
            return;
        }
        case nlohmann::json::value_t::number_float: out += format_double(v.get<double>()); return;
        default: out += v.dump(); return;
    }
}

}  // namespace

std::string emit_json(const nlohmann::json& value) {
    std::string out;
    emit(value, out, 0);
    out += "\n";
    return out;
}

void CsvTable::add(std::vector<double> row) {
    if (row.size() != header.size()) throw DimensionError("csv row width does not match header");
    rows.push_back(std::move(row));
}

std::string emit_csv(const CsvTable& table) {
    std::string out;
    for (std::size_t c = 0; c < table.header.size(); ++c) out += (c ? "," : "") + table.header[c];
    out += "\n";
    char buf[32];
    for (const auto& row : table.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) out += ",";
            if (std::isnan(row[c])) {
                out += "nan";
            } else {
                std::snprintf(buf, sizeof buf, "%.17g", row[c]);
                out += buf;
            }
        }
        out += "\n";
    }
    return out;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write " + path);
    f << content;
    f.flush();
    if (!f) throw IoError("write failed for " + path);
}

}  // namespace pival
