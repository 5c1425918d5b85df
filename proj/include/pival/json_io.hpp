#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace pival {

inline constexpr const char* kVersion = "1.0.0";

// Compact-indented JSON with every double at 17 significant digits; NaN and inf become null.
std::string emit_json(const nlohmann::json& value);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    void add(std::vector<double> row);
};

std::string emit_csv(const CsvTable& table);

// Throws IoError when the path cannot be written.
void write_text_file(const std::string& path, const std::string& content);

}  // namespace pival
