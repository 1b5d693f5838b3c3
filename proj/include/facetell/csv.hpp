#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace facetell::csv {

/// Shortest decimal text that reads back to the same double.
std::string format(double value);

std::vector<std::string> split(std::string_view line, char sep = ',');

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    // Column position by name; throws IoError when missing.
    std::size_t column(std::string_view name) const;
};

/// Reads a header-first CSV; blank lines are skipped.
Table read(const std::filesystem::path& path);

double to_double(const std::string& text);
long long to_int(const std::string& text);

}  // namespace facetell::csv
