#include "facetell/csv.hpp"

#include <charconv>
#include <fstream>
#include <system_error>

#include "facetell/error.hpp"

namespace facetell::csv {

std::string format(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

std::vector<std::string> split(std::string_view line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.emplace_back(line.substr(start));
            break;
        }
        out.emplace_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

std::size_t Table::column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
    }
    throw IoError("CSV column '" + std::string(name) + "' not found");
}

Table read(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    Table table;
    std::string line;
    bool have_header = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split(line);
        if (!have_header) {
            table.header = std::move(fields);
            have_header = true;
            continue;
        }
        if (fields.size() != table.header.size()) {
            throw IoError(path.string() + ": row has " + std::to_string(fields.size()) + " fields, expected " +
                          std::to_string(table.header.size()));
        }
        table.rows.push_back(std::move(fields));
    }
    if (!have_header) throw IoError(path.string() + ": empty CSV");
    return table;
}

double to_double(const std::string& text) {
    double v = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
        throw IoError("not a number: '" + text + "'");
    }
    return v;
}

long long to_int(const std::string& text) {
    long long v = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
        throw IoError("not an integer: '" + text + "'");
    }
    return v;
}

}  // namespace facetell::csv
