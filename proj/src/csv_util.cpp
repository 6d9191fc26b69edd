#include "csv_util.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "chpss/fault.hpp"

namespace chpss::csv {

std::string num(double v) {
    char buf[32];
    const int len = std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf, static_cast<std::size_t>(len));
}

namespace {
std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}
} // namespace

std::size_t Table::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
    }
    throw Fault(FaultKind::Io, "csv column '" + name + "' not found");
}

std::vector<double> Table::column(const std::string& name) const {
    const std::size_t c = index_of(name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) {
        if (c >= r.size()) throw Fault(FaultKind::Io, "csv row too short for column '" + name + "'");
        out.push_back(std::strtod(r[c].c_str(), nullptr));
    }
    return out;
}

std::vector<std::string> Table::text_column(const std::string& name) const {
    const std::size_t c = index_of(name);
    std::vector<std::string> out;
    for (const auto& r : rows) out.push_back(c < r.size() ? r[c] : std::string());
    return out;
}

Table read(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Fault(FaultKind::Io, "cannot open " + path);
    Table t;
    std::string line;
    if (!std::getline(in, line)) throw Fault(FaultKind::Io, path + " is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    t.header = split(line);
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        t.rows.push_back(split(line));
    }
    return t;
}

} // namespace chpss::csv
