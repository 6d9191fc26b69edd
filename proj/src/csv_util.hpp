#pragma once

#include <string>
#include <vector>

namespace chpss::csv {

/// Shortest text that round-trips the double exactly (%.17g).
std::string num(double v);

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t index_of(const std::string& name) const;
    std::vector<double> column(const std::string& name) const;
    std::vector<std::string> text_column(const std::string& name) const;
};

Table read(const std::string& path);

} // namespace chpss::csv
