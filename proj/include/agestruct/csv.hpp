#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "agestruct/grid.hpp"

namespace agestruct::csv {

// 17 significant digits, so values round-trip exactly.
std::string format(double value);

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    void add(const std::vector<double>& values);
};

std::string render(const Table& table);
void write(const std::filesystem::path& path, const Table& table);

Table field(const Field2D& f);                      // t,a,value
Table profile(const Profile& p);                    // a,value
Table series(const TimeSeries& s, const std::string& column = "value");  // t,value

}  // namespace agestruct::csv
