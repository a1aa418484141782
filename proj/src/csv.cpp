#include "agestruct/csv.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace agestruct::csv {

std::string format(double value) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

void Table::add(const std::vector<double>& values) {
    std::vector<std::string> row;
    row.reserve(values.size());
    for (double v : values) row.push_back(format(v));
    rows.push_back(std::move(row));
}

std::string render(const Table& t) {
    std::string out;
    for (std::size_t k = 0; k < t.header.size(); ++k) out += (k ? "," : "") + t.header[k];
    out += '\n';
    for (const auto& row : t.rows) {
        for (std::size_t k = 0; k < row.size(); ++k) {
            if (k) out += ',';
            out += row[k];
        }
        out += '\n';
    }
    return out;
}

void write(const std::filesystem::path& path, const Table& t) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << render(t);
    if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

Table field(const Field2D& f) {
    Table t{{"t", "a", "value"}, {}};
    t.rows.reserve(f.rows() * f.cols());
    for (std::size_t n = 0; n < f.rows(); ++n)
        for (std::size_t i = 0; i < f.cols(); ++i)
            t.add({f.time_grid().time(n), f.age_grid().node(i), f(n, i)});
    return t;
}

Table profile(const Profile& p) {
    Table t{{"a", "value"}, {}};
    for (std::size_t i = 0; i < p.size(); ++i) t.add({p.grid().node(i), p[i]});
    return t;
}

Table series(const TimeSeries& s, const std::string& column) {
    Table t{{"t", column}, {}};
    for (std::size_t n = 0; n < s.size(); ++n) t.add({s.times[n], s.values[n]});
    return t;
}

}  // namespace agestruct::csv
