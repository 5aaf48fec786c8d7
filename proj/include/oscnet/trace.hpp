#ifndef OSCNET_TRACE_HPP
#define OSCNET_TRACE_HPP

#include <cstddef>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "oscnet/errors.hpp"

namespace oscnet {

// Uniformly sampled time series: one labelled column per signal,
// column-major. Everything downstream (metrics, CSV export) reads this.
struct SimTrace {
    std::vector<double> times;                 // seconds, uniform grid
    std::vector<std::string> labels;
    std::vector<std::vector<double>> columns;  // columns[c][sample]

    std::size_t n_samples() const { return times.size(); }
    std::size_t n_columns() const { return columns.size(); }

    const std::vector<double>& column(const std::string& label) const {
        for (std::size_t c = 0; c < labels.size(); ++c)
            if (labels[c] == label) return columns[c];
        throw io_error("trace has no column named " + label);
    }
};

inline void write_csv(const SimTrace& trace, std::ostream& os) {
    os << 't';
    for (const auto& l : trace.labels) os << ',' << l;
    os << '\n';
    os << std::setprecision(17);
    for (std::size_t s = 0; s < trace.n_samples(); ++s) {
        os << trace.times[s];
        for (const auto& col : trace.columns) os << ',' << col[s];
        os << '\n';
    }
}

inline void write_csv(const SimTrace& trace, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw io_error("cannot open for writing: " + path);
    write_csv(trace, os);
    if (!os) throw io_error("write failed: " + path);
}

inline SimTrace read_csv(std::istream& is) {
    SimTrace trace;
    std::string line;
    if (!std::getline(is, line)) throw io_error("trace csv: empty input");
    std::stringstream hs(line);
    std::string cell;
    bool first = true;
    while (std::getline(hs, cell, ',')) {
        if (first) { first = false; continue; } // "t"
        trace.labels.push_back(cell);
    }
    trace.columns.resize(trace.labels.size());
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream ls(line);
        std::size_t c = 0;
        first = true;
        while (std::getline(ls, cell, ',')) {
            double v = std::stod(cell);
            if (first) { trace.times.push_back(v); first = false; }
            else trace.columns.at(c++).push_back(v);
        }
        if (c != trace.columns.size()) throw io_error("trace csv: ragged row");
    }
    return trace;
}

inline SimTrace read_csv_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw io_error("cannot open for reading: " + path);
    return read_csv(is);
}

} // namespace oscnet

#endif
