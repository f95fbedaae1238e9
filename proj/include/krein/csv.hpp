#pragma once

// Small CSV layer shared by the scenario runner and the CLI.  All numbers
// are rendered with "%.17g" so a double round-trips exactly and repeated
// runs produce byte-identical bodies.

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sampled_function.hpp"

namespace krein {

inline std::string csv_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {
        if (columns_.empty()) throw std::invalid_argument("CsvTable: no columns");
    }

    // metadata lines are emitted before the header as "# key=value"
    void add_meta(const std::string& key, const std::string& value) {
        meta_.push_back("# " + key + "=" + value);
    }
    void add_meta(const std::string& key, double value) { add_meta(key, csv_num(value)); }

    void add_row(std::vector<std::string> cells) {
        if (cells.size() != columns_.size())
            throw std::invalid_argument("CsvTable: row width " + std::to_string(cells.size()) +
                                        " != " + std::to_string(columns_.size()));
        rows_.push_back(std::move(cells));
    }

    std::string body() const {
        std::string out;
        for (const auto& m : meta_) out += m + "\n";
        for (std::size_t c = 0; c < columns_.size(); ++c)
            out += (c ? "," : "") + columns_[c];
        out += "\n";
        for (const auto& row : rows_) {
            for (std::size_t c = 0; c < row.size(); ++c) out += (c ? "," : "") + row[c];
            out += "\n";
        }
        return out;
    }

    std::size_t row_count() const { return rows_.size(); }

private:
    std::vector<std::string> columns_;
    std::vector<std::string> meta_;
    std::vector<std::vector<std::string>> rows_;
};

struct CsvDocument {
    std::vector<std::string> columns;
    std::vector<std::pair<std::string, std::string>> meta;
    std::vector<std::vector<double>> rows;
};

// Reads the "# key=value" preamble, one header line, and numeric rows.
inline CsvDocument read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_csv: cannot open " + path);
    CsvDocument doc;
    std::string line;
    bool have_header = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto eq = line.find('=');
            std::string key = line.substr(1, eq == std::string::npos ? std::string::npos : eq - 1);
            while (!key.empty() && key.front() == ' ') key.erase(key.begin());
            doc.meta.emplace_back(key, eq == std::string::npos ? "" : line.substr(eq + 1));
            continue;
        }
        std::stringstream ss(line);
        std::string cell;
        if (!have_header) {
            while (std::getline(ss, cell, ',')) doc.columns.push_back(cell);
            have_header = true;
            continue;
        }
        std::vector<double> row;
        while (std::getline(ss, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw std::runtime_error("read_csv: non-numeric cell '" + cell + "' in " + path);
            }
        }
        if (row.size() != doc.columns.size())
            throw std::runtime_error("read_csv: ragged row in " + path);
        doc.rows.push_back(std::move(row));
    }
    if (!have_header) throw std::runtime_error("read_csv: no header in " + path);
    return doc;
}

// Coefficient files: "x,value" (real) or "x,re,im" / "t,re,im" (complex).
inline RealFunction read_real_coefficient(const std::string& path) {
    auto doc = read_csv(path);
    if (doc.columns.size() != 2)
        throw std::runtime_error("read_real_coefficient: expected 2 columns in " + path);
    std::vector<double> x, y;
    for (const auto& r : doc.rows) {
        x.push_back(r[0]);
        y.push_back(r[1]);
    }
    return RealFunction(std::move(x), std::move(y));
}

inline ComplexFunction read_complex_coefficient(const std::string& path) {
    auto doc = read_csv(path);
    if (doc.columns.size() != 3)
        throw std::runtime_error("read_complex_coefficient: expected 3 columns in " + path);
    std::vector<double> x;
    std::vector<Complex> y;
    for (const auto& r : doc.rows) {
        x.push_back(r[0]);
        y.emplace_back(r[1], r[2]);
    }
    return ComplexFunction(std::move(x), std::move(y));
}

}  // namespace krein
