#include "cwo/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace cwo {

namespace {

bool is_binary_value(double v) { return v == 0.0 || v == 1.0; }

[[noreturn]] void fail_line(std::size_t line, const std::string& what) {
    throw std::runtime_error("csv line " + std::to_string(line) + ": " + what);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

}  // namespace

std::string format_value(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

Dataset::Dataset(std::vector<ColumnInfo> columns, Eigen::MatrixXd values)
    : columns_(std::move(columns)), values_(std::move(values)) {
    if (static_cast<Eigen::Index>(columns_.size()) != values_.cols())
        throw std::invalid_argument("dataset: column count does not match value matrix");
    std::unordered_set<std::string> seen;
    for (const auto& c : columns_) {
        if (!seen.insert(c.name).second)
            throw std::invalid_argument("dataset: duplicate column name '" + c.name + "'");
    }
    for (Eigen::Index j = 0; j < values_.cols(); ++j) {
        const auto& col = columns_[static_cast<std::size_t>(j)];
        for (Eigen::Index i = 0; i < values_.rows(); ++i) {
            const double v = values_(i, j);
            if (!std::isfinite(v))
                throw std::invalid_argument("dataset: non-finite value in column '" + col.name + "'");
            if (col.kind == ValueKind::Binary && !is_binary_value(v))
                throw std::invalid_argument("dataset: non 0/1 value in binary column '" + col.name + "'");
            if (col.kind == ValueKind::Continuous && (v < 0.0 || v > 1.0))
                throw std::invalid_argument("dataset: value outside [0,1] in column '" + col.name + "'");
        }
    }
}

bool Dataset::has_column(const std::string& name) const noexcept {
    for (const auto& c : columns_)
        if (c.name == name) return true;
    return false;
}

Eigen::Index Dataset::column_index(const std::string& name) const {
    for (std::size_t j = 0; j < columns_.size(); ++j)
        if (columns_[j].name == name) return static_cast<Eigen::Index>(j);
    throw std::out_of_range("dataset: missing column '" + name + "'");
}

Eigen::VectorXd Dataset::column(const std::string& name) const {
    return values_.col(column_index(name));
}

Eigen::MatrixXd Dataset::select(std::span<const std::string> names) const {
    Eigen::MatrixXd out(rows(), static_cast<Eigen::Index>(names.size()));
    for (std::size_t j = 0; j < names.size(); ++j)
        out.col(static_cast<Eigen::Index>(j)) = values_.col(column_index(names[j]));
    return out;
}

std::vector<std::string> Dataset::block(const std::string& prefix) const {
    std::vector<std::string> names;
    for (int k = 1;; ++k) {
        std::string name = prefix + std::to_string(k);
        if (!has_column(name)) break;
        names.push_back(std::move(name));
    }
    if (names.empty())
        throw std::out_of_range("dataset: missing column block '" + prefix + "1..'");
    return names;
}

Dataset Dataset::permuted(std::span<const Eigen::Index> perm) const {
    if (static_cast<Eigen::Index>(perm.size()) != rows())
        throw std::invalid_argument("dataset: permutation length mismatch");
    Eigen::MatrixXd out(rows(), cols());
    for (Eigen::Index i = 0; i < rows(); ++i) out.row(i) = values_.row(perm[static_cast<std::size_t>(i)]);
    return Dataset(columns_, std::move(out));
}

std::uint64_t Dataset::checksum() const noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto feed = [&h](const unsigned char* p, std::size_t len) {
        for (std::size_t i = 0; i < len; ++i) {
            h ^= p[i];
            h *= 0x100000001b3ULL;
        }
    };
    for (const auto& c : columns_) {
        feed(reinterpret_cast<const unsigned char*>(c.name.data()), c.name.size());
        const unsigned char kind = c.kind == ValueKind::Binary ? 0 : 1;
        feed(&kind, 1);
    }
    for (Eigen::Index i = 0; i < values_.rows(); ++i)
        for (Eigen::Index j = 0; j < values_.cols(); ++j) {
            const double v = values_(i, j);
            feed(reinterpret_cast<const unsigned char*>(&v), sizeof(v));
        }
    return h;
}

void Dataset::write_csv(std::ostream& out) const {
    for (std::size_t j = 0; j < columns_.size(); ++j) {
        if (j) out << ',';
        out << columns_[j].name;
    }
    out << '\n';
    for (Eigen::Index i = 0; i < rows(); ++i) {
        for (Eigen::Index j = 0; j < cols(); ++j) {
            if (j) out << ',';
            const auto& col = columns_[static_cast<std::size_t>(j)];
            if (col.kind == ValueKind::Binary)
                out << static_cast<int>(values_(i, j));
            else
                out << format_value(values_(i, j));
        }
        out << '\n';
    }
}

void Dataset::write_csv_file(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    write_csv(out);
    if (!out.good()) throw std::runtime_error("write failed for '" + path + "'");
}

Dataset Dataset::read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("csv line 1: empty input");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::vector<std::string> names = split_csv_line(line);
    if (names.empty()) fail_line(1, "no columns in header");
    for (const auto& n : names)
        if (n.empty()) fail_line(1, "empty column name");

    std::vector<std::vector<double>> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::vector<std::string> fields = split_csv_line(line);
        if (fields.size() != names.size())
            fail_line(line_no, "expected " + std::to_string(names.size()) + " fields, got " +
                                   std::to_string(fields.size()));
        std::vector<double> row(fields.size());
        for (std::size_t j = 0; j < fields.size(); ++j) {
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(fields[j], &used);
            } catch (const std::exception&) {
                fail_line(line_no, "field '" + fields[j] + "' is not a number");
            }
            if (used != fields[j].size())
                fail_line(line_no, "field '" + fields[j] + "' is not a number");
            row[j] = v;
        }
        rows.push_back(std::move(row));
    }

    Eigen::MatrixXd values(static_cast<Eigen::Index>(rows.size()),
                           static_cast<Eigen::Index>(names.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < names.size(); ++j)
            values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];

    std::vector<ColumnInfo> columns(names.size());
    for (std::size_t j = 0; j < names.size(); ++j) {
        bool binary = true;
        for (std::size_t i = 0; i < rows.size() && binary; ++i)
            binary = is_binary_value(rows[i][j]);
        columns[j] = {names[j], binary ? ValueKind::Binary : ValueKind::Continuous};
    }
    return Dataset(std::move(columns), std::move(values));
}

Dataset Dataset::read_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    return read_csv(in);
}

}  // namespace cwo
