#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace cwo {

enum class ValueKind { Binary, Continuous };

struct ColumnInfo {
    std::string name;
    ValueKind kind = ValueKind::Continuous;
};

/// Column-named table of n samples. Binary columns hold only {0,1};
/// continuous columns lie in [0,1]. Immutable after construction.
class Dataset {
public:
    Dataset() = default;
    Dataset(std::vector<ColumnInfo> columns, Eigen::MatrixXd values);

    [[nodiscard]] Eigen::Index rows() const noexcept { return values_.rows(); }
    [[nodiscard]] Eigen::Index cols() const noexcept { return values_.cols(); }
    [[nodiscard]] const std::vector<ColumnInfo>& columns() const noexcept { return columns_; }
    [[nodiscard]] const Eigen::MatrixXd& values() const noexcept { return values_; }

    [[nodiscard]] bool has_column(const std::string& name) const noexcept;
    /// Throws std::out_of_range naming the missing column.
    [[nodiscard]] Eigen::Index column_index(const std::string& name) const;
    [[nodiscard]] Eigen::VectorXd column(const std::string& name) const;
    /// Feature matrix assembled from the named columns, in the given order.
    [[nodiscard]] Eigen::MatrixXd select(std::span<const std::string> names) const;

    /// Names of the Z covariate block (columns "<prefix>1", "<prefix>2", ...),
    /// in index order. Throws if the block is empty.
    [[nodiscard]] std::vector<std::string> block(const std::string& prefix) const;

    /// Rows reordered by `perm` (perm[i] = source row of new row i).
    [[nodiscard]] Dataset permuted(std::span<const Eigen::Index> perm) const;

    /// FNV-1a over the raw value bytes plus the header; identical bytes in,
    /// identical checksum out.
    [[nodiscard]] std::uint64_t checksum() const noexcept;

    /// Header row of names; binary cells as 0/1 integers, continuous cells
    /// with 17 significant digits.
    void write_csv(std::ostream& out) const;
    void write_csv_file(const std::string& path) const;

    /// Parses a CSV produced by write_csv (or compatible). Errors carry the
    /// offending 1-based line number. Columns whose cells are all 0/1 are
    /// typed Binary, the rest Continuous.
    static Dataset read_csv(std::istream& in);
    static Dataset read_csv_file(const std::string& path);

private:
    std::vector<ColumnInfo> columns_;
    Eigen::MatrixXd values_;  // rows x columns
};

/// "%.17g" rendering used by every CSV emitter.
[[nodiscard]] std::string format_value(double v);

}  // namespace cwo
