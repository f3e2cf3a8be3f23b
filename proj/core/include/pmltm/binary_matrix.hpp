#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace pmltm {

/// n x M matrix of 0/1 observations stored as compressed rows.
///
/// Only the positions holding a 1 are kept; column indices within a row are
/// strictly increasing, so duplicates cannot exist.
class BinaryMatrix {
public:
    using Index = std::size_t;

    BinaryMatrix() = default;
    BinaryMatrix(Index rows, Index cols);

    /// Builds from (row, col) positions of ones. Throws InvalidArgument on an
    /// out-of-range or repeated position.
    static BinaryMatrix fromEntries(Index rows, Index cols,
                                    std::vector<std::pair<Index, Index>> entries);

    /// Any non-zero entry is read as 1; entries other than 0 and 1 throw.
    static BinaryMatrix fromDense(const Eigen::MatrixXd& dense);

    Index rows() const noexcept { return rows_; }
    Index cols() const noexcept { return cols_; }
    Index nonZeros() const noexcept { return colIndex_.size(); }
    bool empty() const noexcept { return rows_ == 0 || cols_ == 0; }

    /// Columns holding a 1 in row i, ascending.
    std::span<const Index> row(Index i) const;
    bool operator()(Index i, Index m) const;

    /// Per-column count of ones.
    std::vector<Index> columnCounts() const;
    Eigen::MatrixXd toDense() const;
    /// Row-major dense copy as bytes, handy for inner loops.
    std::vector<std::uint8_t> toDenseBytes() const;

    /// Returns a matrix holding the rows listed in `order`, in that order.
    BinaryMatrix selectRows(std::span<const Index> order) const;

    bool operator==(const BinaryMatrix& other) const = default;

private:
    Index rows_ = 0;
    Index cols_ = 0;
    std::vector<Index> rowStart_{0};
    std::vector<Index> colIndex_;
};

/// MatrixMarket coordinate format. Reading accepts `pattern`, `integer` and
/// `real` fields whose values are 0 or 1; writing always emits `pattern`.
BinaryMatrix readMatrixMarket(std::istream& in);
BinaryMatrix readMatrixMarket(const std::filesystem::path& path);
void writeMatrixMarket(std::ostream& out, const BinaryMatrix& matrix);
void writeMatrixMarket(const std::filesystem::path& path, const BinaryMatrix& matrix);

/// Dense comma-separated 0/1 values, one observation per line. The first
/// line is taken as a header when any of its fields is not 0 or 1.
struct CsvMatrix {
    BinaryMatrix matrix;
    std::vector<std::string> header;
};
CsvMatrix readDenseCsv(std::istream& in);
CsvMatrix readDenseCsv(const std::filesystem::path& path);
void writeDenseCsv(std::ostream& out, const BinaryMatrix& matrix,
                   const std::vector<std::string>& header = {});
void writeDenseCsv(const std::filesystem::path& path, const BinaryMatrix& matrix,
                   const std::vector<std::string>& header = {});

}  // namespace pmltm
