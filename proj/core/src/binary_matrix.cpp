#include "pmltm/binary_matrix.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "pmltm/error.hpp"

namespace pmltm {
namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> splitCsvLine(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (std::size_t k = 0; k < line.size(); ++k) {
        const char c = line[k];
        if (quoted) {
            if (c == '"') {
                if (k + 1 < line.size() && line[k + 1] == '"') {
                    field.push_back('"');
                    ++k;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(trim(field));
            field.clear();
        } else {
            field.push_back(c);
        }
    }
    fields.push_back(trim(field));
    return fields;
}

// 0 or 1 written as an integer or a real ("1", "1.0", "0.000").
int parseBinaryValue(const std::string& token) {
    double v = 0.0;
    const auto* first = token.data();
    const auto* last = token.data() + token.size();
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) return -1;
    if (v == 0.0) return 0;
    if (v == 1.0) return 1;
    return -1;
}

std::ifstream openForRead(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string() + " for reading");
    return in;
}

std::ofstream openForWrite(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    return out;
}

}  // namespace

BinaryMatrix::BinaryMatrix(Index rows, Index cols)
    : rows_(rows), cols_(cols), rowStart_(rows + 1, 0) {}

BinaryMatrix BinaryMatrix::fromEntries(Index rows, Index cols,
                                       std::vector<std::pair<Index, Index>> entries) {
    for (const auto& [i, m] : entries) {
        if (i >= rows || m >= cols)
            throw InvalidArgument("binary matrix entry (" + std::to_string(i) + ", " +
                                  std::to_string(m) + ") outside " + std::to_string(rows) + " x " +
                                  std::to_string(cols));
    }
    std::sort(entries.begin(), entries.end());
    if (std::adjacent_find(entries.begin(), entries.end()) != entries.end())
        throw InvalidArgument("binary matrix has a repeated entry");

    BinaryMatrix out(rows, cols);
    out.colIndex_.reserve(entries.size());
    for (const auto& [i, m] : entries) {
        ++out.rowStart_[i + 1];
        out.colIndex_.push_back(m);
    }
    for (Index i = 0; i < rows; ++i) out.rowStart_[i + 1] += out.rowStart_[i];
    return out;
}

BinaryMatrix BinaryMatrix::fromDense(const Eigen::MatrixXd& dense) {
    std::vector<std::pair<Index, Index>> entries;
    for (Eigen::Index i = 0; i < dense.rows(); ++i) {
        for (Eigen::Index m = 0; m < dense.cols(); ++m) {
            const double v = dense(i, m);
            if (v == 1.0) {
                entries.emplace_back(static_cast<Index>(i), static_cast<Index>(m));
            } else if (v != 0.0) {
                throw InvalidArgument("binary matrix entries must be 0 or 1");
            }
        }
    }
    return fromEntries(static_cast<Index>(dense.rows()), static_cast<Index>(dense.cols()),
                       std::move(entries));
}

std::span<const BinaryMatrix::Index> BinaryMatrix::row(Index i) const {
    return {colIndex_.data() + rowStart_[i], rowStart_[i + 1] - rowStart_[i]};
}

bool BinaryMatrix::operator()(Index i, Index m) const {
    const auto r = row(i);
    return std::binary_search(r.begin(), r.end(), m);
}

std::vector<BinaryMatrix::Index> BinaryMatrix::columnCounts() const {
    std::vector<Index> counts(cols_, 0);
    for (const Index m : colIndex_) ++counts[m];
    return counts;
}

Eigen::MatrixXd BinaryMatrix::toDense() const {
    Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows_),
                                                  static_cast<Eigen::Index>(cols_));
    for (Index i = 0; i < rows_; ++i)
        for (const Index m : row(i)) dense(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(m)) = 1.0;
    return dense;
}

std::vector<std::uint8_t> BinaryMatrix::toDenseBytes() const {
    std::vector<std::uint8_t> bytes(rows_ * cols_, 0);
    for (Index i = 0; i < rows_; ++i)
        for (const Index m : row(i)) bytes[i * cols_ + m] = 1;
    return bytes;
}

BinaryMatrix BinaryMatrix::selectRows(std::span<const Index> order) const {
    BinaryMatrix out(order.size(), cols_);
    for (Index k = 0; k < order.size(); ++k) {
        if (order[k] >= rows_) throw InvalidArgument("selectRows: row index out of range");
        const auto r = row(order[k]);
        out.colIndex_.insert(out.colIndex_.end(), r.begin(), r.end());
        out.rowStart_[k + 1] = out.colIndex_.size();
    }
    return out;
}

// ---------------------------------------------------------------------------
// MatrixMarket
// ---------------------------------------------------------------------------

BinaryMatrix readMatrixMarket(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw IoError("MatrixMarket: empty input");
    std::istringstream banner(line);
    std::string tag, object, format, field, symmetry;
    banner >> tag >> object >> format >> field >> symmetry;
    auto lower = [](std::string s) {
        std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
        return s;
    };
    if (tag != "%%MatrixMarket" || lower(object) != "matrix" || lower(format) != "coordinate")
        throw IoError("MatrixMarket: expected a '%%MatrixMarket matrix coordinate' banner");
    field = lower(field);
    if (field != "pattern" && field != "integer" && field != "real")
        throw IoError("MatrixMarket: unsupported field '" + field + "'");
    if (lower(symmetry) != "general") throw IoError("MatrixMarket: only general matrices are supported");
    const bool pattern = field == "pattern";

    while (std::getline(in, line)) {
        const auto t = trim(line);
        if (!t.empty() && t.front() != '%') {
            line = t;
            break;
        }
        line.clear();
    }
    if (line.empty()) throw IoError("MatrixMarket: missing size line");
    std::istringstream sizes(line);
    long long rows = -1, cols = -1, nnz = -1;
    if (!(sizes >> rows >> cols >> nnz) || rows < 0 || cols < 0 || nnz < 0)
        throw IoError("MatrixMarket: malformed size line");

    std::vector<std::pair<BinaryMatrix::Index, BinaryMatrix::Index>> entries;
    entries.reserve(static_cast<std::size_t>(nnz));
    long long seen = 0;
    while (seen < nnz && std::getline(in, line)) {
        const auto t = trim(line);
        if (t.empty() || t.front() == '%') continue;
        std::istringstream entry(t);
        long long i = 0, m = 0;
        if (!(entry >> i >> m)) throw IoError("MatrixMarket: malformed entry '" + t + "'");
        int value = 1;
        if (!pattern) {
            std::string token;
            if (!(entry >> token)) throw IoError("MatrixMarket: entry without value");
            value = parseBinaryValue(token);
            if (value < 0) throw IoError("MatrixMarket: non-binary value '" + token + "'");
        }
        if (i < 1 || m < 1 || i > rows || m > cols)
            throw IoError("MatrixMarket: entry (" + std::to_string(i) + ", " + std::to_string(m) +
                          ") out of range");
        ++seen;
        if (value == 1)
            entries.emplace_back(static_cast<BinaryMatrix::Index>(i - 1),
                                 static_cast<BinaryMatrix::Index>(m - 1));
    }
    if (seen != nnz) throw IoError("MatrixMarket: fewer entries than declared");
    try {
        return BinaryMatrix::fromEntries(static_cast<BinaryMatrix::Index>(rows),
                                         static_cast<BinaryMatrix::Index>(cols), std::move(entries));
    } catch (const InvalidArgument& e) {
        throw IoError(std::string("MatrixMarket: ") + e.what());
    }
}

BinaryMatrix readMatrixMarket(const std::filesystem::path& path) {
    auto in = openForRead(path);
    return readMatrixMarket(in);
}

void writeMatrixMarket(std::ostream& out, const BinaryMatrix& matrix) {
    out << "%%MatrixMarket matrix coordinate pattern general\n";
    out << matrix.rows() << ' ' << matrix.cols() << ' ' << matrix.nonZeros() << '\n';
    for (BinaryMatrix::Index i = 0; i < matrix.rows(); ++i)
        for (const auto m : matrix.row(i)) out << (i + 1) << ' ' << (m + 1) << '\n';
}

void writeMatrixMarket(const std::filesystem::path& path, const BinaryMatrix& matrix) {
    auto out = openForWrite(path);
    writeMatrixMarket(out, matrix);
    if (!out) throw IoError("failed writing " + path.string());
}

// ---------------------------------------------------------------------------
// Dense CSV
// ---------------------------------------------------------------------------

CsvMatrix readDenseCsv(std::istream& in) {
    CsvMatrix result;
    std::vector<std::pair<BinaryMatrix::Index, BinaryMatrix::Index>> entries;
    std::string line;
    std::size_t cols = 0;
    std::size_t rows = 0;
    bool first = true;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        const auto fields = splitCsvLine(line);
        if (first) {
            first = false;
            cols = fields.size();
            const bool header = std::any_of(fields.begin(), fields.end(),
                                            [](const std::string& f) { return parseBinaryValue(f) < 0; });
            if (header) {
                result.header = fields;
                continue;
            }
        }
        if (fields.size() != cols)
            throw IoError("CSV: row " + std::to_string(rows + 1) + " has " + std::to_string(fields.size()) +
                          " fields, expected " + std::to_string(cols));
        for (std::size_t m = 0; m < fields.size(); ++m) {
            const int v = parseBinaryValue(fields[m]);
            if (v < 0) throw IoError("CSV: non-binary value '" + fields[m] + "'");
            if (v == 1) entries.emplace_back(rows, m);
        }
        ++rows;
    }
    result.matrix = BinaryMatrix::fromEntries(rows, cols, std::move(entries));
    return result;
}

CsvMatrix readDenseCsv(const std::filesystem::path& path) {
    auto in = openForRead(path);
    return readDenseCsv(in);
}

void writeDenseCsv(std::ostream& out, const BinaryMatrix& matrix, const std::vector<std::string>& header) {
    if (!header.empty()) {
        if (header.size() != matrix.cols()) throw InvalidArgument("CSV header width does not match matrix");
        for (std::size_t m = 0; m < header.size(); ++m) out << (m ? "," : "") << header[m];
        out << '\n';
    }
    std::string line;
    for (BinaryMatrix::Index i = 0; i < matrix.rows(); ++i) {
        line.assign(matrix.cols() == 0 ? 0 : 2 * matrix.cols() - 1, ',');
        for (std::size_t m = 0; m < matrix.cols(); ++m) line[2 * m] = '0';
        for (const auto m : matrix.row(i)) line[2 * m] = '1';
        out << line << '\n';
    }
}

void writeDenseCsv(const std::filesystem::path& path, const BinaryMatrix& matrix,
                   const std::vector<std::string>& header) {
    auto out = openForWrite(path);
    writeDenseCsv(out, matrix, header);
    if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace pmltm
