#include <doctest.h>

#include <random>
#include <sstream>

#include "pmltm/binary_matrix.hpp"
#include "pmltm/error.hpp"
#include "support.hpp"

using pmltm::BinaryMatrix;

TEST_CASE("construction checks range and duplicates") {
    const auto m = BinaryMatrix::fromEntries(3, 4, {{2, 1}, {0, 3}, {0, 0}});
    CHECK(m.rows() == 3);
    CHECK(m.cols() == 4);
    CHECK(m.nonZeros() == 3);
    CHECK(m(0, 0));
    CHECK(m(0, 3));
    CHECK(m(2, 1));
    CHECK_FALSE(m(1, 1));
    CHECK(m.row(1).empty());
    CHECK(m.columnCounts() == std::vector<std::size_t>{1, 1, 0, 1});
    CHECK_THROWS_AS(BinaryMatrix::fromEntries(2, 2, {{2, 0}}), pmltm::InvalidArgument);
    CHECK_THROWS_AS(BinaryMatrix::fromEntries(2, 2, {{0, 1}, {0, 1}}), pmltm::InvalidArgument);
}

TEST_CASE("dense round trips") {
    Eigen::MatrixXd d(2, 3);
    d << 1, 0, 1, 0, 0, 1;
    const auto m = BinaryMatrix::fromDense(d);
    CHECK(m.toDense() == d);
    CHECK(m.toDenseBytes() == std::vector<std::uint8_t>{1, 0, 1, 0, 0, 1});
    d(0, 1) = 0.5;
    CHECK_THROWS_AS(BinaryMatrix::fromDense(d), pmltm::InvalidArgument);
}

TEST_CASE("MatrixMarket round trip") {
    std::mt19937_64 rng(4);
    const auto m = testing::randomBinary(17, 9, 0.3, rng);
    std::stringstream ss;
    pmltm::writeMatrixMarket(ss, m);
    CHECK(pmltm::readMatrixMarket(ss) == m);
}

TEST_CASE("MatrixMarket reader accepts integer and real fields with 0/1 values") {
    std::stringstream ss("%%MatrixMarket matrix coordinate integer general\n% comment\n2 2 3\n1 1 1\n2 2 1\n1 2 0\n");
    const auto m = pmltm::readMatrixMarket(ss);
    CHECK(m.nonZeros() == 2);
    CHECK(m(0, 0));
    CHECK(m(1, 1));
    std::stringstream real("%%MatrixMarket matrix coordinate real general\n1 2 1\n1 2 1.0\n");
    CHECK(pmltm::readMatrixMarket(real)(0, 1));
}

TEST_CASE("MatrixMarket reader rejects bad input") {
    std::stringstream bad1("%%MatrixMarket matrix array real general\n1 1\n1\n");
    CHECK_THROWS_AS(pmltm::readMatrixMarket(bad1), pmltm::IoError);
    std::stringstream bad2("%%MatrixMarket matrix coordinate integer general\n2 2 1\n1 1 2\n");
    CHECK_THROWS_AS(pmltm::readMatrixMarket(bad2), pmltm::IoError);
    std::stringstream bad3("%%MatrixMarket matrix coordinate pattern general\n2 2 2\n1 1\n");
    CHECK_THROWS_AS(pmltm::readMatrixMarket(bad3), pmltm::IoError);
    std::stringstream bad4("%%MatrixMarket matrix coordinate pattern general\n2 2 1\n3 1\n");
    CHECK_THROWS_AS(pmltm::readMatrixMarket(bad4), pmltm::IoError);
    std::stringstream bad5("%%MatrixMarket matrix coordinate pattern symmetric\n2 2 1\n1 1\n");
    CHECK_THROWS_AS(pmltm::readMatrixMarket(bad5), pmltm::IoError);
    CHECK_THROWS_AS(pmltm::readMatrixMarket(std::filesystem::path("/nonexistent/x.mtx")), pmltm::IoError);
}

TEST_CASE("dense CSV with and without header") {
    std::stringstream with("great,clean,\"host, friendly\"\n1,0,1\n0,0,1\n");
    const auto a = pmltm::readDenseCsv(with);
    CHECK(a.header == std::vector<std::string>{"great", "clean", "host, friendly"});
    CHECK(a.matrix.rows() == 2);
    CHECK(a.matrix(0, 2));
    std::stringstream without("1,0\n0,1\n");
    const auto b = pmltm::readDenseCsv(without);
    CHECK(b.header.empty());
    CHECK(b.matrix.rows() == 2);

    std::stringstream out;
    pmltm::writeDenseCsv(out, b.matrix, {"x", "y"});
    CHECK(out.str() == "x,y\n1,0\n0,1\n");

    std::stringstream ragged("1,0\n1\n");
    CHECK_THROWS_AS(pmltm::readDenseCsv(ragged), pmltm::IoError);
    std::stringstream nonbinary("1,0\n1,2\n");
    CHECK_THROWS_AS(pmltm::readDenseCsv(nonbinary), pmltm::IoError);
}

TEST_CASE("row selection") {
    const auto m = BinaryMatrix::fromEntries(3, 2, {{0, 0}, {2, 1}});
    const std::vector<std::size_t> order{2, 2, 0};
    const auto s = m.selectRows(order);
    CHECK(s.rows() == 3);
    CHECK(s(0, 1));
    CHECK(s(1, 1));
    CHECK(s(2, 0));
}
