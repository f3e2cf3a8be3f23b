#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pmltm/binary_matrix.hpp"
#include "pmltm/model.hpp"
#include "pmltm/vem.hpp"

namespace pmltm::selection {

struct ShapeRate {
    double shape;
    double rate;
};

struct GridSpec {
    std::vector<int> components;
    std::vector<int> dimensions;
    std::vector<ShapeRate> shapeRates;
    vem::FitConfig perCellConfig;
    int quadNodes = 21;

    void validate() const;
};

struct GridCell {
    int components = 0;
    int dimensions = 0;
    double shape = 0.0;
    double rate = 0.0;
    std::uint64_t seed = 0;
    bool ok = false;               ///< fit and scoring both succeeded
    std::string error;
    std::optional<double> bic;
    std::optional<double> quadLogLik;
    long effectiveDF = 0;
    bool converged = false;
    int iterations = 0;
    double finalBound = 0.0;
};

struct GridResult {
    std::vector<GridCell> cells;
    std::size_t best = 0;          ///< index into cells
    FitResult bestFit;
};

/// Fits, then scores with Gauss-Hermite log-likelihood and BIC.
FitResult fitAndScore(const BinaryMatrix& data, const vem::FitConfig& config, int quadNodes = 21);

/// Seed for grid cell `index` derived from the master seed.
std::uint64_t cellSeed(std::uint64_t master, std::size_t index);

/// One fit per (G, D, s, r) cell, ranked by BIC. Throws SelectionFailure
/// when no cell produces a finite BIC.
GridResult gridSearch(const BinaryMatrix& data, const GridSpec& spec);

/// Index of the preferred cell: minimum BIC, then smaller effective df,
/// smaller G, smaller D. Cells without a finite BIC are skipped.
std::optional<std::size_t> bestCell(std::span<const GridCell> cells);

void writeGridCsv(std::ostream& out, const GridResult& result);
void writeGridCsv(const std::filesystem::path& path, const GridResult& result);
std::string gridJson(const GridResult& result, const std::string& bestModelPath);

/// Pair-counting adjusted Rand index. Labels may be arbitrary integers.
double adjustedRandIndex(std::span<const int> labelsA, std::span<const int> labelsB);

/// Same, for string labels (e.g. read from files).
double adjustedRandIndex(std::span<const std::string> labelsA, std::span<const std::string> labelsB);

}  // namespace pmltm::selection
