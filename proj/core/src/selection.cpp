#include "pmltm/selection.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <tuple>

#include <json.hpp>

#include "pmltm/error.hpp"
#include "pmltm/parallel.hpp"
#include "pmltm/quadrature.hpp"
#include "pmltm/serialization.hpp"

namespace pmltm::selection {
namespace {

__extension__ typedef __int128 Wide;

template <typename Label>
double adjustedRandIndexImpl(std::span<const Label> a, std::span<const Label> b) {
    if (a.size() != b.size())
        throw InvalidArgument("label vectors differ in length (" + std::to_string(a.size()) + " vs " +
                              std::to_string(b.size()) + ")");
    if (a.size() < 2) throw InvalidArgument("adjusted Rand index needs at least two observations");

    std::map<Label, std::size_t> rowId, colId;
    for (const auto& x : a) rowId.emplace(x, rowId.size());
    for (const auto& x : b) colId.emplace(x, colId.size());
    std::vector<std::uint64_t> table(rowId.size() * colId.size(), 0);
    std::vector<std::uint64_t> rowSum(rowId.size(), 0), colSum(colId.size(), 0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        const auto r = rowId[a[i]];
        const auto c = colId[b[i]];
        ++table[r * colId.size() + c];
        ++rowSum[r];
        ++colSum[c];
    }
    // Pair counts are integers; keep them exact and divide once at the end.
    auto pairs = [](std::uint64_t k) { return static_cast<Wide>(k) * static_cast<Wide>(k - (k > 0)) / 2; };
    Wide index = 0, sumRows = 0, sumCols = 0;
    for (const auto v : table) index += pairs(v);
    for (const auto v : rowSum) sumRows += pairs(v);
    for (const auto v : colSum) sumCols += pairs(v);
    const Wide total = pairs(a.size());
    // ARI = (index - E) / (max - E) with E = rows*cols/total, max = (rows+cols)/2,
    // scaled by 2*total.
    const Wide num = 2 * (index * total - sumRows * sumCols);
    const Wide den = (sumRows + sumCols) * total - 2 * sumRows * sumCols;
    // Both partitions trivial in the same way (one block, or all singletons).
    if (den == 0) return 1.0;
    return static_cast<double>(static_cast<long double>(num) / static_cast<long double>(den));
}

nlohmann::json cellJson(const GridCell& c) {
    nlohmann::json j;
    j["components"] = c.components;
    j["dimensions"] = c.dimensions;
    j["shape"] = c.shape;
    j["rate"] = c.rate;
    j["seed"] = c.seed;
    j["ok"] = c.ok;
    j["converged"] = c.converged;
    j["iterations"] = c.iterations;
    j["effective_df"] = c.effectiveDF;
    j["bic"] = c.bic ? nlohmann::json(*c.bic) : nlohmann::json(nullptr);
    j["quad_loglik"] = c.quadLogLik ? nlohmann::json(*c.quadLogLik) : nlohmann::json(nullptr);
    j["final_bound"] = c.ok ? nlohmann::json(c.finalBound) : nlohmann::json(nullptr);
    if (!c.error.empty()) j["error"] = c.error;
    return j;
}

}  // namespace

void GridSpec::validate() const {
    if (components.empty() || dimensions.empty() || shapeRates.empty())
        throw InvalidArgument("grid lists must be non-empty");
    for (const int g : components)
        if (g < 1) throw InvalidArgument("grid component counts must be >= 1");
    for (const int d : dimensions)
        if (d < 1) throw InvalidArgument("grid dimensions must be >= 1");
    for (const auto& sr : shapeRates)
        if (!(sr.shape > 0.0) || !(sr.rate > 0.0)) throw InvalidArgument("grid (s, r) pairs must be positive");
    if (quadNodes < 1) throw InvalidArgument("quadrature nodes must be >= 1");
    perCellConfig.validate();
}

FitResult fitAndScore(const BinaryMatrix& data, const vem::FitConfig& config, int quadNodes) {
    FitResult result = vem::fit(data, config);
    const quadrature::QuadratureRule rule(quadNodes, config.hyper.dimensions);
    quadrature::ghBIC(data, result, rule, config.hyper.zeroTol, config.threads);
    return result;
}

std::uint64_t cellSeed(std::uint64_t master, std::size_t index) {
    return vem::restartSeed(master ^ 0xC311A5EEDULL, static_cast<std::uint64_t>(index) + 1000003ULL);
}

std::optional<std::size_t> bestCell(std::span<const GridCell> cells) {
    std::optional<std::size_t> best;
    for (std::size_t k = 0; k < cells.size(); ++k) {
        const auto& c = cells[k];
        if (!c.ok || !c.bic || !std::isfinite(*c.bic)) continue;
        if (!best) {
            best = k;
            continue;
        }
        const auto& b = cells[*best];
        const auto key = std::make_tuple(*c.bic, c.effectiveDF, c.components, c.dimensions);
        const auto bestKey = std::make_tuple(*b.bic, b.effectiveDF, b.components, b.dimensions);
        if (key < bestKey) best = k;
    }
    return best;
}

GridResult gridSearch(const BinaryMatrix& data, const GridSpec& spec) {
    spec.validate();
    GridResult result;
    for (const int G : spec.components)
        for (const int D : spec.dimensions)
            for (const auto& sr : spec.shapeRates) {
                GridCell c;
                c.components = G;
                c.dimensions = D;
                c.shape = sr.shape;
                c.rate = sr.rate;
                c.seed = cellSeed(spec.perCellConfig.hyper.seed, result.cells.size());
                result.cells.push_back(c);
            }

    std::vector<std::optional<FitResult>> fits(result.cells.size());
    parallelFor(result.cells.size(), spec.perCellConfig.threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t k = begin; k < end; ++k) {
            auto& c = result.cells[k];
            auto config = spec.perCellConfig;
            config.hyper.components = c.components;
            config.hyper.dimensions = c.dimensions;
            config.hyper.shape = c.shape;
            config.hyper.rate = c.rate;
            config.hyper.seed = c.seed;
            config.threads = 1;
            try {
                FitResult f = fitAndScore(data, config, spec.quadNodes);
                c.ok = true;
                c.bic = f.bic;
                c.quadLogLik = f.quadLogLik;
                c.effectiveDF = f.effectiveDF;
                c.converged = f.converged;
                c.iterations = f.iterations;
                c.finalBound = f.finalBound();
                f.state.xi.clear();
                f.state.mu.clear();
                f.state.sigma.clear();
                fits[k] = std::move(f);
            } catch (const Error& e) {
                c.ok = false;
                c.error = e.what();
            }
        }
    });

    const auto best = bestCell(result.cells);
    if (!best) {
        std::string msg = "every grid cell failed";
        for (const auto& c : result.cells)
            if (!c.error.empty()) {
                msg += "; first error: " + c.error;
                break;
            }
        throw SelectionFailure(msg);
    }
    result.best = *best;
    result.bestFit = std::move(*fits[*best]);
    return result;
}

void writeGridCsv(std::ostream& out, const GridResult& result) {
    out << "components,dimensions,shape,rate,bic,quad_loglik,effective_df,converged,iterations,ok,best\n";
    for (std::size_t k = 0; k < result.cells.size(); ++k) {
        const auto& c = result.cells[k];
        out << c.components << ',' << c.dimensions << ',' << formatDouble(c.shape) << ',' << formatDouble(c.rate)
            << ',' << (c.bic ? formatDouble(*c.bic) : std::string("NA")) << ','
            << (c.quadLogLik ? formatDouble(*c.quadLogLik) : std::string("NA")) << ',' << c.effectiveDF << ','
            << (c.converged ? 1 : 0) << ',' << c.iterations << ',' << (c.ok ? 1 : 0) << ','
            << (k == result.best ? 1 : 0) << '\n';
    }
}

void writeGridCsv(const std::filesystem::path& path, const GridResult& result) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    writeGridCsv(out, result);
}

std::string gridJson(const GridResult& result, const std::string& bestModelPath) {
    nlohmann::json j;
    j["format"] = "pmltm-grid";
    j["version"] = 1;
    j["cells"] = nlohmann::json::array();
    for (const auto& c : result.cells) j["cells"].push_back(cellJson(c));
    j["best"] = cellJson(result.cells.at(result.best));
    j["best"]["index"] = result.best;
    j["best_model"] = bestModelPath;
    return j.dump(2) + "\n";
}

double adjustedRandIndex(std::span<const int> labelsA, std::span<const int> labelsB) {
    return adjustedRandIndexImpl<int>(labelsA, labelsB);
}

double adjustedRandIndex(std::span<const std::string> labelsA, std::span<const std::string> labelsB) {
    return adjustedRandIndexImpl<std::string>(labelsA, labelsB);
}

}  // namespace pmltm::selection
