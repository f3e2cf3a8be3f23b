#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "manifest.hpp"
#include "pmltm/binary_matrix.hpp"
#include "pmltm/cli.hpp"
#include "pmltm/error.hpp"
#include "pmltm/hash.hpp"
#include "pmltm/parallel.hpp"
#include "pmltm/quadrature.hpp"
#include "pmltm/selection.hpp"
#include "pmltm/serialization.hpp"
#include "pmltm/simulation.hpp"
#include "pmltm/text.hpp"
#include "pmltm/vem.hpp"

namespace pmltm::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Flag groups
// ---------------------------------------------------------------------------

struct FitFlags {
    int components = 1;
    int dimensions = 1;
    double shape = 1.0;
    double rate = 0.5;
    std::uint64_t seed = 1;
    int maxIter = 500;
    double tol = 0.01;
    int restarts = 5;
    int threads = 1;
    int quadNodes = 21;
    double zeroTol = 1e-4;
    double xiMax = 20.0;
    std::string init = "random";
    bool noPenalty = false;
};

void addRunFlags(CLI::App* sub, FitFlags& f) {
    sub->add_option("--seed", f.seed, "Master random seed")->capture_default_str();
    sub->add_option("--max-iter", f.maxIter, "Maximum VEM cycles")->capture_default_str();
    sub->add_option("--tol", f.tol, "Aitken stopping tolerance")->capture_default_str();
    sub->add_option("--restarts", f.restarts, "Random restarts")->capture_default_str();
    sub->add_option("--threads", f.threads, "Worker threads (0 = all cores)")->capture_default_str();
    sub->add_option("--quad-nodes", f.quadNodes, "Gauss-Hermite nodes per dimension")->capture_default_str();
    sub->add_option("--zero-tol", f.zeroTol, "Loadings below this are set to 0")->capture_default_str();
    sub->add_option("--xi-max", f.xiMax, "Upper clamp of the bound expansion points")->capture_default_str();
    sub->add_option("--init", f.init, "Initialisation: random or kmeans")
        ->check(CLI::IsMember({"random", "kmeans"}))
        ->capture_default_str();
}

void addModelFlags(CLI::App* sub, FitFlags& f) {
    sub->add_option("--components", f.components, "Mixture components G")->capture_default_str();
    sub->add_option("--dimensions", f.dimensions, "Latent dimensions D")->capture_default_str();
    sub->add_option("--shape", f.shape, "Gamma shape s")->capture_default_str();
    sub->add_option("--rate", f.rate, "Gamma rate r")->capture_default_str();
    sub->add_flag("--no-penalty", f.noPenalty, "Switch the slope penalty off");
}

int resolveThreads(int threads) {
    if (threads < 0) throw InvalidArgument("--threads must be >= 0");
    return threads == 0 ? hardwareThreads() : threads;
}

vem::FitConfig toConfig(const FitFlags& f) {
    vem::FitConfig c;
    c.hyper.components = f.components;
    c.hyper.dimensions = f.dimensions;
    c.hyper.shape = f.shape;
    c.hyper.rate = f.rate;
    c.hyper.seed = f.seed;
    c.hyper.maxIter = f.maxIter;
    c.hyper.aitkenTol = f.tol;
    c.hyper.restarts = f.restarts;
    c.hyper.zeroTol = f.zeroTol;
    c.hyper.xiMax = f.xiMax;
    c.initStrategy = f.init == "kmeans" ? vem::InitStrategy::KMeansSeeded : vem::InitStrategy::RandomResponsibilities;
    c.penalize = !f.noPenalty;
    c.threads = resolveThreads(f.threads);
    if (f.quadNodes < 1) throw InvalidArgument("--quad-nodes must be >= 1");
    return c;
}

json configJson(const vem::FitConfig& c, int quadNodes) {
    const auto& h = c.hyper;
    // Thread count is recorded but does not influence any output.
    return {{"components", h.components},
            {"dimensions", h.dimensions},
            {"shape", h.shape},
            {"rate", h.rate},
            {"seed", h.seed},
            {"max_iter", h.maxIter},
            {"tol", h.aitkenTol},
            {"restarts", h.restarts},
            {"zero_tol", h.zeroTol},
            {"xi_max", h.xiMax},
            {"init", c.initStrategy == vem::InitStrategy::KMeansSeeded ? "kmeans" : "random"},
            {"penalize", c.penalize},
            {"threads", c.threads},
            {"quad_nodes", quadNodes}};
}

std::vector<int> parseIntList(const std::string& text, const char* flag) {
    std::vector<int> out;
    auto number = [&](std::string_view s) {
        int v = 0;
        const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || p != s.data() + s.size())
            throw InvalidArgument(std::string(flag) + ": cannot parse '" + std::string(s) + "'");
        return v;
    };
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        const auto dash = item.find('-', 1);
        if (dash == std::string::npos) {
            out.push_back(number(item));
        } else {
            const int lo = number(std::string_view(item).substr(0, dash));
            const int hi = number(std::string_view(item).substr(dash + 1));
            if (hi < lo) throw InvalidArgument(std::string(flag) + ": empty range '" + item + "'");
            for (int v = lo; v <= hi; ++v) out.push_back(v);
        }
    }
    if (out.empty()) throw InvalidArgument(std::string(flag) + " must list at least one value");
    return out;
}

std::vector<selection::ShapeRate> parseShapeRates(const std::string& text) {
    if (text == "default") return simulation::defaultShapeRates();
    std::vector<selection::ShapeRate> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        const auto colon = item.find(':');
        if (colon == std::string::npos)
            throw InvalidArgument("--sr-grid entries are shape:rate pairs, got '" + item + "'");
        double s = 0.0, r = 0.0;
        const auto* b = item.data();
        const auto [p1, e1] = std::from_chars(b, b + colon, s);
        const auto [p2, e2] = std::from_chars(b + colon + 1, b + item.size(), r);
        if (e1 != std::errc() || e2 != std::errc() || p1 != b + colon || p2 != b + item.size())
            throw InvalidArgument("--sr-grid: cannot parse '" + item + "'");
        if (!(s > 0.0) || !(r > 0.0)) throw InvalidArgument("--sr-grid values must be positive");
        out.push_back({s, r});
    }
    if (out.empty()) throw InvalidArgument("--sr-grid must list at least one pair");
    return out;
}

std::string detectFormat(const fs::path& path, const std::string& requested) {
    if (!requested.empty()) return requested;
    return path.extension() == ".csv" ? "csv" : "mm";
}

BinaryMatrix readMatrix(const fs::path& path, const std::string& format) {
    if (format == "csv") return readDenseCsv(path).matrix;
    return readMatrixMarket(path);
}

std::vector<std::string> readLines(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string() + " for reading");
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

fs::path withSuffix(const fs::path& prefix, const std::string& suffix) { return fs::path(prefix.string() + suffix); }

void ensureParent(const fs::path& prefix) {
    const auto parent = prefix.parent_path();
    if (parent.empty()) return;
    std::error_code ec;
    fs::create_directories(parent, ec);
    if (ec) throw IoError("cannot create directory " + parent.string() + ": " + ec.message());
}

void writeFitOutputs(const fs::path& prefix, const FitResult& fit, const Hyperparameters& hyper,
                     const std::vector<std::string>& ids, RunManifest& manifest) {
    const auto model = withSuffix(prefix, ".model.json");
    const auto assignments = withSuffix(prefix, ".assignments.csv");
    const auto trace = withSuffix(prefix, ".trace.csv");
    writeModelJson(model, fit, hyper);
    writeAssignmentsCsv(assignments, fit, ids);
    writeTraceCsv(trace, fit);
    manifest.addOutput(model);
    manifest.addOutput(assignments);
    manifest.addOutput(trace);
}

int exitCodeFor(const std::exception& e) {
    if (dynamic_cast<const InvalidArgument*>(&e) || dynamic_cast<const IngestFailure*>(&e) ||
        dynamic_cast<const Unsupported*>(&e))
        return kValidation;
    if (dynamic_cast<const IoError*>(&e) || dynamic_cast<const fs::filesystem_error*>(&e)) return kIo;
    return kNumerical;
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

struct IngestOptions {
    std::string input;
    std::string outPrefix;
    std::string inputFormat = "auto";
    double threshold = 0.02;
    bool keepStopWords = false;
    int threads = 1;
};

void cmdIngest(const IngestOptions& o, RunManifest& manifest, std::ostream& out) {
    if (!(o.threshold >= 0.0 && o.threshold < 1.0)) throw InvalidArgument("--threshold must lie in [0, 1)");
    const int threads = resolveThreads(o.threads);
    std::string format = o.inputFormat;
    if (format == "auto") format = fs::path(o.input).extension() == ".csv" ? "csv" : "lines";
    manifest.config() = {{"input_format", format},
                         {"threshold", o.threshold},
                         {"drop_stop_words", !o.keepStopWords},
                         {"threads", threads}};

    std::ifstream in(o.input, std::ios::binary);
    if (!in) throw IoError("cannot open " + o.input + " for reading");
    manifest.addInput(o.input);
    const auto corpus = format == "csv" ? text::readCsvCorpus(in) : text::readLinesCorpus(in);
    text::PreprocessOptions pre;
    pre.dropStopWords = !o.keepStopWords;
    const auto artifact = text::buildTermMatrix(corpus, o.threshold, threads, pre);

    ensureParent(o.outPrefix);
    const auto paths = text::artifactPaths(o.outPrefix);
    text::writeArtifact(artifact, paths);
    for (const auto& p : {paths.matrix, paths.vocabulary, paths.frequencies, paths.docIds, paths.metadata})
        manifest.addOutput(p);
    out << "documents " << artifact.matrix.rows() << ", terms " << artifact.matrix.cols() << ", nonzeros "
        << artifact.matrix.nonZeros() << '\n';
}

struct FitOptions {
    std::string matrix;
    std::string outPrefix;
    std::string format;
    std::string ids;
    FitFlags flags;
};

void cmdFit(const FitOptions& o, RunManifest& manifest, std::ostream& out, std::ostream& err) {
    const auto config = toConfig(o.flags);
    config.validate();
    const auto format = detectFormat(o.matrix, o.format);
    manifest.config() = configJson(config, o.flags.quadNodes);
    manifest.config()["format"] = format;
    manifest.seeds()["master"] = config.hyper.seed;

    manifest.addInput(o.matrix);
    const auto data = readMatrix(o.matrix, format);
    std::vector<std::string> ids;
    if (!o.ids.empty()) {
        manifest.addInput(o.ids);
        ids = readLines(o.ids);
        while (!ids.empty() && ids.back().empty()) ids.pop_back();
        if (ids.size() != data.rows())
            throw InvalidArgument("--ids lists " + std::to_string(ids.size()) + " ids for " +
                                  std::to_string(data.rows()) + " rows");
    }
    ensureParent(o.outPrefix);
    FitResult fit;
    try {
        fit = vem::fit(data, config);
    } catch (const Error& e) {
        const auto diag = withSuffix(o.outPrefix, ".diagnostics.txt");
        std::ofstream d(diag);
        d << e.what() << '\n';
        manifest.addOutput(diag);
        err << "diagnostics written to " << diag.string() << '\n';
        throw;
    }
    manifest.seeds()["restart"] = fit.restart;
    manifest.seeds()["restart_seed"] = fit.seed;
    if (config.hyper.dimensions <= quadrature::QuadratureRule::kMaxTensorDimension) {
        const quadrature::QuadratureRule rule(o.flags.quadNodes, config.hyper.dimensions);
        quadrature::ghBIC(data, fit, rule, config.hyper.zeroTol, config.threads);
    } else {
        fit.warnings.push_back("BIC not computed: quadrature supports D <= 4");
    }
    writeFitOutputs(o.outPrefix, fit, config.hyper, ids, manifest);
    out << "converged " << (fit.converged ? "true" : "false") << ", iterations " << fit.iterations << ", bound "
        << formatDouble(fit.finalBound());
    if (fit.bic) out << ", bic " << formatDouble(*fit.bic);
    out << '\n';
    for (const auto& w : fit.warnings) err << "warning: " << w << '\n';
}

struct SelectOptions {
    std::string matrix;
    std::string outPrefix;
    std::string format;
    std::string components = "1-5";
    std::string dimensions = "1-4";
    std::string srGrid = "1:0.5";
    FitFlags flags;
};

void cmdSelect(const SelectOptions& o, RunManifest& manifest, std::ostream& out) {
    selection::GridSpec spec;
    spec.components = parseIntList(o.components, "--components");
    spec.dimensions = parseIntList(o.dimensions, "--dimensions");
    spec.shapeRates = parseShapeRates(o.srGrid);
    spec.perCellConfig = toConfig(o.flags);
    spec.quadNodes = o.flags.quadNodes;
    spec.validate();
    const auto format = detectFormat(o.matrix, o.format);

    auto cfg = configJson(spec.perCellConfig, spec.quadNodes);
    cfg.erase("components");
    cfg.erase("dimensions");
    cfg.erase("shape");
    cfg.erase("rate");
    cfg["grid_components"] = spec.components;
    cfg["grid_dimensions"] = spec.dimensions;
    json sr = json::array();
    for (const auto& p : spec.shapeRates) sr.push_back({p.shape, p.rate});
    cfg["grid_shape_rate"] = sr;
    cfg["format"] = format;
    manifest.config() = cfg;
    manifest.seeds()["master"] = spec.perCellConfig.hyper.seed;

    manifest.addInput(o.matrix);
    const auto data = readMatrix(o.matrix, format);
    ensureParent(o.outPrefix);
    const auto result = selection::gridSearch(data, spec);
    json cellSeeds = json::array();
    for (const auto& c : result.cells) cellSeeds.push_back(c.seed);
    manifest.seeds()["cells"] = cellSeeds;

    const auto grid = withSuffix(o.outPrefix, ".grid.csv");
    const auto gridJsonPath = withSuffix(o.outPrefix, ".grid.json");
    const auto bestPrefix = withSuffix(o.outPrefix, ".best");
    selection::writeGridCsv(grid, result);
    manifest.addOutput(grid);

    const auto& best = result.cells[result.best];
    Hyperparameters hyper = spec.perCellConfig.hyper;
    hyper.components = best.components;
    hyper.dimensions = best.dimensions;
    hyper.shape = best.shape;
    hyper.rate = best.rate;
    hyper.seed = best.seed;
    writeFitOutputs(bestPrefix, result.bestFit, hyper, {}, manifest);
    {
        std::ofstream j(gridJsonPath, std::ios::binary | std::ios::trunc);
        if (!j) throw IoError("cannot open " + gridJsonPath.string() + " for writing");
        j << selection::gridJson(result, withSuffix(bestPrefix, ".model.json").filename().string());
    }
    manifest.addOutput(gridJsonPath);
    out << "best G " << best.components << ", D " << best.dimensions << ", s " << formatDouble(best.shape) << ", r "
        << formatDouble(best.rate) << ", bic " << formatDouble(*best.bic) << '\n';
}

struct SimulateOptions {
    bool table1 = false;
    std::size_t n = 500;
    std::string outPrefix;
    std::string format = "mm";
    int replicate = 0;
    std::string srGrid = "default";
    bool includeUnpenalized = false;
    FitFlags flags;
};

void cmdSimulate(const SimulateOptions& o, RunManifest& manifest, std::ostream& out) {
    if (!o.table1) throw InvalidArgument("simulate needs a design; only --table1 is available");
    if (o.n < 1) throw InvalidArgument("--n must be >= 1");
    if (o.replicate < 0) throw InvalidArgument("--replicate must be >= 0");
    auto spec = simulation::SimulationSpec::table1(o.n, o.flags.seed);
    spec.validate();
    simulation::ReplicationConfig rep;
    if (o.replicate > 0) {
        rep.replicates = o.replicate;
        rep.shapeRates = parseShapeRates(o.srGrid);
        rep.includeUnpenalized = o.includeUnpenalized;
        rep.fitConfig = toConfig(o.flags);
        rep.fitConfig.hyper.components = spec.components();
        rep.fitConfig.hyper.dimensions = spec.dimensions();
        rep.fitConfig.validate();
        rep.quadNodes = o.flags.quadNodes;
        rep.threads = rep.fitConfig.threads;
        manifest.config() = configJson(rep.fitConfig, rep.quadNodes);
        json sr = json::array();
        for (const auto& p : rep.shapeRates) sr.push_back({p.shape, p.rate});
        manifest.config()["shape_rate"] = sr;
        manifest.config()["replicates"] = rep.replicates;
        manifest.config()["include_unpenalized"] = rep.includeUnpenalized;
    }
    manifest.config()["design"] = "table1";
    manifest.config()["n"] = o.n;
    manifest.config()["format"] = o.format;
    manifest.seeds()["master"] = o.flags.seed;

    ensureParent(o.outPrefix);
    const auto ds = simulation::generateDataset(spec);
    const auto matrix = withSuffix(o.outPrefix, o.format == "csv" ? ".csv" : ".mtx");
    if (o.format == "csv") writeDenseCsv(matrix, ds.data);
    else writeMatrixMarket(matrix, ds.data);
    const auto labels = withSuffix(o.outPrefix, ".labels.txt");
    writeLabels(labels, ds.labels);
    manifest.addOutput(matrix);
    manifest.addOutput(labels);
    out << "wrote " << ds.data.rows() << " x " << ds.data.cols() << " matrix\n";

    if (o.replicate > 0) {
        const auto report = simulation::replicationStudy(spec, rep);
        const auto csv = withSuffix(o.outPrefix, ".replication.csv");
        simulation::writeReplicationCsv(csv, report);
        manifest.addOutput(csv);
        for (const auto& r : report.rows)
            out << r.label << ": BIC " << formatDouble(r.meanBic) << " (" << formatDouble(r.seBic) << "), ARI "
                << formatDouble(r.meanAri) << " (" << formatDouble(r.seAri) << "), zero recovery "
                << formatDouble(r.zeroRecovery) << ", failures " << r.failures << '\n';
    }
}

void cmdEvaluate(const std::string& a, const std::string& b, RunManifest& manifest, std::ostream& out) {
    manifest.addInput(a);
    manifest.addInput(b);
    const auto la = readLabels(a);
    const auto lb = readLabels(b);
    const double ari = selection::adjustedRandIndex(la, lb);
    manifest.config()["ari"] = ari;
    out << formatDouble(ari) << '\n';
}

void cmdInspect(const std::string& path, RunManifest& manifest, std::ostream& out) {
    manifest.addInput(path);
    const auto model = readModelJson(path);
    const auto& p = model.params;
    out << "G " << p.components() << ", D " << p.dimensions() << ", M " << p.items() << ", s "
        << formatDouble(model.hyper.shape) << ", r " << formatDouble(model.hyper.rate) << ", converged "
        << (model.converged ? "true" : "false") << ", iterations " << model.iterations << '\n';
    for (int g = 0; g < p.components(); ++g) {
        out << "component " << (g + 1) << " eta " << formatDouble(p.eta[g]) << '\n';
        const auto std = standardizedLoadings(p.W[static_cast<std::size_t>(g)]);
        out << "  item median_prob";
        for (int d = 0; d < p.dimensions(); ++d) out << " loading" << (d + 1);
        out << '\n';
        for (int m = 0; m < p.items(); ++m) {
            out << "  " << (m + 1) << ' ' << formatDouble(medianResponseProbability(p.alpha(g, m)));
            for (int d = 0; d < p.dimensions(); ++d) out << ' ' << formatDouble(std(m, d));
            out << '\n';
        }
    }
}

int cmdRerun(const std::string& path, bool verify, std::ostream& out, std::ostream& err) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path + " for reading");
    json m;
    try {
        m = json::parse(in);
    } catch (const json::parse_error& e) {
        throw IoError(std::string("manifest is not valid JSON: ") + e.what());
    }
    if (m.value("format", std::string()) != kManifestFormat) throw IoError(path + " is not a run manifest");
    const auto args = m.at("args").get<std::vector<std::string>>();
    if (!args.empty() && args.front() == "rerun") throw InvalidArgument("refusing to rerun a rerun manifest");
    const fs::path cwd = m.at("cwd").get<std::string>();
    std::vector<std::pair<std::string, json>> recorded;
    for (const auto& o : m.at("outputs")) recorded.emplace_back(o.at("path").get<std::string>(), o.at("sha256"));

    const auto here = fs::current_path();
    fs::current_path(cwd);
    int code = kOk;
    try {
        code = run(args, out, err);
    } catch (...) {
        fs::current_path(here);
        throw;
    }
    if (!verify) {
        fs::current_path(here);
        return code;
    }
    int mismatches = 0;
    for (const auto& [p, hash] : recorded) {
        std::error_code ec;
        const bool exists = fs::exists(p, ec);
        const json now = exists ? json(sha256File(p)) : json(nullptr);
        if (now != hash) {
            ++mismatches;
            out << "mismatch " << p << '\n';
        }
    }
    fs::current_path(here);
    out << (mismatches == 0 ? "all outputs identical\n" : "outputs differ\n");
    return code != kOk ? code : (mismatches == 0 ? kOk : kMismatch);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Penalized mixtures of latent trait models for binary data"};
    app.name("pmltm");
    app.require_subcommand(1);
    app.set_version_flag("--version", PMLTM_VERSION);

    IngestOptions ingest;
    auto* ingestCmd = app.add_subcommand("ingest", "Text corpus to binary document-term matrix");
    ingestCmd->add_option("input", ingest.input, "Corpus: one document per line, or CSV (id,text)")->required();
    ingestCmd->add_option("--out-prefix", ingest.outPrefix, "Output prefix")->required();
    ingestCmd->add_option("--input-format", ingest.inputFormat, "auto, lines or csv")
        ->check(CLI::IsMember({"auto", "lines", "csv"}))
        ->capture_default_str();
    ingestCmd->add_option("--threshold", ingest.threshold, "Minimum document-frequency fraction")
        ->capture_default_str();
    ingestCmd->add_flag("--keep-stopwords", ingest.keepStopWords, "Do not remove stop words");
    ingestCmd->add_option("--threads", ingest.threads, "Worker threads (0 = all cores)")->capture_default_str();

    FitOptions fitOpts;
    auto* fitCmd = app.add_subcommand("fit", "Fit one penalized mixture of latent trait models");
    fitCmd->add_option("matrix", fitOpts.matrix, "Binary matrix (MatrixMarket or dense CSV)")->required();
    fitCmd->add_option("--out-prefix", fitOpts.outPrefix, "Output prefix")->required();
    fitCmd->add_option("--format", fitOpts.format, "Input format: mm or csv (default from extension)")
        ->check(CLI::IsMember({"mm", "csv"}));
    fitCmd->add_option("--ids", fitOpts.ids, "Row identifiers, one per line");
    addModelFlags(fitCmd, fitOpts.flags);
    addRunFlags(fitCmd, fitOpts.flags);

    SelectOptions sel;
    auto* selectCmd = app.add_subcommand("select", "BIC grid search over G, D and (s, r)");
    selectCmd->add_option("matrix", sel.matrix, "Binary matrix (MatrixMarket or dense CSV)")->required();
    selectCmd->add_option("--out-prefix", sel.outPrefix, "Output prefix")->required();
    selectCmd->add_option("--format", sel.format, "Input format: mm or csv (default from extension)")
        ->check(CLI::IsMember({"mm", "csv"}));
    selectCmd->add_option("--components", sel.components, "Component counts, e.g. 1-5 or 1,2,4")
        ->capture_default_str();
    selectCmd->add_option("--dimensions", sel.dimensions, "Latent dimensions, e.g. 1-3")->capture_default_str();
    selectCmd->add_option("--sr-grid", sel.srGrid, "shape:rate pairs, or 'default'")->capture_default_str();
    addRunFlags(selectCmd, sel.flags);

    SimulateOptions sim;
    auto* simCmd = app.add_subcommand("simulate", "Generate benchmark data and run replication studies");
    simCmd->add_flag("--table1", sim.table1, "Two-component, ten-item benchmark design");
    simCmd->add_option("--n", sim.n, "Observations per dataset")->capture_default_str();
    simCmd->add_option("--out-prefix", sim.outPrefix, "Output prefix")->required();
    simCmd->add_option("--format", sim.format, "Matrix output format: mm or csv")
        ->check(CLI::IsMember({"mm", "csv"}))
        ->capture_default_str();
    simCmd->add_option("--replicate", sim.replicate, "Replicates for the (s, r) comparison (0 = none)")
        ->capture_default_str();
    simCmd->add_option("--sr-grid", sim.srGrid, "shape:rate pairs, or 'default'")->capture_default_str();
    simCmd->add_flag("--include-unpenalized", sim.includeUnpenalized, "Add a penalty-free arm to the study");
    addRunFlags(simCmd, sim.flags);

    std::string labelsA, labelsB, evalManifest = "pmltm-evaluate.manifest.json";
    auto* evalCmd = app.add_subcommand("evaluate", "Adjusted Rand index between two label files");
    evalCmd->add_option("labels_a", labelsA, "First label file")->required();
    evalCmd->add_option("labels_b", labelsB, "Second label file")->required();
    evalCmd->add_option("--manifest", evalManifest, "Manifest path")->capture_default_str();

    std::string modelPath, inspectManifest = "pmltm-inspect.manifest.json";
    auto* inspectCmd = app.add_subcommand("inspect", "Summarise a fitted model");
    inspectCmd->add_option("model", modelPath, "Model JSON")->required();
    inspectCmd->add_option("--manifest", inspectManifest, "Manifest path")->capture_default_str();

    std::string rerunPath;
    bool verify = false;
    auto* rerunCmd = app.add_subcommand("rerun", "Repeat a run from its manifest");
    rerunCmd->add_option("manifest", rerunPath, "Manifest JSON")->required();
    rerunCmd->add_flag("--verify", verify, "Compare output hashes with the manifest");

    std::string manifestOverride;
    for (auto* sub : {ingestCmd, fitCmd, selectCmd, simCmd})
        sub->add_option("--manifest", manifestOverride, "Manifest path (default <out-prefix>.manifest.json)");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::CallForVersion&) {
        out << PMLTM_VERSION << '\n';
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kValidation;
    }

    if (rerunCmd->parsed()) {
        try {
            return cmdRerun(rerunPath, verify, out, err);
        } catch (const std::exception& e) {
            err << "error: " << e.what() << '\n';
            return exitCodeFor(e);
        }
    }

    const CLI::App* chosen = app.get_subcommands().front();
    RunManifest manifest(chosen->get_name(), args);
    fs::path manifestPath;
    if (chosen == ingestCmd) manifestPath = withSuffix(ingest.outPrefix, ".manifest.json");
    else if (chosen == fitCmd) manifestPath = withSuffix(fitOpts.outPrefix, ".manifest.json");
    else if (chosen == selectCmd) manifestPath = withSuffix(sel.outPrefix, ".manifest.json");
    else if (chosen == simCmd) manifestPath = withSuffix(sim.outPrefix, ".manifest.json");
    else if (chosen == evalCmd) manifestPath = evalManifest;
    else manifestPath = inspectManifest;
    if (!manifestOverride.empty()) manifestPath = manifestOverride;

    int code = kOk;
    std::string message;
    try {
        if (chosen == ingestCmd) cmdIngest(ingest, manifest, out);
        else if (chosen == fitCmd) cmdFit(fitOpts, manifest, out, err);
        else if (chosen == selectCmd) cmdSelect(sel, manifest, out);
        else if (chosen == simCmd) cmdSimulate(sim, manifest, out);
        else if (chosen == evalCmd) cmdEvaluate(labelsA, labelsB, manifest, out);
        else cmdInspect(modelPath, manifest, out);
    } catch (const std::exception& e) {
        message = e.what();
        code = exitCodeFor(e);
        err << "error: " << message << '\n';
    }
    if (!manifestPath.parent_path().empty()) {
        std::error_code ec;
        fs::create_directories(manifestPath.parent_path(), ec);
    }
    manifest.write(manifestPath, code, message);
    return code;
}

}  // namespace pmltm::cli
