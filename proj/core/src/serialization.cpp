#include "pmltm/serialization.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "pmltm/error.hpp"

namespace pmltm {
namespace {

using nlohmann::json;

json matrixJson(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrixFrom(const json& j, const char* what) {
    if (!j.is_array()) throw IoError(std::string("model file: '") + what + "' must be an array of rows");
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = rows == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(j.front().size());
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto& row = j[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
            throw IoError(std::string("model file: '") + what + "' has ragged rows");
        for (Eigen::Index c = 0; c < cols; ++c) {
            const auto& v = row[static_cast<std::size_t>(c)];
            if (!v.is_number()) throw IoError(std::string("model file: '") + what + "' holds a non-number");
            m(i, c) = v.get<double>();
        }
    }
    return m;
}

json optionalNumber(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::ofstream openForWrite(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    return out;
}

}  // namespace

std::string formatDouble(double value) {
    if (std::isnan(value)) return "NaN";
    if (std::isinf(value)) return value > 0 ? "Inf" : "-Inf";
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, ec == std::errc() ? ptr : buf);
}

std::string modelJson(const FitResult& fit, const Hyperparameters& hyper) {
    const auto& p = fit.params;
    json j;
    j["format"] = kModelFormat;
    j["version"] = kModelFormatVersion;
    j["hyperparameters"] = {{"components", hyper.components}, {"dimensions", hyper.dimensions},
                            {"shape", hyper.shape},           {"rate", hyper.rate},
                            {"max_iter", hyper.maxIter},      {"aitken_tol", hyper.aitkenTol},
                            {"xi_max", hyper.xiMax},          {"zero_tol", hyper.zeroTol},
                            {"restarts", hyper.restarts},     {"seed", hyper.seed}};
    j["fit"] = {{"converged", fit.converged},
                {"iterations", fit.iterations},
                {"final_bound", fit.trace.empty() ? json(nullptr) : json(fit.finalBound())},
                {"restart", fit.restart},
                {"seed", fit.seed},
                {"monotone_violations", fit.monotoneViolations},
                {"warnings", fit.warnings},
                {"quad_loglik", optionalNumber(fit.quadLogLik)},
                {"bic", optionalNumber(fit.bic)},
                {"effective_df", fit.effectiveDF}};

    json params;
    params["eta"] = json::array();
    for (Eigen::Index g = 0; g < p.eta.size(); ++g) params["eta"].push_back(p.eta[g]);
    params["alpha"] = matrixJson(p.alpha);
    params["W"] = json::array();
    for (const auto& w : p.W) params["W"].push_back(matrixJson(w));
    params["lambda"] = matrixJson(p.lambda);
    j["parameters"] = std::move(params);

    json summaries;
    summaries["standardized_loadings"] = json::array();
    for (const auto& w : p.W) summaries["standardized_loadings"].push_back(matrixJson(standardizedLoadings(w)));
    Eigen::MatrixXd median(p.alpha.rows(), p.alpha.cols());
    for (Eigen::Index g = 0; g < p.alpha.rows(); ++g)
        for (Eigen::Index m = 0; m < p.alpha.cols(); ++m) median(g, m) = medianResponseProbability(p.alpha(g, m));
    summaries["median_probability"] = matrixJson(median);
    j["summaries"] = std::move(summaries);
    return j.dump(2) + "\n";
}

void writeModelJson(const std::filesystem::path& path, const FitResult& fit, const Hyperparameters& hyper) {
    auto out = openForWrite(path);
    out << modelJson(fit, hyper);
    if (!out) throw IoError("failed writing " + path.string());
}

LoadedModel parseModelJson(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw IoError(std::string("model file is not valid JSON: ") + e.what());
    }
    if (!j.is_object() || j.value("format", std::string()) != kModelFormat)
        throw IoError(std::string("not a ") + kModelFormat + " document");
    LoadedModel out;
    out.version = j.value("version", 0);
    if (out.version != kModelFormatVersion)
        throw IoError("unsupported model format version " + std::to_string(out.version) + " (expected " +
                      std::to_string(kModelFormatVersion) + ")");
    try {
        const auto& h = j.at("hyperparameters");
        out.hyper.components = h.at("components").get<int>();
        out.hyper.dimensions = h.at("dimensions").get<int>();
        out.hyper.shape = h.at("shape").get<double>();
        out.hyper.rate = h.at("rate").get<double>();
        out.hyper.maxIter = h.at("max_iter").get<int>();
        out.hyper.aitkenTol = h.at("aitken_tol").get<double>();
        out.hyper.xiMax = h.at("xi_max").get<double>();
        out.hyper.zeroTol = h.at("zero_tol").get<double>();
        out.hyper.restarts = h.at("restarts").get<int>();
        out.hyper.seed = h.at("seed").get<std::uint64_t>();
        const auto& f = j.at("fit");
        out.converged = f.at("converged").get<bool>();
        out.iterations = f.at("iterations").get<int>();

        const auto& p = j.at("parameters");
        const auto& eta = p.at("eta");
        out.params.eta.resize(static_cast<Eigen::Index>(eta.size()));
        for (std::size_t g = 0; g < eta.size(); ++g) out.params.eta[static_cast<Eigen::Index>(g)] = eta[g].get<double>();
        out.params.alpha = matrixFrom(p.at("alpha"), "alpha");
        for (const auto& w : p.at("W")) out.params.W.push_back(matrixFrom(w, "W"));
        out.params.lambda = matrixFrom(p.at("lambda"), "lambda");
    } catch (const json::exception& e) {
        throw IoError(std::string("model file is missing or mistypes a field: ") + e.what());
    }
    try {
        out.params.validate();
        out.hyper.validate();
    } catch (const InvalidArgument& e) {
        throw IoError(std::string("model file holds invalid values: ") + e.what());
    }
    if (out.params.components() != out.hyper.components || out.params.dimensions() != out.hyper.dimensions)
        throw IoError("model file: parameter shapes disagree with the hyperparameters");
    return out;
}

LoadedModel readModelJson(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string() + " for reading");
    std::stringstream buf;
    buf << in.rdbuf();
    return parseModelJson(buf.str());
}

void writeTraceCsv(std::ostream& out, const FitResult& fit) {
    out << "iteration,bound,aitken\n";
    for (std::size_t t = 0; t < fit.trace.size(); ++t) {
        out << t << ',' << formatDouble(fit.trace[t]) << ',';
        if (t < fit.aitkenTrace.size() && std::isfinite(fit.aitkenTrace[t])) out << formatDouble(fit.aitkenTrace[t]);
        else out << "NA";
        out << '\n';
    }
}

void writeTraceCsv(const std::filesystem::path& path, const FitResult& fit) {
    auto out = openForWrite(path);
    writeTraceCsv(out, fit);
}

void writeAssignmentsCsv(std::ostream& out, const FitResult& fit, const std::vector<std::string>& ids) {
    const auto n = static_cast<std::size_t>(fit.state.z.rows());
    if (!ids.empty() && ids.size() != n) throw InvalidArgument("assignment ids do not match the observation count");
    if (fit.labels.size() != n) throw InvalidArgument("fit labels do not match the responsibilities");
    out << "id,label,max_responsibility\n";
    for (std::size_t i = 0; i < n; ++i) {
        if (ids.empty()) out << (i + 1);
        else out << ids[i];
        out << ',' << fit.labels[i] << ',' << formatDouble(fit.state.z.row(static_cast<Eigen::Index>(i)).maxCoeff())
            << '\n';
    }
}

void writeAssignmentsCsv(const std::filesystem::path& path, const FitResult& fit, const std::vector<std::string>& ids) {
    auto out = openForWrite(path);
    writeAssignmentsCsv(out, fit, ids);
}

std::vector<std::string> readLabels(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string() + " for reading");
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    if (lines.empty()) throw IoError("label file " + path.string() + " is empty");

    auto split = [](const std::string& s) {
        std::vector<std::string> out;
        std::string cur;
        for (const char c : s) {
            if (c == ',') {
                out.push_back(cur);
                cur.clear();
            } else {
                cur.push_back(c);
            }
        }
        out.push_back(cur);
        return out;
    };

    std::vector<std::string> labels;
    if (lines.front().find(',') == std::string::npos) {
        const std::size_t start = lines.front() == "label" ? 1 : 0;
        labels.assign(lines.begin() + static_cast<std::ptrdiff_t>(start), lines.end());
    } else {
        const auto header = split(lines.front());
        const auto it = std::find(header.begin(), header.end(), "label");
        if (it == header.end()) throw IoError("label CSV " + path.string() + " has no 'label' column");
        const auto col = static_cast<std::size_t>(it - header.begin());
        for (std::size_t k = 1; k < lines.size(); ++k) {
            const auto fields = split(lines[k]);
            if (fields.size() <= col) throw IoError("label CSV row " + std::to_string(k + 1) + " is too short");
            labels.push_back(fields[col]);
        }
    }
    return labels;
}

void writeLabels(const std::filesystem::path& path, const std::vector<int>& labels) {
    auto out = openForWrite(path);
    for (const int l : labels) out << l << '\n';
}

}  // namespace pmltm
