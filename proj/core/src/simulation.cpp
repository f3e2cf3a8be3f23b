#include "pmltm/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <random>

#include "pmltm/error.hpp"
#include "pmltm/parallel.hpp"
#include "pmltm/serialization.hpp"

namespace pmltm::simulation {
namespace {

std::string shapeRateLabel(double s, double r) {
    return "s=" + formatDouble(s) + " r=" + formatDouble(r);
}

void summarise(ReplicationRow& row, long recovered, long zeroTotal) {
    auto meanSe = [](const std::vector<double>& v, double& mean, double& se) {
        if (v.empty()) {
            mean = se = std::numeric_limits<double>::quiet_NaN();
            return;
        }
        mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
        if (v.size() < 2) {
            se = 0.0;
            return;
        }
        double ss = 0.0;
        for (const double x : v) ss += (x - mean) * (x - mean);
        se = std::sqrt(ss / static_cast<double>(v.size() - 1)) / std::sqrt(static_cast<double>(v.size()));
    };
    meanSe(row.bics, row.meanBic, row.seBic);
    meanSe(row.aris, row.meanAri, row.seAri);
    row.zeroRecovery = zeroTotal > 0 ? static_cast<double>(recovered) / static_cast<double>(zeroTotal)
                                     : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

void SimulationSpec::validate() const {
    const int G = components();
    if (G < 1) throw InvalidArgument("simulation needs at least one component");
    if ((mixing.array() < 0.0).any() || std::abs(mixing.sum() - 1.0) > 1e-10)
        throw InvalidArgument("mixing weights must lie on the simplex");
    if (static_cast<int>(slopes.size()) != G) throw InvalidArgument("one slope matrix per component required");
    const auto M = slopes.front().rows();
    const auto D = slopes.front().cols();
    if (M < 1 || D < 1) throw InvalidArgument("slope matrices must be non-empty");
    for (const auto& s : slopes)
        if (s.rows() != M || s.cols() != D || !s.allFinite())
            throw InvalidArgument("slope matrices must share the same finite M x D shape");
    if (intercepts.rows() != G || intercepts.cols() != M || !intercepts.allFinite())
        throw InvalidArgument("intercepts must be a finite G x M matrix");
    if (n < 1) throw InvalidArgument("simulation needs n >= 1");
}

SimulationSpec SimulationSpec::table1(std::size_t n, std::uint64_t seed) {
    SimulationSpec spec;
    spec.n = n;
    spec.seed = seed;
    spec.mixing = Eigen::Vector2d(0.5, 0.5);
    Eigen::MatrixXd w1(10, 1), w2(10, 1);
    w1 << 0, 0, 0, 0, 0, 0.5, -0.4, 0.3, 0.7, 1.5;
    w2 << -1.0, -3.8, 0.6, -0.7, 4.5, 0, 0, 0, 0, 0;
    spec.slopes = {w1, w2};
    spec.intercepts = Eigen::MatrixXd::Zero(2, 10);
    return spec;
}

Dataset generateDataset(const SimulationSpec& spec) {
    spec.validate();
    const int G = spec.components();
    const int M = spec.items();
    const int D = spec.dimensions();
    std::mt19937_64 rng(spec.seed);
    std::discrete_distribution<int> component(spec.mixing.data(), spec.mixing.data() + G);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    Dataset out;
    out.labels.resize(spec.n);
    std::vector<std::pair<std::size_t, std::size_t>> entries;
    Eigen::VectorXd y(D);
    for (std::size_t i = 0; i < spec.n; ++i) {
        const int g = component(rng);
        out.labels[i] = g;
        for (int d = 0; d < D; ++d) y[d] = normal(rng);
        const auto& Wg = spec.slopes[static_cast<std::size_t>(g)];
        for (int m = 0; m < M; ++m) {
            const double p = responseProbability(spec.intercepts(g, m), Wg.row(m).transpose(), y);
            if (unit(rng) < p) entries.emplace_back(i, static_cast<std::size_t>(m));
        }
    }
    out.data = BinaryMatrix::fromEntries(spec.n, static_cast<std::size_t>(M), std::move(entries));
    return out;
}

std::vector<selection::ShapeRate> defaultShapeRates() {
    return {{0.1, 0.5}, {0.5, 0.5}, {1.0, 0.5}, {2.0, 0.5}};
}

std::uint64_t replicateSeed(std::uint64_t master, std::uint64_t k) {
    return vem::restartSeed(master ^ 0x5EED0F5EEDULL, k + 7919ULL);
}

std::vector<int> matchComponents(std::span<const int> fitted, std::span<const int> truth, int G) {
    if (fitted.size() != truth.size()) throw InvalidArgument("label vectors differ in length");
    std::vector<std::vector<long>> agree(static_cast<std::size_t>(G), std::vector<long>(static_cast<std::size_t>(G), 0));
    for (std::size_t i = 0; i < fitted.size(); ++i) {
        if (fitted[i] < 0 || fitted[i] >= G || truth[i] < 0 || truth[i] >= G)
            throw InvalidArgument("labels must lie in [0, G)");
        ++agree[static_cast<std::size_t>(fitted[i])][static_cast<std::size_t>(truth[i])];
    }
    std::vector<int> perm(static_cast<std::size_t>(G));
    std::iota(perm.begin(), perm.end(), 0);
    if (G <= 8) {
        std::vector<int> best = perm;
        long bestScore = -1;
        do {
            long score = 0;
            for (int f = 0; f < G; ++f) score += agree[static_cast<std::size_t>(f)][static_cast<std::size_t>(perm[static_cast<std::size_t>(f)])];
            if (score > bestScore) {
                bestScore = score;
                best = perm;
            }
        } while (std::next_permutation(perm.begin(), perm.end()));
        return best;
    }
    // Greedy for larger G.
    std::vector<bool> usedTrue(static_cast<std::size_t>(G), false), usedFit(static_cast<std::size_t>(G), false);
    for (int step = 0; step < G; ++step) {
        long bestScore = -1;
        int bf = 0, bt = 0;
        for (int f = 0; f < G; ++f)
            for (int t = 0; t < G; ++t)
                if (!usedFit[static_cast<std::size_t>(f)] && !usedTrue[static_cast<std::size_t>(t)] &&
                    agree[static_cast<std::size_t>(f)][static_cast<std::size_t>(t)] > bestScore) {
                    bestScore = agree[static_cast<std::size_t>(f)][static_cast<std::size_t>(t)];
                    bf = f;
                    bt = t;
                }
        usedFit[static_cast<std::size_t>(bf)] = usedTrue[static_cast<std::size_t>(bt)] = true;
        perm[static_cast<std::size_t>(bf)] = bt;
    }
    return perm;
}

std::pair<long, long> zeroRecoveryCounts(const SimulationSpec& spec, const ModelParameters& params,
                                         std::span<const int> fittedToTrue, double zeroTol) {
    long recovered = 0, total = 0;
    for (int f = 0; f < params.components(); ++f) {
        const auto t = static_cast<std::size_t>(fittedToTrue[static_cast<std::size_t>(f)]);
        const auto& truth = spec.slopes.at(t);
        const auto& est = params.W[static_cast<std::size_t>(f)];
        for (Eigen::Index m = 0; m < truth.rows(); ++m)
            for (Eigen::Index d = 0; d < truth.cols(); ++d)
                if (truth(m, d) == 0.0) {
                    ++total;
                    if (std::abs(est(m, d)) < zeroTol) ++recovered;
                }
    }
    return {recovered, total};
}

ReplicationReport replicationStudy(const SimulationSpec& spec, const ReplicationConfig& config) {
    spec.validate();
    if (config.replicates < 1) throw InvalidArgument("replicates must be >= 1");
    if (config.shapeRates.empty() && !config.includeUnpenalized)
        throw InvalidArgument("replication study needs at least one (s, r) pair");

    struct Arm {
        std::string label;
        double shape;
        double rate;
        bool penalized;
    };
    std::vector<Arm> arms;
    for (const auto& sr : config.shapeRates) arms.push_back({shapeRateLabel(sr.shape, sr.rate), sr.shape, sr.rate, true});
    if (config.includeUnpenalized) arms.push_back({"unpenalized", 1.0, 0.5, false});

    const auto reps = static_cast<std::size_t>(config.replicates);
    struct JobResult {
        bool ok = false;
        double bic = 0.0;
        double ari = 0.0;
        long recovered = 0;
        long zeroTotal = 0;
    };
    std::vector<JobResult> jobs(reps * arms.size());
    std::vector<Dataset> datasets(reps);
    parallelFor(reps, config.threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t k = begin; k < end; ++k) {
            auto repSpec = spec;
            repSpec.seed = replicateSeed(spec.seed, k);
            datasets[k] = generateDataset(repSpec);
        }
    });

    parallelFor(jobs.size(), config.threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t j = begin; j < end; ++j) {
            const std::size_t k = j / arms.size();
            const auto& arm = arms[j % arms.size()];
            auto fitConfig = config.fitConfig;
            fitConfig.hyper.components = spec.components();
            fitConfig.hyper.dimensions = spec.dimensions();
            fitConfig.hyper.shape = arm.shape;
            fitConfig.hyper.rate = arm.rate;
            fitConfig.hyper.seed = replicateSeed(spec.seed ^ 0xF17ULL, k);
            fitConfig.penalize = arm.penalized;
            fitConfig.threads = 1;
            auto& out = jobs[j];
            try {
                const auto& ds = datasets[k];
                const FitResult f = selection::fitAndScore(ds.data, fitConfig, config.quadNodes);
                out.bic = *f.bic;
                out.ari = selection::adjustedRandIndex(f.labels, ds.labels);
                const auto map = matchComponents(f.labels, ds.labels, spec.components());
                const auto [rec, tot] = zeroRecoveryCounts(spec, f.params, map, fitConfig.hyper.zeroTol);
                out.recovered = rec;
                out.zeroTotal = tot;
                out.ok = true;
            } catch (const Error&) {
                out.ok = false;
            }
        }
    });

    ReplicationReport report;
    for (std::size_t a = 0; a < arms.size(); ++a) {
        ReplicationRow row;
        row.label = arms[a].label;
        row.shape = arms[a].shape;
        row.rate = arms[a].rate;
        row.penalized = arms[a].penalized;
        long recovered = 0, zeroTotal = 0;
        for (std::size_t k = 0; k < reps; ++k) {
            const auto& job = jobs[k * arms.size() + a];
            if (!job.ok) {
                ++row.failures;
                continue;
            }
            ++row.replicates;
            row.bics.push_back(job.bic);
            row.aris.push_back(job.ari);
            recovered += job.recovered;
            zeroTotal += job.zeroTotal;
        }
        summarise(row, recovered, zeroTotal);
        report.rows.push_back(std::move(row));
    }
    return report;
}

void writeReplicationCsv(std::ostream& out, const ReplicationReport& report) {
    out << "metric";
    for (const auto& r : report.rows) out << ',' << r.label;
    out << '\n';
    auto line = [&](const char* name, auto get) {
        out << name;
        for (const auto& r : report.rows) out << ',' << get(r);
        out << '\n';
    };
    line("BIC", [](const ReplicationRow& r) { return formatDouble(r.meanBic); });
    line("ARI", [](const ReplicationRow& r) { return formatDouble(r.meanAri); });
    line("BIC_se", [](const ReplicationRow& r) { return formatDouble(r.seBic); });
    line("ARI_se", [](const ReplicationRow& r) { return formatDouble(r.seAri); });
    line("zero_recovery", [](const ReplicationRow& r) { return formatDouble(r.zeroRecovery); });
    line("replicates", [](const ReplicationRow& r) { return std::to_string(r.replicates); });
    line("failures", [](const ReplicationRow& r) { return std::to_string(r.failures); });
}

void writeReplicationCsv(const std::filesystem::path& path, const ReplicationReport& report) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    writeReplicationCsv(out, report);
}

}  // namespace pmltm::simulation
