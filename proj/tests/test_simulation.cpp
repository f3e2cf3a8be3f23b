#include <doctest.h>

#include <cmath>
#include <sstream>

#include "pmltm/error.hpp"
#include "pmltm/selection.hpp"
#include "pmltm/simulation.hpp"

using namespace pmltm;
using namespace pmltm::simulation;

namespace {

SimulationSpec flatSpec(std::size_t n, std::uint64_t seed) {
    SimulationSpec spec = SimulationSpec::table1(n, seed);
    for (auto& W : spec.slopes) W.setZero();
    return spec;
}

}  // namespace

TEST_CASE("benchmark design") {
    const auto spec = SimulationSpec::table1();
    CHECK(spec.n == 500);
    CHECK(spec.components() == 2);
    CHECK(spec.items() == 10);
    CHECK(spec.dimensions() == 1);
    CHECK(spec.mixing[0] == 0.5);
    CHECK(spec.slopes[0](9, 0) == 1.5);
    CHECK(spec.slopes[1](1, 0) == -3.8);
    CHECK(spec.slopes[1](4, 0) == 4.5);
    CHECK(spec.slopes[0].topRows(5).isZero());
    CHECK(spec.slopes[1].bottomRows(5).isZero());
    CHECK(spec.intercepts.isZero());
    CHECK(defaultShapeRates().size() == 4);
}

TEST_CASE("fair coin columns") {
    const auto ds = generateDataset(flatSpec(500, 3));
    const auto counts = ds.data.columnCounts();
    for (const auto c : counts) CHECK(std::abs(c / 500.0 - 0.5) <= 3 * std::sqrt(0.25 / 500));
}

TEST_CASE("symmetric item has positive rate one half") {
    const auto ds = generateDataset(SimulationSpec::table1(10000, 5));
    long positives = 0, members = 0;
    for (std::size_t i = 0; i < ds.data.rows(); ++i)
        if (ds.labels[i] == 1) {
            ++members;
            positives += ds.data(i, 4);
        }
    CHECK(std::abs(static_cast<double>(positives) / static_cast<double>(members) - 0.5) < 0.03);
}

TEST_CASE("generation is deterministic and class proportions follow the mixing weights") {
    const auto a = generateDataset(SimulationSpec::table1(500, 11));
    const auto b = generateDataset(SimulationSpec::table1(500, 11));
    const auto c = generateDataset(SimulationSpec::table1(500, 12));
    CHECK(a.data == b.data);
    CHECK(a.labels == b.labels);
    CHECK_FALSE(a.data == c.data);
    long first = 0;
    for (const int l : a.labels) first += l == 0;
    CHECK(std::abs(first / 500.0 - 0.5) <= 3 * std::sqrt(0.25 / 500));
}

TEST_CASE("invalid specifications") {
    auto spec = SimulationSpec::table1();
    spec.mixing = Eigen::Vector2d(0.7, 0.7);
    CHECK_THROWS_AS(generateDataset(spec), InvalidArgument);
    spec = SimulationSpec::table1();
    spec.slopes.pop_back();
    CHECK_THROWS_AS(generateDataset(spec), InvalidArgument);
    ReplicationConfig config;
    config.replicates = 0;
    config.shapeRates = defaultShapeRates();
    CHECK_THROWS_AS(replicationStudy(SimulationSpec::table1(50), config), InvalidArgument);
}

TEST_CASE("component matching") {
    const std::vector<int> truth{0, 0, 1, 1, 2, 2};
    const std::vector<int> fitted{2, 2, 0, 0, 1, 1};
    CHECK(matchComponents(fitted, truth, 3) == std::vector<int>{1, 2, 0});
    CHECK(matchComponents(truth, truth, 3) == std::vector<int>{0, 1, 2});
}

TEST_CASE("zero recovery counts") {
    const auto spec = SimulationSpec::table1();
    auto params = ModelParameters::zeros(2, 10, 1);
    params.W[0] = spec.slopes[0];
    params.W[1] = spec.slopes[1];
    auto [rec, total] = zeroRecoveryCounts(spec, params, std::vector<int>{0, 1}, 1e-4);
    CHECK(total == 10);
    CHECK(rec == 10);
    // Swapped components: the true zeros now face the large slopes.
    std::tie(rec, total) = zeroRecoveryCounts(spec, params, std::vector<int>{1, 0}, 1e-4);
    CHECK(rec == 0);
}

TEST_CASE("no structure, no clustering") {
    ReplicationConfig config;
    config.replicates = 20;
    config.shapeRates = {{1.0, 0.5}};
    config.fitConfig.hyper.restarts = 2;
    const auto report = replicationStudy(flatSpec(300, 21), config);
    REQUIRE(report.rows.size() == 1);
    CHECK(report.rows[0].replicates + report.rows[0].failures == 20);
    CHECK(std::abs(report.rows[0].meanAri) < 0.1);
}

TEST_CASE("a single replicate report equals that replicate") {
    const auto spec = SimulationSpec::table1(200, 31);
    ReplicationConfig config;
    config.replicates = 1;
    config.shapeRates = {{1.0, 0.5}};
    config.includeUnpenalized = true;
    config.fitConfig.hyper.restarts = 2;
    const auto report = replicationStudy(spec, config);
    REQUIRE(report.rows.size() == 2);
    CHECK(report.rows[0].label == "s=1 r=0.5");
    CHECK(report.rows[1].label == "unpenalized");
    CHECK_FALSE(report.rows[1].penalized);

    auto repSpec = spec;
    repSpec.seed = replicateSeed(spec.seed, 0);
    const auto ds = generateDataset(repSpec);
    auto fitConfig = config.fitConfig;
    fitConfig.hyper.components = 2;
    fitConfig.hyper.dimensions = 1;
    fitConfig.hyper.seed = replicateSeed(spec.seed ^ 0xF17ULL, 0);
    const auto fit = selection::fitAndScore(ds.data, fitConfig);

    const auto& row = report.rows[0];
    CHECK(row.replicates == 1);
    CHECK(row.meanBic == *fit.bic);
    CHECK(row.meanAri == selection::adjustedRandIndex(fit.labels, ds.labels));
    CHECK(row.seBic == 0.0);
    CHECK(row.seAri == 0.0);

    std::ostringstream csv;
    writeReplicationCsv(csv, report);
    CHECK(csv.str().rfind("metric,s=1 r=0.5,unpenalized\n", 0) == 0);
}

TEST_CASE("replication is reproducible and thread independent") {
    const auto spec = SimulationSpec::table1(150, 8);
    ReplicationConfig config;
    config.replicates = 3;
    config.shapeRates = {{1.0, 0.5}, {0.1, 0.5}};
    config.fitConfig.hyper.restarts = 1;
    const auto a = replicationStudy(spec, config);
    config.threads = 4;
    const auto b = replicationStudy(spec, config);
    for (std::size_t r = 0; r < a.rows.size(); ++r) {
        CHECK(a.rows[r].bics == b.rows[r].bics);
        CHECK(a.rows[r].aris == b.rows[r].aris);
    }
}
