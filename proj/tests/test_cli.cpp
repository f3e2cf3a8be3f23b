#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pmltm/cli.hpp"

namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome invoke(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = pmltm::cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void spit(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

std::size_t lineCount(const std::string& text) { return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')); }

// Fresh scratch directory under the test working directory.
fs::path scratch(const std::string& name) {
    const auto dir = fs::current_path() / "cli_work" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

const fs::path kData = PMLTM_TEST_DATA;

}  // namespace

TEST_CASE("ingest reproduces the golden fixture") {
    const auto dir = scratch("ingest");
    const auto r = invoke({"ingest", (kData / "golden_reviews.txt").string(), "--out-prefix", (dir / "g").string(),
                          "--threshold", "0.4"});
    REQUIRE(r.code == 0);
    CHECK(slurp(dir / "g.mtx") == slurp(kData / "golden_reviews.expected.mtx"));
    CHECK(slurp(dir / "g.vocab.txt") == slurp(kData / "golden_reviews.expected.vocab.txt"));
    CHECK(slurp(dir / "g.freq.csv") == slurp(kData / "golden_reviews.expected.freq.csv"));
    const auto manifest = nlohmann::json::parse(slurp(dir / "g.manifest.json"));
    CHECK(manifest["exit_code"] == 0);
    CHECK(manifest["command"] == "ingest");
    CHECK(manifest["inputs"].size() == 1);
    CHECK(manifest["outputs"].size() == 5);
}

TEST_CASE("ingest thresholds and failures") {
    const auto dir = scratch("ingest_thresholds");
    const auto input = (kData / "golden_reviews.txt").string();
    REQUIRE(invoke({"ingest", input, "--out-prefix", (dir / "lo").string(), "--threshold", "0.02"}).code == 0);
    REQUIRE(invoke({"ingest", input, "--out-prefix", (dir / "hi").string(), "--threshold", "0.5"}).code == 0);
    CHECK(lineCount(slurp(dir / "hi.vocab.txt")) < lineCount(slurp(dir / "lo.vocab.txt")));

    spit(dir / "empty.txt", "");
    const auto empty = invoke({"ingest", (dir / "empty.txt").string(), "--out-prefix", (dir / "e").string()});
    CHECK(empty.code != 0);
    CHECK(empty.err.find("empty corpus") != std::string::npos);

    CHECK(invoke({"ingest", (dir / "missing.txt").string(), "--out-prefix", (dir / "m").string()}).code == 4);
    CHECK(invoke({"ingest", input, "--out-prefix", (dir / "t").string(), "--threshold", "1.5"}).code == 2);
    CHECK(invoke({"ingest", input}).code == 2);
    CHECK(invoke({"frobnicate"}).code == 2);
}

TEST_CASE("simulate, fit and inspect") {
    const auto dir = scratch("fit");
    const auto sim = (dir / "sim").string();
    REQUIRE(invoke({"simulate", "--table1", "--n", "500", "--seed", "1", "--out-prefix", sim}).code == 0);
    const auto matrix = slurp(sim + ".mtx");
    CHECK(matrix.rfind("%%MatrixMarket matrix coordinate pattern general\n500 10 ", 0) == 0);
    CHECK(lineCount(slurp(sim + ".labels.txt")) == 500);
    REQUIRE(invoke({"simulate", "--table1", "--n", "500", "--seed", "1", "--out-prefix", sim + "2"}).code == 0);
    CHECK(slurp(sim + "2.mtx") == matrix);
    CHECK(slurp(sim + "2.labels.txt") == slurp(sim + ".labels.txt"));

    const std::vector<std::string> fitArgs{"fit",     sim + ".mtx", "--components", "2",        "--dimensions",
                                           "1",       "--shape",    "1",            "--rate",   "0.5",
                                           "--seed",  "7",          "--restarts",   "2"};
    auto a = fitArgs;
    a.insert(a.end(), {"--out-prefix", (dir / "a").string()});
    auto b = fitArgs;
    b.insert(b.end(), {"--out-prefix", (dir / "b").string(), "--threads", "3"});
    REQUIRE(invoke(a).code == 0);
    REQUIRE(invoke(b).code == 0);
    for (const auto* ext : {".model.json", ".assignments.csv", ".trace.csv"}) {
        INFO(ext);
        CHECK(slurp((dir / "a").string() + ext) == slurp((dir / "b").string() + ext));
    }
    const auto model = nlohmann::json::parse(slurp((dir / "a").string() + ".model.json"));
    CHECK(model["hyperparameters"]["components"] == 2);
    CHECK(model["fit"]["bic"].is_number());
    CHECK(model["summaries"]["standardized_loadings"].size() == 2);
    const auto assignments = slurp((dir / "a").string() + ".assignments.csv");
    CHECK(assignments.rfind("id,label,max_responsibility\n", 0) == 0);
    CHECK(lineCount(assignments) == 501);

    const auto inspect = invoke({"inspect", (dir / "a").string() + ".model.json", "--manifest",
                                (dir / "inspect.manifest.json").string()});
    CHECK(inspect.code == 0);
    CHECK(inspect.out.rfind("G 2, D 1, M 10", 0) == 0);

    auto capped = fitArgs;
    capped.insert(capped.end(), {"--out-prefix", (dir / "c").string(), "--max-iter", "1"});
    REQUIRE(invoke(capped).code == 0);
    const auto cappedModel = nlohmann::json::parse(slurp((dir / "c").string() + ".model.json"));
    CHECK(cappedModel["fit"]["converged"] == false);
    CHECK(fs::exists((dir / "c").string() + ".assignments.csv"));
    CHECK(lineCount(slurp((dir / "c").string() + ".trace.csv")) == 3);

    auto zero = fitArgs;
    zero[3] = "0";
    zero.insert(zero.end(), {"--out-prefix", (dir / "z").string()});
    CHECK(invoke(zero).code == 2);
    CHECK_FALSE(fs::exists((dir / "z").string() + ".model.json"));
}

TEST_CASE("select over a small grid") {
    const auto dir = scratch("select");
    const auto sim = (dir / "sim").string();
    REQUIRE(invoke({"simulate", "--table1", "--n", "200", "--seed", "3", "--out-prefix", sim}).code == 0);
    const auto r = invoke({"select", sim + ".mtx", "--out-prefix", (dir / "s").string(), "--components", "1-2",
                          "--dimensions", "1-2", "--sr-grid", "1:0.5", "--restarts", "1"});
    REQUIRE(r.code == 0);
    const auto grid = slurp((dir / "s").string() + ".grid.csv");
    CHECK(lineCount(grid) == 5);
    std::size_t marked = 0;
    std::istringstream lines(grid);
    std::string line;
    std::getline(lines, line);
    while (std::getline(lines, line)) marked += line.back() == '1';
    CHECK(marked == 1);
    CHECK(fs::exists((dir / "s").string() + ".best.model.json"));
    const auto gj = nlohmann::json::parse(slurp((dir / "s").string() + ".grid.json"));
    CHECK(gj["cells"].size() == 4);

    spit(dir / "tiny.mtx", "%%MatrixMarket matrix coordinate pattern general\n2 3 1\n1 2\n");
    const auto fail = invoke({"select", (dir / "tiny.mtx").string(), "--out-prefix", (dir / "f").string(),
                             "--components", "5", "--dimensions", "1"});
    CHECK(fail.code != 0);
    CHECK(invoke({"select", sim + ".mtx", "--out-prefix", (dir / "bad").string(), "--components", "2-1"}).code == 2);
}

TEST_CASE("replication layout") {
    const auto dir = scratch("replicate");
    const auto prefix = (dir / "rep").string();
    REQUIRE(invoke({"simulate", "--table1", "--n", "100", "--seed", "5", "--replicate", "2", "--sr-grid", "default",
                   "--restarts", "1", "--out-prefix", prefix})
                .code == 0);
    const auto csv = slurp(prefix + ".replication.csv");
    CHECK(csv.rfind("metric,s=0.1 r=0.5,s=0.5 r=0.5,s=1 r=0.5,s=2 r=0.5\n", 0) == 0);
    CHECK(csv.find("\nBIC,") != std::string::npos);
    CHECK(csv.find("\nARI,") != std::string::npos);
    CHECK(csv.find("\nreplicates,2,2,2,2") != std::string::npos);
}

TEST_CASE("evaluate") {
    const auto dir = scratch("evaluate");
    spit(dir / "a.txt", "1\n1\n2\n2\n");
    spit(dir / "b.txt", "1\n2\n1\n2\n");
    spit(dir / "c.txt", "1\n2\n1\n");
    const auto manifest = (dir / "e.manifest.json").string();
    auto r = invoke({"evaluate", (dir / "a.txt").string(), (dir / "a.txt").string(), "--manifest", manifest});
    CHECK(r.code == 0);
    CHECK(r.out == "1\n");
    r = invoke({"evaluate", (dir / "a.txt").string(), (dir / "b.txt").string(), "--manifest", manifest});
    CHECK(r.code == 0);
    CHECK(r.out == "-0.5\n");
    r = invoke({"evaluate", (dir / "a.txt").string(), (dir / "c.txt").string(), "--manifest", manifest});
    CHECK(r.code == 2);
    CHECK(nlohmann::json::parse(slurp(manifest))["exit_code"] == 2);
}

TEST_CASE("rerun from a manifest reproduces outputs") {
    const auto dir = scratch("rerun");
    const auto sim = (dir / "sim").string();
    REQUIRE(invoke({"simulate", "--table1", "--n", "150", "--seed", "9", "--out-prefix", sim}).code == 0);
    REQUIRE(invoke({"fit", sim + ".mtx", "--out-prefix", (dir / "f").string(), "--restarts", "1", "--seed", "4"})
                .code == 0);
    const auto model = slurp((dir / "f").string() + ".model.json");
    auto r = invoke({"rerun", (dir / "f").string() + ".manifest.json", "--verify"});
    CHECK(r.code == 0);
    CHECK(r.out.find("all outputs identical") != std::string::npos);
    CHECK(slurp((dir / "f").string() + ".model.json") == model);

    // Tamper with the recorded hash: verification must notice.
    auto m = nlohmann::json::parse(slurp((dir / "f").string() + ".manifest.json"));
    m["outputs"][0]["sha256"] = std::string(64, '0');
    spit(dir / "tampered.json", m.dump());
    r = invoke({"rerun", (dir / "tampered.json").string(), "--verify"});
    CHECK(r.code == 5);
}
