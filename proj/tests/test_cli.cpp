#include "doctest.h"

#include <filesystem>
#include <stdexcept>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "aloha/cli.hpp"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result invoke(std::vector<std::string> args) {
    args.insert(args.begin(), "aloha-game");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = aloha::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string write_temp(const std::string& name, const std::string& text) {
    const auto dir = fs::temp_directory_path() / "aloha_cli_tests";
    fs::create_directories(dir);
    const auto path = dir / name;
    std::ofstream(path) << text;
    return path.string();
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cells;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        rows.push_back(cells);
    }
    return rows;
}

const std::string kTwoNode = R"({"model": {"kind": "sinr", "b": 5, "noise_ratio": 0.01},
  "nodes": [{"demand": 0.3957, "p": 0.52}, {"demand": 0.129, "p": 0.24}],
  "sim": {"slots": 200000, "seed": 7}})";

}  // namespace

TEST_CASE("throughput prints the two-node operating point") {
    const auto cfg = write_temp("two.json", kTwoNode);
    const auto r = invoke({"throughput", "--config", cfg});
    REQUIRE(r.code == 0);
    CHECK(r.out.rfind("# aloha-game throughput v1", 0) == 0);
    const auto rows = csv_rows(r.out);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0] == std::vector<std::string>{"node", "p", "throughput"});
    CHECK(std::abs(std::stod(rows[1][2]) - 0.3957) < 5e-4);
    CHECK(std::abs(std::stod(rows[2][2]) - 0.129) < 5e-4);
}

TEST_CASE("throughput at zero p is zero") {
    const auto cfg = write_temp("two.json", kTwoNode);
    const auto rows = csv_rows(invoke({"throughput", "--config", cfg, "--p", "0,0"}).out);
    CHECK(rows[1][2] == "0");
    CHECK(rows[2][2] == "0");
}

TEST_CASE("csv and json carry the same values") {
    const auto cfg = write_temp("two.json", kTwoNode);
    const auto csv = csv_rows(invoke({"throughput", "--config", cfg}).out);
    const auto doc = nlohmann::json::parse(invoke({"throughput", "--config", cfg, "--format", "json"}).out);
    CHECK(doc["schema"] == "aloha-game/throughput/v1");
    for (std::size_t i = 0; i < 2; ++i) CHECK(doc["nodes"][i]["throughput"].get<double>() == std::stod(csv[i + 1][2]));
}

TEST_CASE("solve reports points, classification and the sum bound") {
    const auto cfg = write_temp("two.json", kTwoNode);
    const auto r = invoke({"solve", "--config", cfg});
    REQUIRE(r.code == 0);
    const auto doc = nlohmann::json::parse(r.out);
    CHECK(doc["status"] == "converged");
    CHECK(doc["points"][0]["classification"] == "preferred");
    CHECK(std::abs(doc["points"][0]["p"][0].get<double>() - 0.52) < 1e-3);
    CHECK(doc["sum_bound"]["satisfied"] == true);
}

TEST_CASE("solve: collision model with equal demands has two roots") {
    const auto cfg = write_temp("col.json", R"({"model": {"kind": "power", "delta": "inf"},
        "nodes": [{"demand": 0.16}, {"demand": 0.16}]})");
    const auto doc = nlohmann::json::parse(invoke({"solve", "--config", cfg}).out);
    REQUIRE(doc["points"].size() == 2);
    CHECK(std::abs(doc["points"][0]["p"][0].get<double>() - 0.2) < 1e-9);
    CHECK(std::abs(doc["points"][1]["p"][0].get<double>() - 0.8) < 1e-9);
}

TEST_CASE("solve: infeasible demands exit with 3") {
    const auto cfg = write_temp("inf.json", R"({"model": {"kind": "power", "delta": 0},
        "nodes": [{"demand": 0.5}, {"demand": 0.5001}]})");
    CHECK(invoke({"solve", "--config", cfg}).code == 3);
}

TEST_CASE("config errors exit with 2") {
    const auto bad = write_temp("bad.json", R"({"model": {"kind": "sinr", "b": 5, "colour": 1}, "nodes": [{"demand": 0.1}]})");
    const auto r = invoke({"throughput", "--config", bad});
    CHECK(r.code == 2);
    CHECK(r.err.find("/model/colour") != std::string::npos);
    CHECK(invoke({"throughput", "--config", "/nonexistent.json"}).code == 2);
    CHECK(invoke({"throughput"}).code == 2);
    CHECK(invoke({"frobnicate", "--config", bad}).code == 2);
    const auto cfg = write_temp("two.json", kTwoNode);
    CHECK(invoke({"throughput", "--config", cfg, "--p", "0.1"}).code == 2);
    CHECK(invoke({"paradox", "--config", cfg, "--grid", "0:1"}).code == 2);
}

TEST_CASE("dump-config round trip") {
    const auto cfg = write_temp("two.json", kTwoNode);
    const auto first = invoke({"simulate", "--config", cfg, "--dump-config"});
    REQUIRE(first.code == 0);
    const auto again = write_temp("again.json", first.out);
    CHECK(invoke({"simulate", "--config", again, "--dump-config"}).out == first.out);
}

TEST_CASE("simulate is deterministic and records the seed") {
    const auto cfg = write_temp("two.json", kTwoNode);
    const auto a = invoke({"simulate", "--config", cfg});
    const auto b = invoke({"simulate", "--config", cfg});
    REQUIRE(a.code == 0);
    CHECK(a.out == b.out);
    CHECK(a.out.find("seed=7") != std::string::npos);
    const auto c = invoke({"simulate", "--config", cfg, "--seed", "8"});
    CHECK(c.out != a.out);
    const auto rows = csv_rows(a.out);
    CHECK(rows[0] == std::vector<std::string>{"node", "transmits", "successes", "rho_hat", "p_hat", "std_error"});
}

TEST_CASE("dynamics trace columns") {
    const auto cfg = write_temp("dyn.json", R"({"model": {"kind": "sinr", "b": 5, "noise_ratio": 0.1},
        "nodes": [{"demand": 0.1}, {"demand": 0.05}, {"demand": 0.01}],
        "dynamics": {"estimator": "analytic", "record_every": 1000}})");
    const auto r = invoke({"dynamics", "--config", cfg});
    REQUIRE(r.code == 0);
    const auto rows = csv_rows(r.out);
    CHECK(rows[0] == std::vector<std::string>{"iteration", "node", "p", "T", "rho_hat", "eps"});
    CHECK(rows.size() > 4);
}

TEST_CASE("dynamics that run out of iterations exit with 4") {
    const auto cfg = write_temp("dyn4.json", R"({"model": {"kind": "sinr", "b": 5, "noise_ratio": 0.1},
        "nodes": [{"demand": 0.1}, {"demand": 0.05}, {"demand": 0.01}],
        "dynamics": {"estimator": "analytic", "max_iter": 10}})");
    CHECK(invoke({"dynamics", "--config", cfg}).code == 4);
}

TEST_CASE("paradox curves") {
    const auto cfg = write_temp("fig.json", R"({"model": {"kind": "sinr", "b": 5, "noise_ratio": 0},
        "nodes": [{"demand": 0.1}], "paradox": {"n": [2, 10]}})");
    const auto r = invoke({"paradox", "--config", cfg, "--grid", "0:1:101"});
    REQUIRE(r.code == 0);
    const auto rows = csv_rows(r.out);
    CHECK(rows[0] == std::vector<std::string>{"n", "p", "rho_nocsi", "rho_csi", "gap"});
    CHECK(rows.size() == 1 + 2 * 101);
    for (std::size_t k = 1; k < rows.size(); ++k) CHECK(std::stod(rows[k][4]) >= -1e-12);

    const auto eq = write_temp("eq.json", R"({"model": {"kind": "power", "delta": 0}, "nodes": [{"demand": 0.1}, {"demand": 0.1}]})");
    for (const auto& row : csv_rows(invoke({"paradox", "--config", eq, "--grid", "0:1:51"}).out))
        if (row[0] != "n") CHECK(row[2] == row[3]);
}

TEST_CASE("output file") {
    const auto cfg = write_temp("two.json", kTwoNode);
    const auto path = (fs::temp_directory_path() / "aloha_cli_tests" / "out.csv").string();
    const auto r = invoke({"throughput", "--config", cfg, "--out", path});
    REQUIRE(r.code == 0);
    CHECK(r.out.empty());
    std::ifstream in(path);
    std::stringstream buf;
    buf << in.rdbuf();
    CHECK(buf.str() == invoke({"throughput", "--config", cfg}).out);
}
