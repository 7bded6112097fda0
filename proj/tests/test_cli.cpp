#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "moran/cli.hpp"

using namespace moran;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("moran_test_" + std::to_string(RngStream::derive(
                                    static_cast<std::uint64_t>(
                                        std::chrono::steady_clock::now().time_since_epoch().count()),
                                    0)));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::string write_file(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
    return p.string();
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run_cli(const std::string& command, const std::string& config,
            const std::string& out_dir) {
    cli::CliOptions opt;
    opt.command = command;
    opt.config_path = config;
    opt.out_dir = out_dir;
    return cli::run(opt);
}

}  // namespace

TEST_CASE("simulate: minimal finite config produces a counts table") {
    TempDir tmp;
    const auto config = write_file(tmp.path / "cfg.json", R"({
      "seed": 42,
      "space": {"kind": "finite", "labels": 2},
      "fitness": {"lambda": 0.0, "phi": {"family": "table", "values": [0.0, 0.5]}},
      "prior": {"kind": "dp", "c": 1.0, "base": {"pmf": [0.5, 0.5]}},
      "chain": {"n": 3, "samples": 2000, "thin": 5}
    })");
    CHECK(run_cli("simulate", config, (tmp.path / "out").string()) == 0);
    CHECK(fs::exists(tmp.path / "out" / "counts.csv"));
    CHECK(fs::exists(tmp.path / "out" / "summary.json"));
    const auto counts = slurp(tmp.path / "out" / "counts.csv");
    CHECK(counts.rfind("n0,n1,frequency\r\n", 0) == 0);  // RFC 4180 header
}

TEST_CASE("simulate: invalid configs exit with code 2") {
    TempDir tmp;
    // steps <= burn_in
    const auto bad = write_file(tmp.path / "bad.json", R"({
      "seed": 1,
      "space": {"kind": "finite", "labels": 2},
      "fitness": {"lambda": 0.0, "phi": {"family": "zero"}},
      "prior": {"kind": "dp", "c": 1.0, "base": {"pmf": [0.5, 0.5]}},
      "chain": {"n": 3, "steps": 10, "burn_in": 10}
    })");
    CHECK(run_cli("simulate", bad, (tmp.path / "out").string()) == 2);

    // missing seed
    const auto noseed = write_file(tmp.path / "noseed.json", R"({
      "space": {"kind": "finite", "labels": 2}
    })");
    CHECK(run_cli("simulate", noseed, (tmp.path / "out").string()) == 2);

    // unparseable JSON
    const auto broken = write_file(tmp.path / "broken.json", "{ not json");
    CHECK(run_cli("simulate", broken, (tmp.path / "out").string()) == 2);

    // nonexistent file
    CHECK(run_cli("simulate", (tmp.path / "missing.json").string(),
                  (tmp.path / "out").string()) == 2);
}

TEST_CASE("identical config and seed give byte-identical outputs") {
    TempDir tmp;
    const auto config = write_file(tmp.path / "cfg.json", R"({
      "seed": 7,
      "space": {"kind": "finite", "labels": 3},
      "fitness": {"lambda": 0.0, "phi": {"family": "table", "values": [0.0, 0.4, 1.0]}},
      "prior": {"kind": "mixture", "components": [
        {"weight": 0.5, "pmf": [0.6, 0.3, 0.1]},
        {"weight": 0.5, "pmf": [0.1, 0.4, 0.5]}]},
      "chain": {"n": 4, "samples": 3000, "thin": 4, "replicas": 2, "kernel": "inverse"}
    })");
    REQUIRE(run_cli("simulate", config, (tmp.path / "a").string()) == 0);
    REQUIRE(run_cli("simulate", config, (tmp.path / "b").string()) == 0);
    CHECK(slurp(tmp.path / "a" / "counts.csv") == slurp(tmp.path / "b" / "counts.csv"));
    CHECK(slurp(tmp.path / "a" / "summary.json") == slurp(tmp.path / "b" / "summary.json"));
}

TEST_CASE("limit: the steep-cost interval instance reports an atom") {
    TempDir tmp;
    const auto config = write_file(tmp.path / "cfg.json", R"({
      "seed": 5,
      "space": {"kind": "interval", "grid": 1024},
      "fitness": {"lambda": 0.0, "phi": {"family": "power", "x_o": 0.3, "p": 0.1}},
      "prior": {"kind": "dp", "c": 1.0, "base": "uniform"}
    })");
    REQUIRE(run_cli("limit", config, (tmp.path / "out").string()) == 0);
    const auto j = nlohmann::json::parse(slurp(tmp.path / "out" / "limit.json"));
    CHECK(j.at("regime") == "dp_lambda0_atom");
    CHECK(j.at("beta").get<double>() < 1.0);
    CHECK(fs::exists(tmp.path / "out" / "limit_cdf.csv"));
}

TEST_CASE("balance: residual below 1e-12 lands in the report") {
    TempDir tmp;
    const auto config = write_file(tmp.path / "cfg.json", R"({
      "seed": 3,
      "space": {"kind": "finite", "labels": 2},
      "fitness": {"lambda": 0.0, "phi": {"family": "table", "values": [0.0, 0.9]}},
      "prior": {"kind": "dp", "c": 0.5, "base": {"pmf": [0.5, 0.5]}},
      "chain": {"n": 2, "samples": 1}
    })");
    REQUIRE(run_cli("balance", config, (tmp.path / "out").string()) == 0);
    const auto j = nlohmann::json::parse(slurp(tmp.path / "out" / "balance.json"));
    CHECK(j.at("tournament").get<double>() < 1e-12);
    CHECK(j.at("inverse").get<double>() < 1e-12);
}

TEST_CASE("oracle: neutral two-label law is uniform over counts") {
    TempDir tmp;
    const auto config = write_file(tmp.path / "cfg.json", R"({
      "seed": 9,
      "space": {"kind": "finite", "labels": 2},
      "fitness": {"lambda": 0.0, "phi": {"family": "zero"}},
      "prior": {"kind": "dp", "c": 2.0, "base": {"pmf": [0.5, 0.5]}, "fixed_mass": true},
      "chain": {"n": 2, "samples": 1},
      "oracle": {"law": "stationary"}
    })");
    REQUIRE(run_cli("oracle", config, (tmp.path / "out").string()) == 0);
    const auto csv = slurp(tmp.path / "out" / "oracle.csv");
    // alpha = (1,1): every count vector has probability 1/3
    std::size_t hits = 0;
    for (std::size_t pos = csv.find("0.3333"); pos != std::string::npos;
         pos = csv.find("0.3333", pos + 1))
        ++hits;
    CHECK(hits == 3);
}

TEST_CASE("measure JSON round-trips across random measures") {
    RngStream rng(606);
    for (int rep = 0; rep < 20; ++rep) {
        MeasureRepr m;
        if (rep % 2) {
            std::vector<double> pmf(4);
            double s = 0.0;
            for (double& p : pmf) s += (p = 0.05 + rng.uniform01());
            for (double& p : pmf) p /= s;
            m = MeasureRepr::finite_pmf(pmf);
        } else {
            std::vector<double> dens(32);
            for (double& d : dens) d = 0.1 + rng.uniform01();
            m.space = SpaceSpec::unit_interval(32);
            m.density = dens;
            m.atoms = {{rng.uniform01() * 0.5, 0.2}, {0.5 + rng.uniform01() * 0.5, 0.1}};
            m.sort_atoms();
            m.normalize();
        }
        const auto back = measure_from_json(to_json(m));
        CHECK(tv_distance(m, back) == 0.0);
        CHECK(back.space == m.space);
    }
}

TEST_CASE("simulate on the interval reports KS against the derived limit") {
    TempDir tmp;
    const auto config = write_file(tmp.path / "cfg.json", R"({
      "seed": 2024,
      "space": {"kind": "interval", "grid": 1024},
      "fitness": {"lambda": 0.0, "phi": {"family": "power", "x_o": 0.3, "p": 2.0}},
      "prior": {"kind": "dp", "c": 1.0, "base": "uniform"},
      "chain": {"n": 200, "samples": 50},
      "report": {"ks_vs_limit": true}
    })");
    REQUIRE(run_cli("simulate", config, (tmp.path / "out").string()) == 0);
    const auto j = nlohmann::json::parse(slurp(tmp.path / "out" / "summary.json"));
    REQUIRE(j.contains("ks_vs_limit"));
    CHECK(j.at("limit_regime") == "dp_lambda0_density");
    CHECK(j.at("ks_vs_limit").get<double>() < 0.2);  // loose band at this small n
    CHECK(fs::exists(tmp.path / "out" / "values.csv"));
}

TEST_CASE("sweep: table file carries the expected columns") {
    TempDir tmp;
    const auto config = write_file(tmp.path / "cfg.json", R"({
      "seed": 13,
      "space": {"kind": "finite", "labels": 2},
      "fitness": {"lambda": 2.0, "phi": {"family": "table", "values": [0.0, 1.5]}},
      "prior": {"kind": "mixture", "components": [
        {"weight": 0.5, "pmf": [0.8, 0.2]},
        {"weight": 0.5, "pmf": [0.3, 0.7]}]},
      "sweep": {"lambdas": [2.0], "ns": [4, 8], "metric": "TV",
                "samples_per_cell": 2000, "thin_factor": 2}
    })");
    REQUIRE(run_cli("sweep", config, (tmp.path / "out").string()) == 0);
    const auto csv = slurp(tmp.path / "out" / "sweep.csv");
    CHECK(csv.rfind("lambda,n,metric,value,target_regime\r\n", 0) == 0);
    CHECK(csv.find("lambda_gt1") != std::string::npos);
}
