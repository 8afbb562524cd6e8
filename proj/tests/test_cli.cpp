#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "eulertop/cli.hpp"

using namespace eulertop;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() /
               ("eulertop_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

fs::path write_config(const TempDir& dir, const json& j, const char* name = "config.json") {
    fs::path p = dir.path / name;
    std::ofstream out(p);
    out << j.dump(2);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json euler_equilibrium_config() {
    return json{
        {"system", {{"builtin", "euler3"}}},
        {"initial_state", {2.0, 0.0, 0.0}},
        {"integrator",
         {{"method", "rk4"}, {"step", 1e-2}, {"t_span", {0.0, 1.0}}}},
    };
}

cli::Options options_for(const fs::path& config, const fs::path& out) {
    cli::Options opts;
    opts.config_path = config.string();
    opts.out_dir = out.string();
    return opts;
}

}  // namespace

TEST_CASE("simulate writes a constant trajectory for an equilibrium") {
    TempDir dir;
    auto cfg = write_config(dir, euler_equilibrium_config());
    const int rc = cli::cmd_simulate(options_for(cfg, dir.path));
    CHECK(rc == 0);

    const std::string csv = slurp(dir.path / "trajectory.csv");
    REQUIRE_FALSE(csv.empty());
    std::istringstream lines(csv);
    std::string header;
    std::getline(lines, header);
    CHECK(header == "t,s,x1,x2,x3,I1,I2");
    std::string row;
    int rows = 0;
    while (std::getline(lines, row)) {
        CHECK(row.find(",2,0,0,4,4") != std::string::npos);
        ++rows;
    }
    CHECK(rows == 101);

    const json report = json::parse(slurp(dir.path / "report.json"));
    CHECK(report["termination"] == "completed");
    CHECK(report["invariants"][0]["max_drift"] == 0.0);
}

TEST_CASE("simulate reports deformed-integral drift within bounds") {
    TempDir dir;
    json cfg{
        {"system", {{"builtin", "cube_root_deform"}, {"coupling", 1.0}}},
        {"initial_state", {1.0, 2.0, 3.0}},
        {"integrator",
         {{"method", "adaptive"},
          {"abs_tol", 1e-10},
          {"rel_tol", 1e-10},
          {"t_span", {0.0, 0.4}},
          {"max_state_norm", 15.0}}},
    };
    const int rc = cli::cmd_simulate(options_for(write_config(dir, cfg), dir.path));
    CHECK(rc == 0);
    const json report = json::parse(slurp(dir.path / "report.json"));
    CHECK(report["termination"] == "completed");
    for (const auto& inv : report["invariants"])
        CHECK(inv["max_drift"].get<double>() <= 1e-8);
}

TEST_CASE("simulate rejects a dimension mismatch with exit code 1") {
    TempDir dir;
    json cfg = euler_equilibrium_config();
    cfg["initial_state"] = {2.0, 0.0, 0.0, 1.0};
    const int rc = cli::cmd_simulate(options_for(write_config(dir, cfg), dir.path));
    CHECK(rc == 1);
    CHECK_FALSE(fs::exists(dir.path / "trajectory.csv"));
}

TEST_CASE("simulate rejects malformed JSON with exit code 1") {
    TempDir dir;
    fs::path p = dir.path / "bad.json";
    std::ofstream(p) << "{ not json";
    cli::Options opts = options_for(p, dir.path);
    CHECK(cli::cmd_simulate(opts) == 1);
}

TEST_CASE("guarded termination exits with code 2") {
    TempDir dir;
    json cfg{
        {"system", {{"builtin", "euler3"}}},
        {"initial_state", {1.0, 2.0, 3.0}},
        {"integrator",
         {{"method", "rk4"}, {"step", 1e-3}, {"t_span", {0.0, 1.0}}, {"max_state_norm", 4.0}}},
    };
    const int rc = cli::cmd_simulate(options_for(write_config(dir, cfg), dir.path));
    CHECK(rc == 2);
    const json report = json::parse(slurp(dir.path / "report.json"));
    CHECK(report["termination"] == "singularity-guard");
}

TEST_CASE("verify passes for builtins and fails for a mutated field") {
    TempDir dir;

    SECTION("quartic deformation passes") {
        json cfg{
            {"system", {{"builtin", "quartic_deform"}, {"coupling", 1.0}}},
            {"initial_state", {1.844, -1.673, 1.407}},
            {"integrator",
             {{"method", "adaptive"}, {"abs_tol", 1e-12}, {"rel_tol", 1e-12},
              {"t_span", {0.0, 2.0}}}},
            {"seed", 7},
            {"verify", {{"points", 400}, {"guard_radius", 0.15}, {"drift_tol", 1e-8}}},
        };
        const int rc = cli::cmd_verify(options_for(write_config(dir, cfg), dir.path));
        CHECK(rc == 0);
        const json report = json::parse(slurp(dir.path / "report.json"));
        CHECK(report["pass"] == true);
        CHECK(report["orthogonality"]["pass"] == true);
        CHECK(report["divergence"]["pass"] == true);
    }

    SECTION("equilibrium run passes with zero drift") {
        json cfg = euler_equilibrium_config();
        cfg["verify"] = {{"points", 300}};
        const int rc = cli::cmd_verify(options_for(write_config(dir, cfg), dir.path));
        CHECK(rc == 0);
        const json report = json::parse(slurp(dir.path / "report.json"));
        CHECK(report["conservation"]["max_drift"] == 0.0);
    }

    SECTION("a user-supplied field with a typo fails orthogonality") {
        json cfg{
            {"system",
             {{"dimension", 3},
              {"deformations", {"0", "0"}},
              // sign error in the first component
              {"field", {"0 - x2 * x3", "x1 * x3", "x1 * x2"}}}},
            {"initial_state", {2.0, 0.0, 0.0}},
            {"integrator", {{"method", "rk4"}, {"step", 1e-2}, {"t_span", {0.0, 0.5}}}},
            {"verify", {{"points", 200}}},
        };
        const int rc = cli::cmd_verify(options_for(write_config(dir, cfg), dir.path));
        CHECK(rc == 2);
        const json report = json::parse(slurp(dir.path / "report.json"));
        CHECK(report["pass"] == false);
        CHECK(report["orthogonality"]["pass"] == false);
    }
}

TEST_CASE("derive prints the synthesized right-hand sides") {
    TempDir dir;

    SECTION("undeformed system") {
        json cfg = euler_equilibrium_config();
        cfg["output"] = {{"derived", "field.txt"}};
        const int rc = cli::cmd_derive(options_for(write_config(dir, cfg), dir.path));
        CHECK(rc == 0);
        const std::string text = slurp(dir.path / "field.txt");
        CHECK(text.find("dx1/dt = (x2 * x3)") != std::string::npos);
        CHECK(text.find("dx2/dt = (x1 * x3)") != std::string::npos);
        CHECK(text.find("dx3/dt = (x1 * x2)") != std::string::npos);
    }

    SECTION("deformed builtin reports deviation from the closed form") {
        json cfg{
            {"system", {{"builtin", "cube_root_deform"}, {"coupling", 1.0}}},
            {"output", {{"derived", "field.txt"}}},
            {"seed", 3},
        };
        const int rc = cli::cmd_derive(options_for(write_config(dir, cfg), dir.path));
        CHECK(rc == 0);
        const std::string text = slurp(dir.path / "field.txt");
        const auto pos = text.find("max sampled deviation from closed form: ");
        REQUIRE(pos != std::string::npos);
        const double dev = std::stod(text.substr(pos + 40));
        CHECK(dev <= 1e-12);
    }

    SECTION("zero deformation inline spec prints the undeformed field") {
        json cfg{
            {"system", {{"dimension", 3}, {"deformations", {"0", "0"}}}},
            {"output", {{"derived", "field.txt"}}},
        };
        const int rc = cli::cmd_derive(options_for(write_config(dir, cfg), dir.path));
        CHECK(rc == 0);
        const std::string text = slurp(dir.path / "field.txt");
        CHECK(text.find("dx1/dt = (x2 * x3)") != std::string::npos);
    }
}

TEST_CASE("sweep") {
    json base{
        {"system", {{"builtin", "cube_root_deform"}, {"coupling", 1.0}}},
        {"initial_state", {1.0, 2.0, 3.0}},
        {"integrator", {{"method", "rk4"}, {"step", 1e-3}, {"t_span", {0.0, 0.2}}}},
    };

    SECTION("deviation from the undeformed top decreases monotonically to zero") {
        TempDir dir;
        cli::Options opts = options_for(write_config(dir, base), dir.path);
        opts.workers = 2;
        const int rc = cli::cmd_sweep(opts, "g", {1.0, 0.1, 0.01, 0.0});
        CHECK(rc == 0);

        const std::string csv = slurp(dir.path / "sweep_summary.csv");
        std::istringstream lines(csv);
        std::string header;
        std::getline(lines, header);
        CHECK(header == "g,status,max_drift,deviation_from_euler");
        std::vector<double> devs;
        std::string row;
        while (std::getline(lines, row)) {
            const auto last_comma = row.rfind(',');
            devs.push_back(std::stod(row.substr(last_comma + 1)));
            CHECK(row.find("completed") != std::string::npos);
        }
        REQUIRE(devs.size() == 4);
        CHECK(devs[0] > devs[1]);
        CHECK(devs[1] > devs[2]);
        CHECK(devs[2] > devs[3]);
        CHECK(devs[3] == 0.0);
        CHECK(fs::exists(dir.path / "sweep_g=0.1.csv"));
    }

    SECTION("empty value list is a usage error") {
        TempDir dir;
        cli::Options opts = options_for(write_config(dir, base), dir.path);
        CHECK(cli::cmd_sweep(opts, "g", {}) == 1);
    }

    SECTION("a value that trips the guard is flagged without hurting the others") {
        TempDir dir;
        json cfg = base;
        cfg["integrator"]["t_span"] = {0.0, 0.3};
        cli::Options opts = options_for(write_config(dir, cfg), dir.path);
        const int rc = cli::cmd_sweep(opts, "g", {0.01, 50.0});
        CHECK(rc == 2);
        const std::string csv = slurp(dir.path / "sweep_summary.csv");
        std::istringstream lines(csv);
        std::string header, row_ok, row_bad;
        std::getline(lines, header);
        std::getline(lines, row_ok);
        std::getline(lines, row_bad);
        CHECK(row_ok.find("completed") != std::string::npos);
        CHECK(row_bad.find("completed") == std::string::npos);
    }
}

TEST_CASE("a dumped effective config reproduces the run bit for bit") {
    TempDir dir_a, dir_b;
    json cfg{
        {"system", {{"builtin", "quartic_deform"}, {"coupling", 0.8}}},
        {"initial_state", {1.844, -1.673, 1.407}},
        {"integrator",
         {{"method", "adaptive"}, {"abs_tol", 1e-9}, {"rel_tol", 1e-9}, {"t_span", {0.0, 1.7}},
          {"projection", true}}},
        {"seed", 99},
    };
    REQUIRE(cli::cmd_simulate(options_for(write_config(dir_a, cfg), dir_a.path)) == 0);
    const fs::path effective = dir_a.path / "effective_config.json";
    REQUIRE(fs::exists(effective));

    REQUIRE(cli::cmd_simulate(options_for(effective, dir_b.path)) == 0);
    CHECK(slurp(dir_a.path / "trajectory.csv") == slurp(dir_b.path / "trajectory.csv"));
    CHECK(slurp(dir_a.path / "report.json") == slurp(dir_b.path / "report.json"));
}

TEST_CASE("reparametrized runs write the clock column") {
    TempDir dir;
    json cfg{
        {"system", {{"builtin", "euler3"}}},
        {"initial_state", {1.0, 2.0, 3.0}},
        {"integrator", {{"method", "rk4"}, {"step", 1e-3}, {"t_span", {0.0, 0.2}}}},
        {"reparametrization", "2"},
    };
    REQUIRE(cli::cmd_simulate(options_for(write_config(dir, cfg), dir.path)) == 0);
    const std::string csv = slurp(dir.path / "trajectory.csv");
    std::istringstream lines(csv);
    std::string header, row;
    std::getline(lines, header);
    // skip to the last row
    std::string last;
    while (std::getline(lines, row))
        if (!row.empty()) last = row;
    // t = 0.2, s = 0.4
    CHECK(last.substr(0, last.find(',')) == "0.20000000000000001");
    const auto second = last.substr(last.find(',') + 1);
    CHECK(second.substr(0, second.find(',')) == "0.40000000000000002");
}
