#include "test_helpers.hpp"

#include "jacdet/cli.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace jacdet;
using Catch::Approx;

namespace {

namespace fs = std::filesystem;

fs::path temp_dir() {
    auto dir = fs::temp_directory_path() / "jacdet_cli_test";
    fs::create_directories(dir);
    return dir;
}

std::string write_config(const std::string& name, const Json& j) {
    const auto path = temp_dir() / name;
    std::ofstream out(path);
    out << j.dump(2);
    return path.string();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Json osc_config(int grid = 512) {
    Json j;
    j["schema"] = "jacdet-problem/1";
    j["kind"] = "driftless";
    j["n"] = 1;
    j["W"] = -M_PI * M_PI;
    j["boundary"] = "periodic";
    j["grid"] = grid;
    return j;
}

}  // namespace

TEST_CASE("config validation names the faulty JSON path", "[cli]") {
    SECTION("bad kind") {
        Json j = osc_config();
        j["kind"] = "elliptic";
        REQUIRE_THROWS_WITH(parse_problem_config(j), Catch::Matchers::ContainsSubstring("$.kind"));
    }
    SECTION("missing potential") {
        Json j = osc_config();
        j.erase("W");
        REQUIRE_THROWS_WITH(parse_problem_config(j), Catch::Matchers::ContainsSubstring("$.W"));
    }
    SECTION("bad boundary") {
        Json j = osc_config();
        j["boundary"] = "moebius";
        REQUIRE_THROWS_WITH(parse_problem_config(j),
                            Catch::Matchers::ContainsSubstring("$.boundary"));
    }
    SECTION("off-diagonal metric blocks") {
        Json j = osc_config();
        j["metrics"]["G0"] = Json::array({Json::array({1.0, 0.5}), Json::array({0.5, 1.0})});
        REQUIRE_THROWS_AS(parse_problem_config(j), InputError);
    }
}

TEST_CASE("non-SPD control Hessian exits with code 1 and a Legendre diagnostic", "[cli]") {
    Json j = osc_config(64);
    j["H"] = 4.0;  // -H negative definite fails strong Legendre
    RunConfig rc;
    rc.command = "det";
    rc.problem_path = write_config("bad_H.json", j);
    rc.s_single = 1.0;
    rc.out_path = (temp_dir() / "bad_H_out.json").string();
    REQUIRE(run_command(rc) == 1);
}

TEST_CASE("det command default sampling covers [0,1] with exact endpoint", "[cli]") {
    RunConfig rc;
    auto ss = cli::s_values(rc);
    REQUIRE(ss.size() == 101);
    REQUIRE(ss.front() == 0.0);
    REQUIRE(ss.back() == 1.0);
}

TEST_CASE("det report round trip", "[cli]") {
    RunConfig rc;
    rc.command = "det";
    rc.problem_path = write_config("osc.json", osc_config());
    rc.out_path = (temp_dir() / "osc_report.json").string();
    rc.s_lo = 0.0;
    rc.s_hi = 1.0;
    rc.s_steps = 11;
    REQUIRE(run_command(rc) == 0);

    Json rep = Json::parse(slurp(rc.out_path));
    REQUIRE(rep.at("schema") == "jacdet-report/1");
    REQUIRE(rep.contains("config"));
    REQUIRE(rep.at("config").at("kind") == "driftless");
    REQUIRE(rep.at("a").get<double>() == Approx(-2.0).margin(1e-8));
    REQUIRE(std::abs(rep.at("b").get<double>()) < 1e-8);
    const auto& samples = rep.at("samples");
    REQUIRE(samples.size() >= 11);
    REQUIRE(samples.back().at("s").get<double>() == 1.0);
    REQUIRE(samples.back().at("det_IK").get<double>() == Approx(-1.0).margin(1e-6));

    REQUIRE(fs::exists(rc.out_path + ".csv"));
    REQUIRE(fs::exists(rc.out_path + ".meta.json"));
    const std::string csv = slurp(rc.out_path + ".csv");
    REQUIRE(csv.rfind("s,det_Q,det_IK\n", 0) == 0);

    SECTION("byte-identical on rerun") {
        const std::string first = slurp(rc.out_path);
        REQUIRE(run_command(rc) == 0);
        REQUIRE(slurp(rc.out_path) == first);
    }
}

TEST_CASE("scan command finds the flat-potential band edges", "[cli]") {
    Json j;
    j["schema"] = "jacdet-problem/1";
    j["kind"] = "schrodinger";
    j["n"] = 1;
    j["R"] = 0.0;
    j["boundary"] = "periodic";
    j["grid"] = 512;

    RunConfig rc;
    rc.command = "scan";
    rc.problem_path = write_config("flat_schrodinger.json", j);
    rc.out_path = (temp_dir() / "scan.csv").string();
    rc.format = "csv";
    rc.lambda_lo = -100.0;
    rc.lambda_hi = 1.0;
    rc.verify = true;
    rc.m = 64;
    REQUIRE(run_command(rc) == 0);

    const std::string csv = slurp(rc.out_path);
    REQUIRE(csv.rfind("lambda0,order,kernel_dim\n", 0) == 0);
    std::istringstream lines(csv);
    std::string line;
    std::getline(lines, line);
    std::vector<std::array<double, 3>> rows;
    while (std::getline(lines, line)) {
        std::array<double, 3> row{};
        std::sscanf(line.c_str(), "%lf,%lf,%lf", &row[0], &row[1], &row[2]);
        rows.push_back(row);
    }
    REQUIRE(rows.size() == 2);
    REQUIRE(rows[0][0] == Approx(-4.0 * M_PI * M_PI).margin(1e-6));
    REQUIRE(rows[0][2] >= 1.0);  // oracle kernel dimension at the band edge
    REQUIRE(rows[1][0] == Approx(0.0).margin(1e-6));
    REQUIRE(rows[1][2] >= 1.0);

    SECTION("scan requires a schrodinger problem") {
        RunConfig bad = rc;
        bad.problem_path = write_config("osc2.json", osc_config(64));
        REQUIRE(run_command(bad) == 1);
    }
}

TEST_CASE("oracle command emits the spectrum schema", "[cli]") {
    RunConfig rc;
    rc.command = "oracle";
    rc.problem_path = write_config("osc3.json", osc_config(256));
    rc.out_path = (temp_dir() / "spectrum.json").string();
    rc.m = 64;
    REQUIRE(run_command(rc) == 0);
    Json rep = Json::parse(slurp(rc.out_path));
    REQUIRE(rep.at("schema") == "jacdet-spectrum/1");
    REQUIRE(rep.at("m") == 64);
    REQUIRE(rep.at("eigenvalues").size() > 30);
    REQUIRE(rep.at("constraint_residual").get<double>() <= 1e-8);
}

TEST_CASE("compare command passes on the oscillator", "[cli]") {
    RunConfig rc;
    rc.command = "compare";
    rc.problem_path = write_config("osc4.json", osc_config(512));
    rc.m = 64;
    std::ostringstream os;
    REQUIRE(cli::run_compare(rc, os) == 0);
    REQUIRE(os.str().find("PASS") != std::string::npos);
    REQUIRE(os.str().find("FAIL") == std::string::npos);
}

TEST_CASE("golden regression: seeded Fourier problem", "[cli]") {
    const char* env = std::getenv("JACDET_GOLDEN_DIR");
    const fs::path golden_dir = env ? fs::path(env) : fs::path(JACDET_SOURCE_DIR) / "tests" / "golden";
    const fs::path golden = golden_dir / "fourier_seed7_det.json";

    Json j;
    j["schema"] = "jacdet-problem/1";
    j["kind"] = "driftless";
    j["n"] = 1;
    j["W"]["fourier"]["a0"] = 0.8;
    j["W"]["fourier"]["cos"] = Json::array({1.5, -0.7, 0.3});
    j["W"]["fourier"]["sin"] = Json::array({-2.0, 0.4, 1.1});
    j["boundary"] = "periodic";
    j["grid"] = 512;

    RunConfig rc;
    rc.command = "det";
    rc.problem_path = write_config("fourier7.json", j);
    rc.out_path = (temp_dir() / "fourier7_report.json").string();
    rc.s_lo = 0.0;
    rc.s_hi = 2.0;
    rc.s_steps = 21;
    REQUIRE(run_command(rc) == 0);
    Json got = Json::parse(slurp(rc.out_path));

    if (!fs::exists(golden)) {
        fs::create_directories(golden_dir);
        std::ofstream out(golden);
        out << got.dump(2) << "\n";
        WARN("golden file created: " + golden.string());
        return;
    }
    Json want = Json::parse(slurp(golden.string()));
    REQUIRE(got.at("a").get<double>() == Approx(want.at("a").get<double>()).epsilon(1e-12));
    REQUIRE(got.at("trace_K").get<double>() ==
            Approx(want.at("trace_K").get<double>()).epsilon(1e-12));
    const auto& gs = got.at("samples");
    const auto& ws = want.at("samples");
    REQUIRE(gs.size() == ws.size());
    for (size_t i = 0; i < gs.size(); ++i)
        REQUIRE(gs[i].at("det_IK").get<double>() ==
                Approx(ws[i].at("det_IK").get<double>()).margin(1e-12));
}

TEST_CASE("the installed binary runs end to end", "[cli]") {
    const std::string bin = JACDET_CLI_PATH;
    const std::string cfg = write_config("osc_bin.json", osc_config(256));
    const std::string out = (temp_dir() / "bin_report.json").string();
    const std::string cmd = bin + " det --problem " + cfg + " --s 1 --out " + out;
    REQUIRE(std::system(cmd.c_str()) == 0);
    Json rep = Json::parse(slurp(out));
    REQUIRE(rep.at("samples").back().at("det_IK").get<double>() == Approx(-1.0).margin(1e-5));
}
