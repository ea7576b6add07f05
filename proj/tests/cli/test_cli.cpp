#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

const fs::path kSource = FESRAM_SOURCE_DIR;
const fs::path kBinary = FESRAM_CLI;

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("fesram_cli_" + name);
    fs::remove_all(p);
    return p;
}

int run(const std::string& args) {
    const std::string cmd = "\"" + kBinary.string() + "\" " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::vector<std::vector<double>> read_csv(const fs::path& p, std::vector<std::string>* header = nullptr) {
    std::ifstream f(p);
    std::string line;
    std::getline(f, line);
    if (header) {
        std::stringstream hs(line);
        std::string h;
        while (std::getline(hs, h, ',')) header->push_back(h);
    }
    std::vector<std::vector<double>> rows;
    while (std::getline(f, line)) {
        std::stringstream ls(line);
        std::string cell;
        std::vector<double> row;
        while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
        rows.push_back(row);
    }
    return rows;
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

void check_manifest(const fs::path& dir) {
    const auto m = read_json(dir / "manifest.json");
    std::set<std::string> listed;
    for (const auto& f : m["files"]) listed.insert(f.get<std::string>());
    for (const auto& e : fs::directory_iterator(dir)) CHECK(listed.count(e.path().filename().string()) == 1);
    CHECK(m["config_digest"].get<std::string>().size() == 16);
}

}  // namespace

TEST_CASE("sim reproduces the rc golden") {
    const auto out = scratch("rc");
    REQUIRE(run("sim \"" + (kSource / "tests/golden/netlists/rc.cir").string() + "\" --out \"" + out.string() + "\"") == 0);
    std::vector<std::string> header;
    const auto got = read_csv(out / "tran1.csv", &header);
    const auto want = read_csv(kSource / "tests/golden/rc_tran.csv");
    REQUIRE(got.size() == want.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < got.size(); ++i) {
        REQUIRE(got[i].size() == want[i].size());
        for (std::size_t j = 0; j < got[i].size(); ++j) worst = std::max(worst, std::abs(got[i][j] - want[i][j]));
    }
    CHECK(worst <= 1e-9);

    // the golden itself tracks the analytic charge curve (first order step error only)
    std::size_t out_col = 0;
    while (header[out_col] != "out_volts") ++out_col;
    double analytic = 0.0;
    for (const auto& row : want) {
        if (row[0] <= 1e-15) continue;
        analytic = std::max(analytic, std::abs(row[out_col] - (1.0 - std::exp(-(row[0] - 1e-15) / 1e-9))));
    }
    CHECK(analytic < 2e-3);
    check_manifest(out);
}

TEST_CASE("sim error exit codes") {
    const auto out = scratch("bad");
    CHECK(run("sim \"" + (kSource / "tests/golden/malformed/01_bad_suffix.cir").string() + "\" --out \"" +
              out.string() + "\"") == 1);
    CHECK(run("sim /definitely/missing.cir --out \"" + out.string() + "\"") == 1);
    CHECK(run("bench no-such-scenario --out \"" + out.string() + "\"") == 1);
    CHECK(run("analyze no-such-kind --out \"" + out.string() + "\"") == 1);
    CHECK(run("--bogus-flag") == 1);
}

TEST_CASE("bench assertions drive the exit code") {
    const auto ok = scratch("mc_ok");
    REQUIRE(run("bench mc-yield --sigma-vth 0 --runs 10 --out \"" + ok.string() + "\"") == 0);
    const auto r = read_json(ok / "report.json");
    CHECK(r["metrics"]["yield"].get<double>() == 1.0);
    CHECK(r["pass"].get<bool>());
    check_manifest(ok);

    const auto bad = scratch("mc_bad");
    CHECK(run("bench mc-yield --sigma-vth 400m --runs 10 --out \"" + bad.string() + "\"") == 3);
    CHECK_FALSE(read_json(bad / "report.json")["pass"].get<bool>());
}

TEST_CASE("restore matrix") {
    const auto out = scratch("matrix");
    REQUIRE(run("bench restore-matrix --vdd-targets 0.25,0.5,0.75,1.0 --out \"" + out.string() + "\"") == 0);
    const auto r = read_json(out / "report.json");
    CHECK(r["metrics"]["results"]["0"]["correct"].get<int>() == 8);
    CHECK(r["metrics"]["results"]["1"]["correct"].get<int>() == 8);
}

TEST_CASE("outputs are deterministic") {
    const auto a = scratch("det_a");
    const auto b = scratch("det_b");
    // identical command line apart from the output directory
    REQUIRE(run("bench mc-yield --runs 12 --seed 5 --out \"" + a.string() + "\"") == 0);
    REQUIRE(run("bench mc-yield --runs 12 --seed 5 --out \"" + b.string() + "\"") == 0);
    CHECK(slurp(a / "report.json") == slurp(b / "report.json"));
    CHECK(slurp(a / "mc_runs.csv") == slurp(b / "mc_runs.csv"));
    const auto c = scratch("det_c");
    REQUIRE(run("bench mc-yield --runs 12 --seed 6 --out \"" + c.string() + "\"") == 0);
    CHECK(read_json(a / "report.json")["metrics"]["run_seeds"] != read_json(c / "report.json")["metrics"]["run_seeds"]);
}

TEST_CASE("analyze outputs") {
    const auto snm = scratch("snm");
    REQUIRE(run("analyze snm --mode hold --topology nvsram --state 1 --out \"" + snm.string() + "\"") == 0);
    CHECK(read_json(snm / "snm.json")["monostable"].get<bool>());

    const auto halid = scratch("halid");
    REQUIRE(run("analyze halid --out \"" + halid.string() + "\"") == 0);
    bool anchor = false;
    for (const auto& row : read_csv(halid / "halid.csv")) {
        if (row[0] == 4.0) anchor = std::abs(row[1] - 1e-8) / 1e-8 < 1e-8;
    }
    CHECK(anchor);

    const auto mw = scratch("mw");
    REQUIRE(run("analyze mw --out \"" + mw.string() + "\"") == 0);
    const auto m = read_json(mw / "mw.json");
    CHECK(m["mw_gate_volts"].get<double>() > m["mw_gate_drain_volts"].get<double>());
    check_manifest(mw);
}

TEST_CASE("config file and environment overrides") {
    const auto dir = scratch("cfg");
    fs::create_directories(dir);
    {
        std::ofstream f(dir / "o.ini");
        f << "[montecarlo]\nruns = 3\n";
    }
    const auto out = dir / "out";
    REQUIRE(run("--config \"" + (dir / "o.ini").string() + "\" bench mc-yield --sigma-vth 0 --out \"" + out.string() +
                "\"") == 0);
    CHECK(read_json(out / "report.json")["metrics"]["runs"].get<int>() == 3);
    {
        std::ofstream f(dir / "typo.ini");
        f << "[montecarlo]\nrunz = 3\n";
    }
    CHECK(run("--config \"" + (dir / "typo.ini").string() + "\" bench mc-yield --out \"" + out.string() + "\"") == 1);
    const std::string env = "FERRO_CONFIG=\"" + (dir / "o.ini").string() + "\" ";
    const auto out2 = dir / "out2";
    const int st = std::system((env + "\"" + kBinary.string() + "\" bench mc-yield --sigma-vth 0 --out \"" +
                                out2.string() + "\" >/dev/null 2>&1")
                                   .c_str());
    CHECK(WEXITSTATUS(st) == 0);
    CHECK(read_json(out2 / "report.json")["metrics"]["runs"].get<int>() == 3);
}
