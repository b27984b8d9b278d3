#include "doctest.h"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "mixdecon/cli.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out, err;
};

Run run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = mixdecon::dispatch(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path fresh_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("mixdecon_cli_test_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

}  // namespace

TEST_SUITE("cli") {
    TEST_CASE("kernel check passes and writes a manifest") {
        const fs::path dir = fresh_dir("kernel");
        const Run r = run({"--out-dir", dir.string(), "kernel", "check"});
        CHECK(r.code == 0);
        CHECK(r.out.find("false") == std::string::npos);
        const std::string csv = slurp(dir / "kernel_check.csv");
        CHECK(csv.rfind("moment_index,value,pass\n", 0) == 0);
        const auto m = nlohmann::json::parse(slurp(dir / "kernel_check_manifest.json"));
        CHECK(m["command"] == "kernel check");
        CHECK(m.contains("versions"));
        CHECK(m.contains("outputs"));
    }

    TEST_CASE("help exits cleanly") {
        CHECK(run({"--help"}).code == 0);
        CHECK(run({"bounds", "report", "--help"}).code == 0);
    }

    TEST_CASE("usage errors exit 1 and name the flag") {
        const Run bogus = run({"kernel", "check", "--bogus"});
        CHECK(bogus.code == 1);
        CHECK(bogus.err.find("--bogus") != std::string::npos);
        const Run model = run({"--out-dir", fresh_dir("err").string(), "bounds", "report", "--model", "nosuch"});
        CHECK(model.code == 1);
        CHECK(model.err.find("--model") != std::string::npos);
        const Run out = run({"--out-dir", fresh_dir("err").string(), "bounds", "report", "--out", "../x.csv"});
        CHECK(out.code == 1);
        CHECK(run({}).code == 1);
    }

    TEST_CASE("bounds report gives a positive left constant") {
        const fs::path dir = fresh_dir("bounds");
        const Run r = run({"--out-dir", dir.string(), "bounds", "report", "--model", "uniform(m=1)", "--xi", "0.5",
                           "--b", "0.05"});
        REQUIRE(r.code == 0);
        std::istringstream csv(slurp(dir / "bounds.csv"));
        std::string header, row;
        std::getline(csv, header);
        std::getline(csv, row);
        std::vector<std::string> names, values;
        for (std::istringstream h(header); std::getline(h, names.emplace_back(), ',');) {}
        for (std::istringstream v(row); std::getline(v, values.emplace_back(), ',');) {}
        const auto at = std::find(names.begin(), names.end(), "c_lhs") - names.begin();
        REQUIRE(static_cast<std::size_t>(at) < values.size());
        CHECK(std::stod(values[at]) > 0.0);
    }

    TEST_CASE("rates run is byte identical across reruns") {
        const fs::path dir = fresh_dir("rates");
        fs::create_directories(dir);
        const fs::path cfg = dir / "study.ini";
        std::ofstream(cfg) << "[model]\nspec = exponential(scale=1)\n[target]\nspec = spline(qtilde=2)\n"
                              "[study]\nn_log2 = 10, 12, 14\nreplicates = 1\nseed = 3\ngrid_nodes = 4096\n"
                              "output = s\n";
        const fs::path a = dir / "a", b = dir / "b";
        REQUIRE(run({"--out-dir", a.string(), "rates", "run", "--config", cfg.string()}).code == 0);
        REQUIRE(run({"--out-dir", b.string(), "rates", "run", "--config", cfg.string()}).code == 0);
        for (const char* f : {"s_results.csv", "s_summary.csv"}) {
            const std::string x = slurp(a / f);
            CHECK_FALSE(x.empty());
            CHECK(x == slurp(b / f));
        }
        const Run fit = run({"--out-dir", a.string(), "rates", "fit", "--in", (a / "s_results.csv").string()});
        CHECK(fit.code == 0);
        CHECK(fs::exists(a / "rates_fit.csv"));
    }

    TEST_CASE("numeric failure exits 2 with a diagnostic") {
        const fs::path dir = fresh_dir("numeric");
        const Run r = run({"--out-dir", dir.string(), "--grid-nodes", "1024", "estimate", "--n", "500", "--nodes",
                           "10", "--max-iter", "1"});
        CHECK(r.code == 2);
        const std::string diag = slurp(dir / "diagnostic.txt");
        CHECK(diag.find("last_iterate:") != std::string::npos);
    }

    TEST_CASE("default out dir follows the environment") {
        ::setenv("MIXDECON_OUT_DIR", "/tmp/somewhere", 1);
        CHECK(mixdecon::default_out_dir() == "/tmp/somewhere");
        ::unsetenv("MIXDECON_OUT_DIR");
        CHECK(mixdecon::default_out_dir() == "mixdecon_out");
    }
}
