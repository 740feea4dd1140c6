#include <doctest.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "csv_io.hpp"
#include "spikegam/errors.hpp"

using namespace spikegam;
using namespace spikegam::cli;
namespace fs = std::filesystem;

namespace {

int run(std::vector<std::string> args) {
    args.insert(args.begin(), "spikegam");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    return run_cli(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Fresh scratch directory under the system temp path.
struct Scratch {
    fs::path dir;
    explicit Scratch(const std::string& tag) {
        dir = fs::temp_directory_path() / ("spikegam_test_cli_" + tag);
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~Scratch() { fs::remove_all(dir); }
    std::string operator/(const std::string& name) const { return (dir / name).string(); }
};

}  // namespace

TEST_CASE("csv records split on unquoted commas") {
    CHECK(split_csv_line("a,b,,c") == std::vector<std::string>{"a", "b", "", "c"});
    CHECK(split_csv_line("\"x,y\",2") == std::vector<std::string>{"x,y", "2"});
    CHECK(split_csv_line("\"say \"\"hi\"\"\",1") == std::vector<std::string>{"say \"hi\"", "1"});
    CHECK_THROWS_AS(split_csv_line("\"open,1"), InvalidInput);
}

TEST_CASE("csv reader parses numbers and rejects malformed tables") {
    std::istringstream good("y, a ,b\r\n1,2,3\r\n\r\n4,5e-1,+6\n");
    const CsvTable t = read_csv(good);
    CHECK(t.header == std::vector<std::string>{"y", "a", "b"});
    REQUIRE(t.rows() == 2);
    CHECK(t.columns[1][1] == doctest::Approx(0.5));
    CHECK(t.columns[2][1] == 6.0);

    auto fails = [](const std::string& text) {
        std::istringstream in(text);
        CHECK_THROWS_AS(read_csv(in), InvalidInput);
    };
    fails("");
    fails("y,a\n");
    fails("y,a\n1,2\n3\n");
    fails("y,y\n1,2\n");
    fails("y,\n1,2\n");
    fails("y,a\n1,abc\n");
    fails("y,a\n1,\n");
    fails("y,a\n1,nan\n");
    fails("y,a\n1,inf\n");
}

TEST_CASE("column roles follow the response and linear-only lists") {
    std::istringstream in("a,y,b,c\n1,2,3,4\n5,6,7,8\n");
    const CsvTable t = read_csv(in);
    const RawDataset raw = to_raw_dataset(t, "y", {"c"});
    CHECK(raw.y == std::vector<double>{2, 6});
    CHECK(raw.linear_names == std::vector<std::string>{"c"});
    CHECK(raw.nonlinear_names == std::vector<std::string>{"a", "b"});
    CHECK(raw.x_nonlinear[1] == std::vector<double>{3, 7});
    CHECK_THROWS_AS(to_raw_dataset(t, "q", {}), InvalidInput);
    CHECK_THROWS_AS(to_raw_dataset(t, "y", {"zz"}), InvalidInput);
    CHECK_THROWS_AS(to_raw_dataset(t, "y", {"y"}), InvalidInput);
}

TEST_CASE("doubles are written in round-trip form") {
    for (double v : {0.1, -1.0 / 3.0, 1e-300, 123456789.125, 0.0}) {
        const std::string s = format_double(v);
        CHECK(std::stod(s) == v);
    }
    CHECK(format_double(std::nan("")) == "NA");
    CHECK(csv_field("plain") == "plain");
    CHECK(csv_field("a,b") == "\"a,b\"");
}

TEST_CASE("fit on generated data writes every table and reruns byte for byte") {
    Scratch s("fit");
    REQUIRE(run({"generate", "--n", "400", "--d-zero", "2", "--d-lin", "2", "--d-nonlin", "2", "--sigma-eps",
                 "0.25", "--seed", "11", "--out", s / "d.csv", "--truth", s / "truth.json"}) == kSuccess);
    const std::vector<std::string> base{"fit",    "--data",  s / "d.csv", "--response",   "y",
                                        "--method", "both",  "--nwarm",   "300",          "--nkept",
                                        "300",    "--K",     "12",        "--max-cycles", "5000"};
    auto with_out = [&](const std::string& dir) {
        auto a = base;
        a.push_back("--out");
        a.push_back(s / dir);
        return a;
    };
    REQUIRE(run(with_out("a")) == kSuccess);
    REQUIRE(run(with_out("b")) == kSuccess);
    for (const char* f : {"effects.csv", "coefficients.csv", "curves.csv", "chains.csv", "diagnostics.json"}) {
        INFO(f);
        CHECK(slurp(s.dir / "a" / f) == slurp(s.dir / "b" / f));
    }

    const auto diag = nlohmann::json::parse(slurp(s.dir / "a" / "diagnostics.json"));
    CHECK(diag["config"]["settings"]["sigma_beta0"] == 1e5);
    CHECK(diag["config"]["settings"]["s_u"] == 1000.0);
    CHECK(diag["config"]["settings"]["rho_beta"] == 0.5);
    CHECK(diag["fits"].size() == 2);
    CHECK(diag["fits"][1]["converged"] == true);
    CHECK(diag["fits"][1]["elbo"].size() == diag["fits"][1]["cycles"].get<std::size_t>());
    CHECK(diag["overlap"]["num_predictors"] == 6);
    CHECK(diag["data"]["predictors"][0]["K"] == 12);

    const auto truth = nlohmann::json::parse(slurp(s.dir / "truth.json"));
    const std::string effects_text = slurp(s.dir / "a" / "effects.csv");
    int correct = 0;
    for (const auto& p : truth["predictors"]) {
        const std::string row_mcmc = "mcmc," + p["name"].get<std::string>() + ",continuous," +
                                     p["type"].get<std::string>() + ",";
        if (effects_text.find(row_mcmc) != std::string::npos) ++correct;
    }
    CHECK(correct >= 4);

    const auto timing = nlohmann::json::parse(slurp(s.dir / "a" / "timing.json"));
    CHECK(timing["mcmc"]["seconds"].get<double>() >= 0.0);
}

TEST_CASE("binary fits carry no error-variance fields") {
    Scratch s("binary");
    REQUIRE(run({"generate", "--n", "300", "--d-zero", "1", "--d-lin", "1", "--d-nonlin", "0", "--linear-scale",
                 "2", "--family", "bernoulli", "--seed", "3", "--out", s / "d.csv"}) == kSuccess);
    const int code = run({"fit", "--data", s / "d.csv", "--response", "y", "--family", "bernoulli", "--method",
                          "both", "--nwarm", "200", "--nkept", "200", "--K", "8", "--out", s / "o"});
    CHECK((code == kSuccess || code == kNotConverged));
    const std::string chains = slurp(s.dir / "o" / "chains.csv");
    CHECK(chains.find("sigma2_eps") == std::string::npos);
    CHECK(chains.find("a_eps") == std::string::npos);
    const std::string diag = slurp(s.dir / "o" / "diagnostics.json");
    CHECK(diag.find("sigma2_eps") == std::string::npos);
    const std::string curves = slurp(s.dir / "o" / "curves.csv");
    CHECK(curves.find('\n') == curves.size() - 1);  // header only, nothing is nonlinear
}

TEST_CASE("input and parameter errors exit with code 2") {
    Scratch s("errors");
    {
        std::ofstream out(s / "d.csv");
        out << "y,a,b\n";
        for (int i = 0; i < 40; ++i) out << (i % 3) << ',' << i * 0.5 << ',' << (i * 7 % 11) << '\n';
    }
    const std::string data = s / "d.csv";
    const std::string out = s / "o";
    CHECK(run({"fit", "--data", data, "--response", "y", "--family", "bernoulli", "--out", out}) == kInputError);
    CHECK(run({"fit", "--data", data, "--response", "nope", "--out", out}) == kInputError);
    CHECK(run({"fit", "--data", data, "--response", "y", "--linear-only", "a,zz", "--out", out}) == kInputError);
    CHECK(run({"fit", "--data", s / "missing.csv", "--response", "y", "--out", out}) == kInputError);
    CHECK(run({"fit", "--data", data, "--response", "y", "--tau", "1.2", "--out", out}) == kInputError);
    CHECK(run({"fit", "--data", data, "--response", "y", "--method", "gibbs", "--out", out}) == kInputError);
    CHECK(run({"fit", "--data", data, "--response", "y", "--rho-u", "2", "--out", out}) == kInputError);
    CHECK(run({"fit", "--data", data}) == kInputError);
    CHECK(run({"simulate", "--n", "100", "--tau", "0", "--out", out}) == kInputError);
    CHECK(run({"simulate", "--n", "100", "--test-draws", "10", "--out", out}) == kInputError);
    CHECK(run({"simulate", "--n", "100", "--reps", "0", "--out", out}) == kInputError);
    CHECK(run({"frobnicate"}) == kInputError);
}

TEST_CASE("mfvb hitting the cycle cap exits with code 4 and still writes output") {
    Scratch s("cap");
    REQUIRE(run({"generate", "--n", "200", "--d-zero", "1", "--d-lin", "1", "--d-nonlin", "1", "--seed", "5",
                 "--out", s / "d.csv"}) == kSuccess);
    CHECK(run({"fit", "--data", s / "d.csv", "--response", "y", "--method", "mfvb", "--max-cycles", "3", "--out",
               s / "o"}) == kNotConverged);
    CHECK(fs::exists(s.dir / "o" / "effects.csv"));
    const auto diag = nlohmann::json::parse(slurp(s.dir / "o" / "diagnostics.json"));
    CHECK(diag["fits"][0]["converged"] == false);
    CHECK(diag["fits"][0]["cycles"] == 3);
}

TEST_CASE("single-cell simulation and benchmark runs complete") {
    Scratch s("study");
    REQUIRE(run({"simulate", "--n", "150", "--reps", "1", "--method", "both", "--nwarm", "100", "--nkept", "100",
                 "--K", "8", "--test-draws", "10000", "--out", s / "sim"}) == kSuccess);
    const std::string cells = slurp(s.dir / "sim" / "cells.csv");
    CHECK(cells.find("\nmcmc,150,1,1000,0.5,1,") != std::string::npos);
    CHECK(cells.find("\nmfvb,150,1,1000,0.1,1,") != std::string::npos);
    CHECK(slurp(s.dir / "sim" / "replications.csv").find(",NA,") == std::string::npos);

    REQUIRE(run({"benchmark", "--n", "100,200", "--reps", "1", "--nwarm", "50", "--nkept", "50", "--K", "8",
                 "--out", s / "bench"}) == kSuccess);
    const auto doc = nlohmann::json::parse(slurp(s.dir / "bench" / "benchmark.json"));
    CHECK(doc["methods"].size() == 2);
    CHECK(doc["methods"][0].contains("loglog_slope"));
}
