#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "dispersive/cli.hpp"

using namespace dispersive;
using namespace dispersive::cli;
using nlohmann::json;

namespace {

struct Result {
    int code;
    std::string out, err;
};

Result run(std::vector<std::string> args) {
    args.insert(args.begin(), "dispersive");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    int code = dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

std::filesystem::path scratch_dir(const std::string& name) {
    auto d = std::filesystem::temp_directory_path() / ("dispersive_cli_test_" + name);
    std::filesystem::remove_all(d);
    std::filesystem::create_directories(d);
    return d;
}

}  // namespace

TEST(Coeffs, ExactRationalsInJson) {
    auto r = run({"coeffs", "--scheme", "TDCCS-T8"});
    ASSERT_EQ(r.code, kOk) << r.err;
    auto j = json::parse(r.out);
    EXPECT_EQ(j["coefficients"]["a"]["num"], "58021");
    EXPECT_EQ(j["coefficients"]["a"]["den"], "14120");
    EXPECT_EQ(j["coefficients"]["alpha"]["num"], "-1261");
    EXPECT_EQ(j["coefficients"]["alpha"]["den"], "3530");
    EXPECT_EQ(j["formal_order"], 8);
    EXPECT_EQ(j["truncation"]["derivative_index"], 11);
}

TEST(Coeffs, CsvListsEverySlot) {
    auto r = run({"coeffs", "--scheme", "TDCNCS-T8", "--format", "csv"});
    ASSERT_EQ(r.code, kOk);
    EXPECT_EQ(first_line(r.out), "slot,num,den,decimal");
    EXPECT_NE(r.out.find("alpha,205,472,"), std::string::npos);
}

TEST(Coeffs, LeastSquaresGivesDecimals) {
    auto r = run({"coeffs", "--scheme", "TDCCS-LS-T8"});
    ASSERT_EQ(r.code, kOk) << r.err;
    auto j = json::parse(r.out);
    EXPECT_FALSE(j["exact"].get<bool>());
    EXPECT_TRUE(j["decimal"]["alpha"].is_number());
}

TEST(Efficiency, CsvHeaderAndValue) {
    auto r = run({"efficiency", "--schemes", "TDCNCS-T8", "--eps", "1e-3"});
    ASSERT_EQ(r.code, kOk) << r.err;
    std::istringstream is(r.out);
    std::string header, row;
    std::getline(is, header);
    std::getline(is, row);
    EXPECT_EQ(header, "scheme,eps_t,omega_f,e");
    auto parts = std::vector<std::string>();
    std::stringstream ss(row);
    for (std::string p; std::getline(ss, p, ',');) parts.push_back(p);
    ASSERT_EQ(parts.size(), 4u);
    EXPECT_EQ(parts[0], "TDCNCS-T8");
    EXPECT_NEAR(std::stod(parts[2]), 1.576, 0.002);
    EXPECT_NEAR(std::stod(parts[3]), 0.5018, 0.002);
}

TEST(Spectrum, CsvHeader) {
    auto r = run({"spectrum", "--scheme", "TDCCS-T8", "--samples", "11"});
    ASSERT_EQ(r.code, kOk) << r.err;
    EXPECT_EQ(first_line(r.out), "omega,psi,omega_cubed,R");
}

TEST(Stability, CsvAndEigenvalueFile) {
    auto dir = scratch_dir("stability");
    auto r = run({"stability", "--scheme", "TDCCS-T8", "--N", "100", "--out", dir.string()});
    ASSERT_EQ(r.code, kOk) << r.err;
    EXPECT_EQ(first_line(r.out), "scheme,N,max_abs,max_real,intercept,cfl");
    std::ifstream f(dir / "eigenvalues.csv");
    std::string h;
    std::getline(f, h);
    EXPECT_EQ(h, "m,re,im");
}

TEST(FilterAnalyze, JsonReportsNoAmplification) {
    auto r = run({"filter-analyze", "--filter", "F12:0.4", "--format", "json"});
    ASSERT_EQ(r.code, kOk) << r.err;
    auto j = json::parse(r.out);
    EXPECT_LE(j["max_mode_gain"].get<double>(), 1.0 + 1e-12);
    auto c = run({"filter-analyze", "--filter", "F8:0.2"});
    EXPECT_EQ(first_line(c.out), "omega,T");
}

TEST(Run, LinearWaveReportsLinf) {
    auto dir = scratch_dir("run");
    auto r = run({"run", "--example", "linear", "--scheme", "tdcncs", "--N", "20", "--snapshots", "0.5",
                  "--out", dir.string()});
    ASSERT_EQ(r.code, kOk) << r.err;
    auto j = json::parse(r.out);
    EXPECT_NEAR(j["Linf"].get<double>(), 1.6089e-9, 0.1 * 1.6089e-9);
    EXPECT_EQ(j["scheme"], "TDCNCS-T8");
    EXPECT_TRUE(std::filesystem::exists(dir / "final.csv"));
    std::ifstream f(dir / "snapshot_0.csv");
    std::string h;
    std::getline(f, h);
    EXPECT_EQ(h, "x,u_numeric,u_exact,abs_error");
}

TEST(Converge, CsvHeaderAndRows) {
    auto r = run({"converge", "--example", "linear", "--scheme", "tdccs", "--Ns", "10,20"});
    ASSERT_EQ(r.code, kOk) << r.err;
    EXPECT_EQ(first_line(r.out), "N,Linf,L1,L2,rate_inf,rate_1,rate_2");
    EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 3);
}

TEST(Config, DumpReloadIsByteIdentical) {
    auto dir = scratch_dir("config");
    auto a = run({"run", "--example", "soliton", "--N", "40", "--t-final", "0.25", "--filter", "F10:0.2:5",
                  "--dump-config"});
    ASSERT_EQ(a.code, kOk);
    {
        std::ofstream f(dir / "c.json");
        f << a.out;
    }
    auto b = run({"--config", (dir / "c.json").string(), "--dump-config"});
    ASSERT_EQ(b.code, kOk) << b.err;
    EXPECT_EQ(a.out, b.out);
    auto cfg = parse_config(a.out);
    EXPECT_EQ(dump_config(cfg), a.out);
    EXPECT_EQ(*cfg.t_final, 0.25);
    EXPECT_EQ(cfg.command, "run");
}

TEST(Config, EmptyObjectGivesDefaults) {
    auto cfg = parse_config("{}");
    EXPECT_EQ(dump_config(cfg), dump_config(CliConfig{}));
    EXPECT_EQ(cfg.seed, 12345u);
    EXPECT_FALSE(cfg.t_final.has_value());
}

TEST(Config, PartialObjectOverrides) {
    auto cfg = parse_config(R"({"example": "soliton", "N": 40})");
    EXPECT_EQ(cfg.example, "soliton");
    EXPECT_EQ(cfg.N, 40);
    EXPECT_EQ(cfg.order, 8);
}

TEST(Config, FlagsOverrideFile) {
    auto dir = scratch_dir("override");
    {
        std::ofstream f(dir / "c.json");
        f << R"({"command": "coeffs", "scheme": "TDCNCS-T4", "N": 12})";
    }
    auto r = run({"--config", (dir / "c.json").string(), "--N", "30", "--dump-config"});
    auto j = json::parse(r.out);
    EXPECT_EQ(j["N"], 30);
    EXPECT_EQ(j["scheme"], "TDCNCS-T4");
}

TEST(Config, ParseErrorHasLineAndColumn) {
    try {
        parse_config("{\n  \"N\": 40,\n  oops\n}");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find(":3:"), std::string::npos) << e.what();
    }
}

TEST(Config, UnknownKeyRejected) {
    EXPECT_THROW(parse_config(R"({"grid": 40})"), ConfigError);
    EXPECT_THROW(parse_config(R"({"N": "forty"})"), ConfigError);
    EXPECT_THROW(parse_config("[1, 2]"), ConfigError);
}

TEST(ExitCodes, UsageErrors) {
    EXPECT_EQ(run({}).code, kUsage);
    EXPECT_EQ(run({"frobnicate"}).code, kUsage);
    EXPECT_EQ(run({"coeffs", "--scheme", "TDCNCS-T9"}).code, kUsage);
    EXPECT_EQ(run({"coeffs", "--scheme", "TDCNCS-T8", "--format", "xml"}).code, kUsage);
    EXPECT_EQ(run({"run", "--N", "abc"}).code, kUsage);
    EXPECT_EQ(run({"run", "--bogus", "1"}).code, kUsage);
    auto r = run({"coeffs", "--scheme", "TDCNCS-T9"});
    EXPECT_NE(r.err.find("TDCCS-LS"), std::string::npos);
}

TEST(ExitCodes, DivergenceIsNumerical) {
    auto r = run({"run", "--example", "linear", "--N", "40", "--dt-rule", "fixed:0.05", "--t-final", "50"});
    EXPECT_EQ(r.code, kNumerical);
    EXPECT_NE(r.err.find("numerical failure"), std::string::npos);
}

TEST(ExitCodes, SingularOperatorIsNumerical) {
    EXPECT_EQ(run({"stability", "--scheme", "TDCCS-T6", "--N", "32"}).code, kNumerical);
}

TEST(ExitCodes, HelpAndVersion) {
    EXPECT_EQ(run({"--help"}).code, kOk);
    EXPECT_EQ(run({"--version"}).code, kOk);
}

TEST(Binary, ProcessExitCodes) {
    const std::string exe = DISPERSIVE_CLI_PATH;
    auto status = [&](const std::string& args) {
        int s = std::system((exe + " " + args + " > /dev/null 2>&1").c_str());
        return WEXITSTATUS(s);
    };
    EXPECT_EQ(status("coeffs --scheme TDCCS-T8"), 0);
    EXPECT_EQ(status("coeffs --scheme NOPE"), 1);
    EXPECT_EQ(status("run --example linear --N 40 --dt-rule fixed:0.05 --t-final 50"), 2);
}
