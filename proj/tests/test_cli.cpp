#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "cli.hpp"

using namespace sparsemix;
using sparsemix::cli::Json;

namespace {

struct Run {
    int status;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int status = cli::run_cli(std::move(args), out, err);
    return {status, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = std::filesystem::temp_directory_path() /
               ("sparsemix_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        std::filesystem::remove_all(dir_);
        std::filesystem::create_directories(dir_);
    }
    void TearDown() override { std::filesystem::remove_all(dir_); }

    std::string write(const std::string& name, const std::string& contents) {
        const auto path = dir_ / name;
        std::ofstream(path) << contents;
        return path.string();
    }
    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    std::filesystem::path dir_;
};

}  // namespace

TEST_F(CliTest, StatAll) {
    const auto input = write("pvals.txt", "0.1\n0.3\n0.6\n0.9\n");
    const auto r = run({"stat", "--input", input, "--stat", "all"});
    ASSERT_EQ(r.status, 0) << r.err;
    const auto j = Json::parse(r.out);
    EXPECT_NEAR(j["hc"].get<double>(), 1.0, 1e-12);
    EXPECT_NEAR(j["bj"].get<double>(), 0.36932606149229115, 1e-12);
    EXPECT_NEAR(j["log_alr"].get<double>(), 0.67037826168203641, 1e-12);
    EXPECT_EQ(j["version"], std::string(kVersion));
    EXPECT_EQ(j["n"], 4);
}

TEST_F(CliTest, StatObservations) {
    const auto input = write("obs.txt", "0\n3\n-1\n\n1.5\n");
    const auto r = run({"stat", "--input", input, "--input-kind", "observations", "--stat", "bj"});
    ASSERT_EQ(r.status, 0) << r.err;
    const auto j = Json::parse(r.out);
    const auto expected = bj_plus(prepare({pvalue(0.0), pvalue(3.0), pvalue(-1.0), pvalue(1.5)}));
    EXPECT_EQ(j["bj"].get<double>(), expected);
    EXPECT_FALSE(j.contains("hc"));
}

TEST_F(CliTest, ErrorsMapToDistinctExitCodes) {
    const auto empty = write("empty.txt", "");
    auto r = run({"stat", "--input", empty});
    EXPECT_EQ(r.status, static_cast<int>(ErrorCode::EmptyOrSingleton));
    EXPECT_NE(r.err.find("EmptyOrSingleton"), std::string::npos);
    EXPECT_EQ(std::count(r.err.begin(), r.err.end(), '\n'), 1);

    r = run({"stat", "--input", write("nan.txt", "0.2\nnan\n")});
    EXPECT_EQ(r.status, static_cast<int>(ErrorCode::NonFinite));
    r = run({"stat", "--input", write("range.txt", "0.2\n1.2\n")});
    EXPECT_EQ(r.status, static_cast<int>(ErrorCode::OutOfRange));
    r = run({"stat", "--input", write("three.txt", "0.2\n0.3\n0.4\n"), "--stat", "alr"});
    EXPECT_EQ(r.status, static_cast<int>(ErrorCode::SampleTooSmall));
    r = run({"stat", "--input", path("missing.txt")});
    EXPECT_EQ(r.status, static_cast<int>(ErrorCode::IoError));
    r = run({"stat", "--input", write("junk.txt", "0.2\nabc\n")});
    EXPECT_EQ(r.status, static_cast<int>(ErrorCode::IoError));
    r = run({"stat"});
    EXPECT_EQ(r.status, static_cast<int>(ErrorCode::ConfigError));
    r = run({"calibrate", "--stat", "alr", "--method", "evi", "--n", "100", "--alpha", "0.05"});
    EXPECT_EQ(r.status, static_cast<int>(ErrorCode::IncompatibleMethod));
    r = run({"calibrate", "--stat", "hc", "--method", "evi", "--n", "16", "--alpha", "0.9"});
    EXPECT_EQ(r.status, static_cast<int>(ErrorCode::NegativeQ));
    r = run({"calibrate", "--stat", "hc", "--n", "100", "--reps", "100", "--alpha", "0.01"});
    EXPECT_EQ(r.status, static_cast<int>(ErrorCode::InsufficientReplicates));
    r = run({"calibrate", "--stat", "hc", "--n", "100", "--reps", "1000", "--alpha", "1.5"});
    EXPECT_EQ(r.status, static_cast<int>(ErrorCode::AlphaOutOfRange));
    r = run({"calibrate", "--stat", "hc", "--method", "thresh", "--n", "10", "--alpha", "0.05"});
    EXPECT_EQ(r.status, static_cast<int>(ErrorCode::DomainError));
    r = run({"calibrate", "--stat", "xx", "--n", "100", "--alpha", "0.05"});
    EXPECT_EQ(r.status, static_cast<int>(ErrorCode::ConfigError));
}

TEST_F(CliTest, CalibrateIsByteIdenticalAcrossRunsAndThreads) {
    const auto a = path("a.json"), b = path("b.json");
    auto r = run({"calibrate", "--stat", "bj", "--n", "100", "--reps", "1000", "--alpha", "0.05", "--seed", "1",
                  "--out", a, "--threads", "1"});
    ASSERT_EQ(r.status, 0) << r.err;
    r = run({"calibrate", "--stat", "bj", "--n", "100", "--reps", "1000", "--alpha", "0.05", "--seed", "1",
             "--out", b, "--threads", "3"});
    ASSERT_EQ(r.status, 0) << r.err;
    EXPECT_EQ(slurp(a), slurp(b));
    EXPECT_FALSE(std::filesystem::exists(a + ".tmp"));

    const auto j = Json::parse(slurp(a));
    EXPECT_EQ(j["kind"], "bj");
    EXPECT_EQ(j["n"], 100);
    EXPECT_EQ(j["method"], "empirical");
    EXPECT_EQ(j["R"], 1000);
    EXPECT_EQ(j["master_seed"], 1);
    ASSERT_EQ(j["entries"].size(), 1u);
    EXPECT_EQ(j["entries"][0]["alpha"], 0.05);
    const auto table = j.get<CriticalValueTable>();
    const auto sample = simulate_null_distribution(StatisticKind::BJ, 100, 1000, 1);
    EXPECT_EQ(table.at(0.05), empirical_cv(sample, 0.05));
}

TEST_F(CliTest, OutputsReproduceFromEmbeddedConfig) {
    const std::vector<std::vector<std::string>> commands{
        {"calibrate", "--stat", "hc", "--method", "evii", "--n", "1000", "--alpha", "0.05,0.1"},
        {"calibrate", "--stat", "alr", "--n", "50", "--reps", "500", "--alpha", "0.1", "--seed", "4"},
        {"size-table", "--n", "40,80", "--stat", "hc,bj", "--method", "empirical,evi", "--alpha", "0.05",
         "--reps", "500", "--seed", "6"},
        {"power-curve", "--n", "60", "--beta-grid", "0.6,0.9", "--alpha", "0.1", "--cal-reps", "500",
         "--pow-reps", "200", "--seed", "2"},
        {"alr-limit", "--variant", "cal2", "--reps", "10000", "--alpha", "0.05", "--n-for-l", "1000", "--grid",
         "256", "--seed", "3"},
    };
    for (const auto& command : commands) {
        auto args = command;
        args.push_back("--out");
        args.push_back(path("first"));
        auto r = run(args);
        ASSERT_EQ(r.status, 0) << command[0] << ": " << r.err;
        const auto first = slurp(path("first"));

        Json config;
        if (first.front() == '{') {
            config = Json::parse(first)["config"];
        } else {
            const auto line_start = first.find("# config ");
            ASSERT_NE(line_start, std::string::npos);
            const auto line_end = first.find('\n', line_start);
            config = Json::parse(first.substr(line_start + 9, line_end - line_start - 9));
        }
        auto replay = cli::args_from_config(config);
        replay.push_back("--out");
        replay.push_back(path("second"));
        r = run(replay);
        ASSERT_EQ(r.status, 0) << r.err;
        EXPECT_EQ(slurp(path("second")), first) << command[0];
    }
}

TEST_F(CliTest, SizeTableCsv) {
    const auto out = path("size.csv");
    const auto r = run({"size-table", "--n", "100", "--stat", "bj", "--method", "evi,evii,thresh", "--alpha",
                        "0.05,0.1", "--reps", "1000", "--seed", "1", "--out", out});
    ASSERT_EQ(r.status, 0) << r.err;
    std::istringstream in(slurp(out));
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);)
        if (line.front() != '#') lines.push_back(line);
    ASSERT_EQ(lines.size(), 7u);
    EXPECT_EQ(lines[0], "n,kind,method,alpha,size,R,seed");
    EXPECT_EQ(lines[1].rfind("100,bj,evi,0.05,", 0), 0u);
    EXPECT_EQ(lines[6].rfind("100,bj,thresh,0.1,", 0), 0u);
}

TEST_F(CliTest, PowerCurveSvgIsFunctionOfCsv) {
    const auto csv = path("power.csv"), svg = path("power.svg"), svg2 = path("again.svg");
    auto r = run({"power-curve", "--n", "100", "--alpha", "0.1", "--cal-reps", "1000", "--pow-reps", "200", "--seed",
                  "5", "--out", csv, "--svg", svg});
    ASSERT_EQ(r.status, 0) << r.err;
    r = run({"plot", "--csv", csv, "--svg", svg2});
    ASSERT_EQ(r.status, 0) << r.err;
    EXPECT_EQ(slurp(svg), slurp(svg2));
    std::ifstream in(csv);
    const auto points = read_power_csv(in);
    EXPECT_EQ(points.size(), 30u);
}

TEST_F(CliTest, AlrLimitJson) {
    const auto r = run({"alr-limit", "--variant", "cal1", "--reps", "20000", "--alpha", "0.05,0.1", "--seed", "1"});
    ASSERT_EQ(r.status, 0) << r.err;
    const auto j = Json::parse(r.out);
    ASSERT_EQ(j["entries"].size(), 2u);
    EXPECT_NEAR(j["entries"][0]["cv"].get<double>(), 6.05, 0.6);
    EXPECT_NEAR(j["entries"][1]["cv"].get<double>(), 3.42, 0.25);
    EXPECT_NEAR(std::exp(j["entries"][0]["log_cv"].get<double>()), j["entries"][0]["cv"].get<double>(), 1e-9);
}
