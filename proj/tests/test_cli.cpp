#include "hmc/cli.hpp"
#include "hmc/errors.hpp"
#include "hmc/experiment_config.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <cstdio>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace
{
struct Run
{
    int code = -1;
    std::string out;
    std::string err;

    json summary() const { return json::parse(out); }
};

Run run(std::vector<std::string> args)
{
    std::ostringstream out, err;
    Run r;
    r.code = hmc::cli::run(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

class CliTest : public ::testing::Test
{
protected:
    void SetUp() override
    {
        auto const* info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir_ = fs::temp_directory_path() / (std::string("hmc_cli_") + info->name());
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string path(std::string const& name) const { return (dir_ / name).string(); }

    static std::string slurp(std::string const& p)
    {
        std::ifstream in(p, std::ios::binary);
        std::stringstream s;
        s << in.rdbuf();
        return s.str();
    }

    static std::vector<std::string> lines(std::string const& p)
    {
        std::ifstream in(p);
        std::vector<std::string> v;
        for (std::string l; std::getline(in, l);)
        {
            v.push_back(l);
        }
        return v;
    }

    fs::path dir_;
};
}  // namespace

TEST_F(CliTest, SampleWritesOneRowPerStepAndChain)
{
    auto const r = run({"sample", "--potential", "quadratic", "--dim", "2", "--mu", "1", "--L", "100", "--eps",
                        "0.1", "--seed", "7", "--steps", "30", "--chains", "3", "--out", path("a")});
    ASSERT_EQ(r.code, 0) << r.err;
    auto const rows = lines(path("a/trajectory.csv"));
    ASSERT_EQ(rows.size(), 1u + 3u * 31u);
    EXPECT_EQ(rows[0], "chain,step,x0,x1,grads");
    EXPECT_EQ(lines(path("a/ledger.csv")).size(), 1u + 3u * 30u);
    auto const s = r.summary();
    EXPECT_EQ(s["command"], "sample");
    EXPECT_EQ(s["config"]["seed"], 7);
    EXPECT_TRUE(s.contains("git_describe"));
    EXPECT_TRUE(s.contains("duration_seconds"));
    EXPECT_EQ(s["results"]["steps"], 30);
}

TEST_F(CliTest, SampleIsByteDeterministicAcrossThreadCounts)
{
    std::vector<std::string> base{"sample", "--potential", "logcosh", "--dim", "3", "--kappa", "20",
                                  "--mode",  "ideal",       "--steps", "40", "--chains", "4", "--seed", "11"};
    auto a = base, b = base, c = base;
    a.insert(a.end(), {"--out", path("a"), "--threads", "1"});
    b.insert(b.end(), {"--out", path("b"), "--threads", "1"});
    c.insert(c.end(), {"--out", path("c"), "--threads", "3"});
    ASSERT_EQ(run(a).code, 0);
    ASSERT_EQ(run(b).code, 0);
    ASSERT_EQ(run(c).code, 0);
    for (auto const* f : {"trajectory.csv", "ledger.csv"})
    {
        auto const ref = slurp(path(std::string("a/") + f));
        EXPECT_FALSE(ref.empty());
        EXPECT_EQ(ref, slurp(path(std::string("b/") + f)));
        EXPECT_EQ(ref, slurp(path(std::string("c/") + f)));
    }
}

TEST_F(CliTest, FloatsUseSeventeenSignificantDigits)
{
    ASSERT_EQ(run({"sample", "--dim", "1", "--L", "1", "--steps", "1", "--mode", "ideal", "--out", path("a")}).code, 0);
    auto const rows = lines(path("a/trajectory.csv"));
    ASSERT_EQ(rows.size(), 3u);
    auto const first = rows[2].find(',', rows[2].find(',') + 1) + 1;
    auto const cell = rows[2].substr(first, rows[2].rfind(',') - first);
    double const x = std::stod(cell);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    EXPECT_EQ(cell, buf);
}

TEST_F(CliTest, SampleDefaultScheduleIsTooLongToRun)
{
    auto const r = run({"sample", "--potential", "quadratic", "--dim", "2", "--mu", "1", "--L", "100", "--eps", "0.1",
                        "--seed", "7", "--out", path("a")});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("max-rows"), std::string::npos);
}

TEST_F(CliTest, EpsilonAtLeastSqrtDimIsConfigError)
{
    EXPECT_EQ(run({"sample", "--eps", "10", "--dim", "4", "--steps", "3", "--out", path("a")}).code, 1);
}

TEST_F(CliTest, ParseAndValueErrorsAreConfigErrors)
{
    EXPECT_EQ(run({"sample", "--bogus", "1"}).code, 1);
    EXPECT_EQ(run({}).code, 1);
    EXPECT_EQ(run({"sample", "--potential", "banana", "--steps", "2", "--out", path("a")}).code, 1);
    EXPECT_EQ(run({"sample", "--mode", "ideal", "--solver", "collocation", "--steps", "2", "--out", path("a")}).code, 1);
    EXPECT_EQ(run({"sample", "--potential", "logcosh", "--mode", "ideal", "--solver", "exact", "--steps", "2",
                   "--out", path("a")})
                  .code,
              1);
    EXPECT_EQ(run({"sample", "--dim", "notanumber"}).code, 1);
}

TEST_F(CliTest, HelpExitsZero)
{
    auto const r = run({"--help"});
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("contraction"), std::string::npos);
}

TEST_F(CliTest, ContractionWritesGridAndPasses)
{
    auto const r = run({"contraction", "--pairs", "20", "--out", path("a")});
    ASSERT_EQ(r.code, 0) << r.err;
    auto const rows = lines(path("a/contraction.csv"));
    ASSERT_EQ(rows.size(), 65u);
    EXPECT_EQ(rows[0], "t,worst_ratio,bound");
    EXPECT_EQ(rows[1], "0,1,1");
    EXPECT_EQ(r.summary()["config"]["potential"], "logcosh");
}

TEST_F(CliTest, ContractionPreconditions)
{
    EXPECT_EQ(run({"contraction", "--pairs", "0", "--out", path("a")}).code, 1);
    EXPECT_EQ(run({"contraction", "--pairs", "5", "--t-max", "0.051", "--out", path("a")}).code, 1);
    EXPECT_EQ(run({"contraction", "--pairs", "5", "--t-max", "0.05", "--t-points", "8", "--out", path("a")}).code, 0);
    EXPECT_EQ(lines(path("a/contraction.csv")).size(), 9u);
}

TEST_F(CliTest, LowerboundWritesAutocorrelations)
{
    auto const r = run({"lowerbound", "--kappa", "25", "--steps", "200000", "--seed", "3", "--out", path("a")});
    ASSERT_EQ(r.code, 0) << r.err;
    auto const rows = lines(path("a/autocorr.csv"));
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[0], "coord,lag1,std_err,exact");
    auto const s = r.summary();
    EXPECT_EQ(s["results"]["lower_bound"], 200.0);
    EXPECT_EQ(s["results"]["burn_in"], 2000);
}

TEST_F(CliTest, LowerboundNeedsQuadratic)
{
    EXPECT_EQ(run({"lowerbound", "--potential", "logcosh", "--steps", "2000", "--out", path("a")}).code, 1);
}

TEST_F(CliTest, W2ExactVariantPasses)
{
    auto const r = run({"w2", "--dim", "4", "--kappa", "10", "--eps", "0.1", "--replicas", "10000", "--out",
                        path("a")});
    ASSERT_EQ(r.code, 0) << r.err;
    auto const rows = lines(path("a/w2.csv"));
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0], "replicas,N,w2,bound");
    EXPECT_EQ(r.summary()["results"]["c_n_passed"], 2.0);
    EXPECT_EQ(run({"w2", "--replicas", "100", "--out", path("b")}).code, 1);
}

TEST_F(CliTest, GradscalingTrendPassesAtDefaultDimension)
{
    auto const r = run({"gradscaling", "--kappas", "16,64", "--eps", "0.1", "--steps", "3", "--chains", "1",
                        "--out", path("a")});
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_EQ(lines(path("a/gradscaling.csv")).size(), 5u);
}

TEST_F(CliTest, GradscalingReportsViolationWhenPiecesSaturate)
{
    // In two dimensions one piece always suffices, so the per-step cost is flat.
    auto const r = run({"gradscaling", "--dim", "2", "--kappas", "16,64", "--steps", "3", "--chains", "1", "--out",
                        path("a")});
    EXPECT_EQ(r.code, 3);
    EXPECT_FALSE(r.summary()["criterion_passed"]);
    EXPECT_TRUE(fs::exists(path("a/gradscaling.csv")));
}

TEST_F(CliTest, OdecheckQuadratic)
{
    auto const r = run({"odecheck", "--potential", "quadratic", "--delta", "1e-8", "--trials", "10", "--out",
                        path("a")});
    ASSERT_EQ(r.code, 0) << r.err;
    auto const rows = lines(path("a/odecheck.csv"));
    ASSERT_EQ(rows.size(), 11u);
    EXPECT_EQ(rows[0], "trial,delta,error,grads");
    EXPECT_LE(r.summary()["results"]["max_error_over_delta"].get<double>(), 10.0);
}

TEST_F(CliTest, ConfigFilePrecedence)
{
    {
        std::ofstream f(path("cfg.json"));
        f << R"({"dim": 5, "mu": 2.0, "L": 8.0, "steps": 4, "mode": "ideal"})";
    }
    auto const r = run({"sample", "--config", path("cfg.json"), "--dim", "3", "--out", path("a")});
    ASSERT_EQ(r.code, 0) << r.err;
    auto const cfg = r.summary()["config"];
    EXPECT_EQ(cfg["dim"], 3);
    EXPECT_EQ(cfg["mu"], 2.0);
    EXPECT_EQ(cfg["L"], 8.0);
    EXPECT_EQ(cfg["chains"], 1);
    EXPECT_EQ(lines(path("a/trajectory.csv"))[0], "chain,step,x0,x1,x2,grads");
}

TEST_F(CliTest, BadConfigFilesAreConfigErrors)
{
    {
        std::ofstream f(path("bad.json"));
        f << R"({"dimension": 5})";
    }
    {
        std::ofstream f(path("broken.json"));
        f << "{not json";
    }
    EXPECT_EQ(run({"sample", "--config", path("bad.json"), "--steps", "1", "--out", path("a")}).code, 1);
    EXPECT_EQ(run({"sample", "--config", path("broken.json"), "--steps", "1", "--out", path("a")}).code, 1);
    EXPECT_EQ(run({"sample", "--config", path("missing.json"), "--steps", "1", "--out", path("a")}).code, 1);
}

TEST_F(CliTest, EchoedConfigReproducesRun)
{
    auto const first = run({"sample", "--potential", "logcosh", "--dim", "2", "--kappa", "9", "--mode", "ideal",
                            "--steps", "10", "--seed", "5", "--out", path("a")});
    ASSERT_EQ(first.code, 0);
    auto cfg = first.summary()["config"];
    cfg["out"] = path("b");
    {
        std::ofstream f(path("echo.json"));
        f << cfg.dump();
    }
    ASSERT_EQ(run({"sample", "--config", path("echo.json")}).code, 0);
    EXPECT_EQ(slurp(path("a/trajectory.csv")), slurp(path("b/trajectory.csv")));
}

TEST(ExperimentConfig, JsonRoundTripIsLossless)
{
    hmc::ExperimentConfig c;
    c.potential = "logcosh";
    c.dim = 7;
    c.mu = 0.1;
    c.L = 1.0 / 3.0;
    c.kappa = 12.5;
    c.eigenvalues = {0.1, 0.2};
    c.center = {-1e-300, 5e300};
    c.eps = 0.07;
    c.steps = 123456789012;
    c.chains = 3;
    c.seed = 18446744073709551615ull;
    c.c = 2.0 / 3.0;
    c.mode = "ideal";
    c.solver = "adaptive";
    c.degree = 4;
    c.c_n = 4.0;
    c.delta = {1e-6, 1e-8};
    c.epsilons = {0.05, 0.1};
    c.pairs = 17;
    c.t_points = 9;
    c.t_max = 0.0123;
    c.replicas = 10001;
    c.kappas = {16, 64, 256};
    c.burn_in = 99;
    c.trials = 3;
    c.max_rows = 5;
    c.out = "some/dir";
    c.threads = 2;

    json const j = c;
    auto const back = json::parse(j.dump()).get<hmc::ExperimentConfig>();
    EXPECT_EQ(json(back), j);
    EXPECT_EQ(back.L, c.L);
    EXPECT_EQ(back.c, c.c);
    EXPECT_EQ(back.seed, c.seed);
    EXPECT_EQ(back.center, c.center);
    EXPECT_EQ(back.t_max, c.t_max);
}

TEST(ExperimentConfig, UnsetOptionalsStayUnset)
{
    hmc::ExperimentConfig const c;
    json const j = c;
    EXPECT_FALSE(j.contains("kappa"));
    auto const back = j.get<hmc::ExperimentConfig>();
    EXPECT_FALSE(back.kappa.has_value());
    EXPECT_FALSE(back.c.has_value());
}

TEST(ExperimentConfig, KappaOverridesL)
{
    auto const c = hmc::merge_config(hmc::ExperimentConfig{}, json{{"mu", 2.0}, {"kappa", 10.0}, {"L", 3.0}});
    EXPECT_DOUBLE_EQ(c.lipschitz(), 20.0);
    EXPECT_DOUBLE_EQ(c.make_potential()->lipschitz(), 20.0);
    EXPECT_THROW(hmc::merge_config(c, json{{"nope", 1}}), hmc::InputError);
    EXPECT_THROW(hmc::merge_config(c, json{{"dim", "three"}}), hmc::InputError);
}
