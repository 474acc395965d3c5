#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "gfsim/app.hpp"

using namespace gfsim;

namespace {
Json base_config()
{
    return Json::parse(R"({
      "schema": 1,
      "seed": 11,
      "replicas": 500,
      "eps": 1e-4,
      "horizon": 1,
      "snapshot_times": [0.5, 1],
      "switch_probabilities": {"half": {"kind": "constant", "p": 0.5}},
      "models": {
        "binary": {"levy": {"atoms": [{"z": -0.6931471805599453, "mass": 1}]}},
        "drift": {"c": 0.3, "kill_rate": 0.2},
        "mixed": {"c": 0.2, "kill_rate": 0.1,
                  "levy": {"atoms": [{"z": -0.2, "mass": 0.5}],
                           "densities": [{"kind": "uniform", "lo": -2, "hi": -0.3, "mass": 1.5},
                                         {"kind": "exponential", "lo": -4, "hi": -1, "rate": 1.5, "scale": 0.8}]}},
        "mixed_switched": {"switch_of": "mixed", "switch": "half"}
      },
      "bblp_models": {"from_mixed": {"from_model": "mixed"}},
      "suites": []
    })");
}

std::filesystem::path temp_dir(std::string const& name)
{
    auto p = std::filesystem::temp_directory_path() / ("gfsim_test_" + name);
    std::filesystem::remove_all(p);
    return p;
}

std::string slurp(std::filesystem::path const& p)
{
    std::ifstream f(p, std::ios::binary);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

RunSettings settings(std::filesystem::path const& out)
{
    RunSettings rs;
    rs.out = out.string();
    return rs;
}
}  // namespace

TEST(Config, ParsesModels)
{
    auto cfg = config_from_json(base_config());
    EXPECT_EQ(cfg.seed, 11u);
    EXPECT_EQ(cfg.models.size(), 4u);
    EXPECT_NEAR(cumulant(cfg.model("binary").chars, 2), 0.5, 1e-15);
    auto const& m = cfg.model("mixed");
    auto const& y = cfg.model("mixed_switched");
    for (double q : {2.0, 3.0})
        EXPECT_NEAR(cumulant(m.chars, q), cumulant(y.chars, q), 1e-9);
    EXPECT_NEAR(bblp_cumulant(cfg.bblp_models.at("from_mixed"), 2), cumulant(m.chars, 2), 1e-9);
}

TEST(Config, Errors)
{
    auto j = base_config();
    j.erase("schema");
    EXPECT_THROW(config_from_json(j), ConfigError);
    j = base_config();
    j["models"]["bad"] = {{"switch_of", "nowhere"}, {"switch", "half"}};
    EXPECT_THROW(config_from_json(j), ConfigError);
    j = base_config();
    j["suites"] = Json::array({{{"suite", "potential"}, {"model", "missing"}}});
    EXPECT_THROW(config_from_json(j), ConfigError);
    j = base_config();
    j["suites"] = Json::array({{{"suite", "nonsense"}}});
    EXPECT_THROW(config_from_json(j), ConfigError);
    j = base_config();
    j["eps"] = -1;
    EXPECT_THROW(config_from_json(j), ConfigError);
    j = base_config();
    j["models"]["pos"] = Json::parse(R"({"levy": {"atoms": [{"z": 0.5, "mass": 1}]}})");
    EXPECT_THROW(config_from_json(j), ConfigError);
    EXPECT_THROW(load_config("/nonexistent/config.json"), ConfigError);
}

TEST(Config, CharacteristicsRoundTrip)
{
    auto cfg = config_from_json(base_config());
    for (auto const& name : {"mixed", "mixed_switched"})
    {
        auto const& c = cfg.model(name).chars;
        auto back = characteristics_from_json(to_json(c));
        for (double q : {0.5, 2.0, 3.5})
        {
            EXPECT_DOUBLE_EQ(laplace_exponent(back, q), laplace_exponent(c, q)) << name;
            EXPECT_DOUBLE_EQ(cumulant(back, q), cumulant(c, q)) << name;
        }
    }
}

TEST(CmdKappa, Table)
{
    auto cfg = config_from_json(base_config());
    std::ostringstream os;
    EXPECT_EQ(cmd_kappa(cfg, "binary", {2}, os), exit_pass);
    EXPECT_EQ(os.str(), "q,Phi,kappa\n2,0.25,0.5\n");
    std::ostringstream d;
    cmd_kappa(cfg, "drift", {0, 2}, d);
    // no jumps: columns agree; q = 0 gives -k
    EXPECT_EQ(d.str(), "q,Phi,kappa\n0,-0.2,-0.2\n2,0.4,0.4\n");
    EXPECT_THROW(cmd_kappa(cfg, "missing", {2}, os), ConfigError);
}

TEST(CmdSimulate, SingleCellAndDeterminism)
{
    auto cfg = config_from_json(base_config());
    std::ostringstream log;
    auto a = temp_dir("sim_a");
    EXPECT_EQ(cmd_simulate(cfg, "drift", settings(a), log), exit_pass);
    auto lines = slurp(a / "tree.ndjson");
    EXPECT_EQ(std::count(lines.begin(), lines.end(), '\n'), 1);
    EXPECT_TRUE(std::filesystem::exists(a / "metadata.json"));

    auto b = temp_dir("sim_b");
    auto c = temp_dir("sim_c");
    cmd_simulate(cfg, "binary", settings(b), log);
    cmd_simulate(cfg, "binary", settings(c), log);
    EXPECT_EQ(slurp(b / "tree.ndjson"), slurp(c / "tree.ndjson"));
    EXPECT_EQ(slurp(b / "snapshots.csv"), slurp(c / "snapshots.csv"));
    // node count matches a direct re-simulation with the same seed
    auto tree = CellSystemSimulator(cfg.model("binary"))
                    .simulate(cfg.eps, cfg.horizon, cfg.limits, RandomStream(cfg.seed));
    auto text = slurp(b / "tree.ndjson");
    EXPECT_EQ(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')), tree.nodes.size());

    auto p = temp_dir("sim_bblp");
    EXPECT_EQ(cmd_simulate(cfg, "from_mixed", settings(p), log), exit_pass);
    EXPECT_TRUE(std::filesystem::exists(p / "particles.ndjson"));
}

TEST(CmdSimulate, LimitOverrunExitCode)
{
    auto j = base_config();
    j["limits"] = {{"max_nodes", 1}};
    j["horizon"] = 5;
    j["snapshot_times"] = {5};
    auto cfg = config_from_json(j);
    std::ostringstream log;
    EXPECT_EQ(cmd_simulate(cfg, "binary", settings(temp_dir("sim_limit")), log), exit_statistical);
}

TEST(CmdVerify, EmptySuite)
{
    auto cfg = config_from_json(base_config());
    auto out = temp_dir("verify_empty");
    std::ostringstream log;
    EXPECT_EQ(cmd_verify(cfg, {}, settings(out), log), exit_pass);
    EXPECT_FALSE(std::filesystem::exists(out / "report.json"));
}

TEST(CmdVerify, ReportsAndExitCodes)
{
    auto j = base_config();
    j["models"]["quarter"] = Json::parse(R"({"levy": {"atoms": [{"z": -1.3862943611198906, "mass": 1}]}})");
    j["models"]["three_quarters"] =
        Json::parse(R"({"c": 0.5, "levy": {"atoms": [{"z": -0.2876820724517809, "mass": 1}]}})");
    j["models"]["doubled"] = Json::parse(R"({"levy": {"atoms": [{"z": -1.3862943611198906, "mass": 2}]}})");
    j["replicas"] = 3000;
    j["suites"] = Json::parse(R"([
      {"suite": "fdd_equality", "name": "pair", "model_a": "quarter", "model_b": "three_quarters", "times": [0.5, 1]},
      {"suite": "fdd_equality", "name": "control", "model_a": "quarter", "model_b": "doubled", "times": [1],
       "check_kappa": false},
      {"suite": "fdd_equality", "name": "mismatch", "model_a": "quarter", "model_b": "doubled", "times": [1]}
    ])");
    auto cfg = config_from_json(j);
    std::ostringstream log;
    auto a = temp_dir("verify_a");
    auto b = temp_dir("verify_b");
    EXPECT_EQ(cmd_verify(cfg, {"pair"}, settings(a), log), exit_pass);
    auto rs = settings(b);
    rs.threads = 2;
    EXPECT_EQ(cmd_verify(cfg, {"pair"}, rs, log), exit_pass);
    EXPECT_EQ(slurp(a / "report.json"), slurp(b / "report.json"));
    EXPECT_TRUE(std::filesystem::exists(a / "report.txt"));
    EXPECT_TRUE(std::filesystem::exists(a / "pair_ecdf_max_at_t_1.csv"));
    auto report = Json::parse(slurp(a / "report.json"));
    EXPECT_EQ(report["reports"][0]["verdict"], "pass");
    EXPECT_EQ(report["reports"][0]["seed"], 11u);

    EXPECT_EQ(cmd_verify(cfg, {"control"}, settings(temp_dir("verify_c")), log), exit_statistical);
    EXPECT_THROW(cmd_verify(cfg, {"mismatch"}, settings(temp_dir("verify_d")), log), ConfigError);
    EXPECT_THROW(cmd_verify(cfg, {"unknown"}, settings(temp_dir("verify_e")), log), ConfigError);

    auto f = temp_dir("verify_f");
    rs = settings(f);
    rs.seed = 99;
    cmd_verify(cfg, {"pair"}, rs, log);
    EXPECT_EQ(Json::parse(slurp(f / "report.json"))["reports"][0]["seed"], 99u);
}
