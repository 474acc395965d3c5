// gfsim: kappa tables, single simulations and verification suites from a JSON config.

#include <iostream>

#include <CLI11.hpp>

#include "gfsim/app.hpp"

int main(int argc, char** argv)
{
    using namespace gfsim;
    CLI::App app{"Growth-fragmentation simulator and verifier"};
    app.require_subcommand(1);

    std::string config_path;
    std::uint64_t seed = 0;
    unsigned threads = 1;
    std::string out;
    app.add_option("--config", config_path, "Experiment config (JSON, schema 1)")->required();
    auto* seed_opt = app.add_option("--seed", seed, "Seed, overrides the config");
    app.add_option("--threads", threads, "Worker threads, 0 for all cores");
    auto* out_opt = app.add_option("--out", out, "Output directory, overrides the config");

    auto* kappa = app.add_subcommand("kappa", "Print Phi(q) and kappa(q) over a grid");
    std::string kappa_model;
    std::vector<double> q_grid;
    kappa->add_option("model", kappa_model, "Model name")->required();
    kappa->add_option("--q", q_grid, "q values (default: the config's q_grid)")->delimiter(',');

    auto* simulate = app.add_subcommand("simulate", "Simulate and export one tree");
    std::string sim_model;
    simulate->add_option("model", sim_model, "Model name")->required();

    auto* verify = app.add_subcommand("verify", "Run verification suites");
    std::vector<std::string> suites;
    verify->add_option("suites", suites, "Suite names (default: all in the config)");

    try
    {
        app.parse(argc, argv);
    }
    catch (CLI::ParseError const& e)
    {
        const int code = app.exit(e);
        return code == 0 ? exit_pass : exit_config;
    }

    RunSettings rs;
    if (seed_opt->count())
        rs.seed = seed;
    if (out_opt->count())
        rs.out = out;
    rs.threads = threads;
    rs.command_line.assign(argv, argv + argc);
    try
    {
        auto cfg = load_config(config_path);
        if (kappa->parsed())
            return cmd_kappa(cfg, kappa_model, q_grid.empty() ? cfg.q_grid : q_grid, std::cout);
        if (simulate->parsed())
            return cmd_simulate(cfg, sim_model, rs, std::cout);
        return cmd_verify(cfg, suites, rs, std::cout);
    }
    catch (ConfigError const& e)
    {
        std::cerr << "configuration error: " << e.what() << '\n';
        return exit_config;
    }
    catch (DomainError const& e)
    {
        std::cerr << "precondition error: " << e.what() << '\n';
        return exit_config;
    }
    catch (std::exception const& e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return exit_config;
    }
}
