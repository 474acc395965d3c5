#pragma once

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "io.hpp"

namespace gfsim {

enum ExitCode : int
{
    exit_pass = 0,
    exit_config = 1,      // configuration or precondition error
    exit_statistical = 2  // failed test, flagged incompleteness or resource limit overrun
};

struct RunSettings
{
    std::optional<std::uint64_t> seed;  // overrides the config
    unsigned threads = 1;
    std::optional<std::string> out;     // overrides the config
    std::vector<std::string> command_line;
};

namespace detail {

inline void write_file(std::filesystem::path const& p, std::string const& content)
{
    std::ofstream f(p, std::ios::binary);
    if (!f)
        throw std::runtime_error("cannot write " + p.string());
    f << content;
}

inline std::string sanitize(std::string s)
{
    for (char& c : s)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '.' && c != '-')
            c = '_';
    return s;
}

inline std::string utc_now()
{
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

//! Run metadata kept apart from the reports so those stay byte-identical.
inline void write_metadata(std::filesystem::path const& dir, std::string const& command,
                           RunSettings const& rs, std::uint64_t seed)
{
    Json m;
    m["command"] = command;
    m["seed"] = seed;
    m["threads"] = resolve_threads(rs.threads);
    m["timestamp"] = utc_now();
    m["argv"] = rs.command_line;
    write_file(dir / "metadata.json", m.dump(2) + '\n');
}

inline ExperimentConfig apply(ExperimentConfig cfg, RunSettings const& rs)
{
    if (rs.seed)
        cfg.seed = *rs.seed;
    if (rs.out)
        cfg.out = *rs.out;
    return cfg;
}

}  // namespace detail

/*!
 * Phi(q) and kappa(q) over the grid for a growth-fragmentation model, or
 * the motion exponent and the BBLP cumulant for a BBLP model.
 */
inline int cmd_kappa(ExperimentConfig const& cfg, std::string const& model,
                     std::vector<double> const& q_grid, std::ostream& os)
{
    std::function<double(double)> phi;
    std::function<double(double)> kappa;
    if (auto it = cfg.bblp_models.find(model); it != cfg.bblp_models.end())
    {
        auto b = it->second;
        phi = [b](double q) { return laplace_exponent(b.motion(), q); };
        kappa = [b](double q) { return bblp_cumulant(b, q); };
    }
    else
    {
        auto chars = cfg.model(model).chars;
        phi = [chars](double q) { return laplace_exponent(chars, q); };
        kappa = [chars](double q) { return cumulant(chars, q); };
    }
    os << std::setprecision(15) << "q,Phi,kappa\n";
    for (double q : q_grid)
    {
        if (!(q >= 0))
            throw ConfigError("q must be nonnegative");
        os << q << ',' << phi(q) << ',' << kappa(q) << '\n';
    }
    return exit_pass;
}

/*!
 * Simulate one tree (or BBLP particle system) and export it with snapshot
 * tables. Exit code 2 when a resource limit cut the simulation short.
 */
inline int cmd_simulate(ExperimentConfig const& cfg0, std::string const& model,
                        RunSettings const& rs, std::ostream& log)
{
    auto cfg = detail::apply(cfg0, rs);
    const std::filesystem::path dir(cfg.out);
    std::filesystem::create_directories(dir);
    const RandomStream rng(cfg.seed);
    bool complete = true;
    std::size_t nodes = 0;
    if (auto it = cfg.bblp_models.find(model); it != cfg.bblp_models.end())
    {
        auto sys = simulate_bblp(it->second, cfg.trunc, cfg.horizon, cfg.limits, rng);
        complete = sys.complete;
        nodes = sys.nodes.size();
        detail::write_file(dir / "particles.ndjson", to_ndjson(sys));
        detail::write_file(dir / "snapshots.csv",
                           snapshot_csv(cfg.snapshot_times,
                                        [&](double t) { return positions(sys, t); }, "position"));
    }
    else
    {
        auto const& m = cfg.model(model);
        if (!(cfg.eps < m.start_size))
            throw ConfigError("eps must be below the start size");
        auto tree = CellSystemSimulator(m).simulate(cfg.eps, cfg.horizon, cfg.limits, rng);
        complete = tree.complete;
        nodes = tree.nodes.size();
        detail::write_file(dir / "tree.ndjson", to_ndjson(tree));
        detail::write_file(dir / "snapshots.csv",
                           snapshot_csv(cfg.snapshot_times,
                                        [&](double t) { return snapshot(tree, t).sizes; }, "size"));
    }
    detail::write_metadata(dir, "simulate " + model, rs, cfg.seed);
    log << model << ": " << nodes << " nodes" << (complete ? "" : " (incomplete: resource limit)")
        << '\n';
    return complete ? exit_pass : exit_statistical;
}

/*!
 * Run the selected suites (all when `names` is empty). Suite i uses seed
 * config.seed + i. Writes report.json, report.txt and plot CSVs.
 */
inline int cmd_verify(ExperimentConfig const& cfg0, std::vector<std::string> const& names,
                      RunSettings const& rs, std::ostream& log)
{
    auto cfg = detail::apply(cfg0, rs);
    for (auto const& n : names)
        if (std::none_of(cfg.suites.begin(), cfg.suites.end(),
                         [&](SuiteConfig const& s) { return s.name == n; }))
            throw ConfigError("unknown suite name '" + n + "'");
    std::vector<ExperimentReport> reports;
    for (std::size_t i = 0; i < cfg.suites.size(); ++i)
    {
        auto const& s = cfg.suites[i];
        if (!names.empty() && std::find(names.begin(), names.end(), s.name) == names.end())
            continue;
        auto o = cfg.options();
        o.seed = cfg.seed + i;
        o.threads = rs.threads;
        reports.push_back(run_suite(cfg, s, o));
        log << to_text(reports.back());
    }
    if (reports.empty())
        return exit_pass;
    const std::filesystem::path dir(cfg.out);
    std::filesystem::create_directories(dir);
    Json all;
    all["schema"] = 1;
    all["reports"] = Json::array();
    std::string text;
    bool ok = true;
    for (auto const& r : reports)
    {
        all["reports"].push_back(to_json(r));
        text += to_text(r);
        ok = ok && r.verdict() == Verdict::pass;
        for (auto const& p : r.plots)
            detail::write_file(dir / (detail::sanitize(r.name + "_" + p.name) + ".csv"), to_csv(p));
    }
    detail::write_file(dir / "report.json", all.dump(2) + '\n');
    detail::write_file(dir / "report.txt", text);
    detail::write_metadata(dir, "verify", rs, cfg.seed);
    return ok ? exit_pass : exit_statistical;
}

}  // namespace gfsim
