#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bblp.hpp"
#include "cellsystem.hpp"
#include "switching.hpp"
#include "verify.hpp"

namespace gfsim {

//---------------------------------------------------------------------------//
// Characteristics <-> JSON
//---------------------------------------------------------------------------//

namespace detail {

inline double number(Json const& j, char const* key, double fallback)
{
    if (!j.contains(key))
        return fallback;
    if (!j.at(key).is_number())
        throw ConfigError(std::string("field '") + key + "' must be a number");
    return j.at(key).get<double>();
}

inline double required_number(Json const& j, char const* key)
{
    if (!j.contains(key))
        throw ConfigError(std::string("missing field '") + key + "'");
    return number(j, key, 0);
}

inline std::uint64_t count(Json const& j, char const* key)
{
    auto const& v = j.at(key);
    if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0))
        throw ConfigError(std::string("field '") + key + "' must be a nonnegative integer");
    return v.get<std::uint64_t>();
}

inline std::string required_string(Json const& j, char const* key)
{
    if (!j.contains(key) || !j.at(key).is_string())
        throw ConfigError(std::string("missing string field '") + key + "'");
    return j.at(key).get<std::string>();
}

inline std::vector<double> number_list(Json const& j, char const* key)
{
    if (!j.contains(key) || !j.at(key).is_array())
        throw ConfigError(std::string("missing list field '") + key + "'");
    std::vector<double> v;
    for (auto const& e : j.at(key))
    {
        if (!e.is_number())
            throw ConfigError(std::string("field '") + key + "' must hold numbers");
        v.push_back(e.get<double>());
    }
    return v;
}

}  // namespace detail

/*!
 * Densities: {"kind": "uniform", "lo", "hi", "mass"} or
 * {"kind": "exponential" | "power", "lo", "hi", "rate" | "beta", "scale"};
 * optional "reflected" and "weight" round-trip derived pieces.
 */
inline DensityComponent density_from_json(Json const& j)
{
    const auto kind = detail::required_string(j, "kind");
    const double lo = detail::required_number(j, "lo");
    const double hi = detail::required_number(j, "hi");
    if (!(lo < hi) || !(hi <= 0))
        throw ConfigError("density support must satisfy lo < hi <= 0");
    DensityComponent d;
    if (kind == "uniform")
    {
        if (j.contains("mass"))
            d = DensityComponent::uniform(lo, hi, detail::required_number(j, "mass"));
        else
            d = DensityComponent::uniform(lo, hi, detail::required_number(j, "scale") * (hi - lo));
    }
    else if (kind == "exponential")
        d = DensityComponent::exponential(lo, hi, detail::required_number(j, "rate"),
                                          detail::required_number(j, "scale"));
    else if (kind == "power")
        d = DensityComponent::power(lo, hi, detail::required_number(j, "beta"),
                                    detail::required_number(j, "scale"));
    else
        throw ConfigError("unknown density kind '" + kind + "'");
    d.reflected = j.value("reflected", false);
    d.weight = detail::number(j, "weight", 1);
    return d;
}

inline Json to_json(DensityComponent const& d)
{
    static char const* const names[] = {"uniform", "exponential", "power"};
    Json j{{"kind", names[static_cast<int>(d.kind)]}, {"lo", d.lo}, {"hi", d.hi}, {"scale", d.scale}};
    if (d.kind == DensityComponent::Kind::exponential)
        j["rate"] = d.param;
    if (d.kind == DensityComponent::Kind::power)
        j["beta"] = d.param;
    if (d.reflected)
        j["reflected"] = true;
    if (d.weight != 1)
        j["weight"] = d.weight;
    if (d.modulation)
        j["modulated"] = true;  // not reconstructible from JSON
    return j;
}

inline JumpMeasure measure_from_json(Json const& j)
{
    JumpMeasure m;
    m.small_jump_cutoff = detail::number(j, "small_jump_cutoff", 0);
    if (j.contains("atoms"))
        for (auto const& a : j.at("atoms"))
        {
            const double z = detail::required_number(a, "z");
            if (!(z < 0))
                throw ConfigError("atom locations must be negative");
            m.add_atom(z, detail::required_number(a, "mass"));
        }
    if (j.contains("densities"))
        for (auto const& d : j.at("densities"))
            m.add_density(density_from_json(d));
    return m;
}

inline Json to_json(JumpMeasure const& m)
{
    Json j;
    j["small_jump_cutoff"] = m.small_jump_cutoff;
    j["atoms"] = Json::array();
    for (auto const& a : m.atoms)
        j["atoms"].push_back({{"z", a.z}, {"mass", a.mass}});
    j["densities"] = Json::array();
    for (auto const& d : m.densities)
        j["densities"].push_back(to_json(d));
    return j;
}

inline SnlpCharacteristics characteristics_from_json(Json const& j)
{
    SnlpCharacteristics c;
    c.sigma = detail::number(j, "sigma", 0);
    c.c = detail::number(j, "c", 0);
    c.kill_rate = detail::number(j, "kill_rate", 0);
    if (j.contains("levy"))
        c.levy = measure_from_json(j.at("levy"));
    validate_levy(c);
    return c;
}

inline Json to_json(SnlpCharacteristics const& c)
{
    return {{"sigma", c.sigma}, {"c", c.c}, {"kill_rate", c.kill_rate}, {"levy", to_json(c.levy)}};
}

inline BblpCharacteristics bblp_from_json(Json const& j)
{
    BblpCharacteristics b;
    b.sigma_b = detail::number(j, "sigma", 0);
    b.c_b = detail::number(j, "c", 0);
    b.k_b = detail::number(j, "kill_rate", 0);
    if (j.contains("levy"))
        b.levy_b = measure_from_json(j.at("levy"));
    if (j.contains("mu"))
        b.mu_b = measure_from_json(j.at("mu"));
    validate_bblp(b);
    return b;
}

inline Json to_json(BblpCharacteristics const& b)
{
    return {{"sigma", b.sigma_b},
            {"c", b.c_b},
            {"kill_rate", b.k_b},
            {"levy", to_json(b.levy_b)},
            {"mu", to_json(b.mu_b)}};
}

//! {"kind": "constant", "p"} | {"kind": "halfline"} | {"kind": "tabulated", "breaks", "values"}
inline SwitchProbability switch_from_json(Json const& j)
{
    const auto kind = detail::required_string(j, "kind");
    if (kind == "constant")
        return SwitchProbability::constant(detail::required_number(j, "p"));
    if (kind == "halfline")
        return SwitchProbability::halfline();
    if (kind == "tabulated")
        return SwitchProbability::tabulated(detail::number_list(j, "breaks"),
                                            detail::number_list(j, "values"));
    throw ConfigError("unknown switching probability kind '" + kind + "'");
}

//---------------------------------------------------------------------------//
// Experiment configuration
//---------------------------------------------------------------------------//

struct SuiteConfig
{
    std::string name;  // label used on the command line
    std::string kind;
    Json params;
};

struct ExperimentConfig
{
    std::map<std::string, CellModel> models;
    std::map<std::string, BblpCharacteristics> bblp_models;
    std::map<std::string, SwitchProbability> switches;
    std::vector<SuiteConfig> suites;
    std::uint64_t seed = 0;
    std::size_t replicas = 10'000;
    double eps = 1e-4;
    double horizon = 1;
    double trunc = -10;  // BBLP truncation level for simulate
    std::vector<double> snapshot_times;
    std::vector<double> q_grid{0, 0.5, 1, 1.5, 2, 2.5, 3, 4};
    ResourceLimits limits;
    double max_incomplete_fraction = 1e-3;
    std::string out = "out";

    CellModel const& model(std::string const& name) const
    {
        auto it = models.find(name);
        if (it == models.end())
            throw ConfigError("unknown model '" + name + "'");
        return it->second;
    }

    VerifyOptions options() const
    {
        VerifyOptions o;
        o.replicas = replicas;
        o.seed = seed;
        o.eps = eps;
        o.limits = limits;
        o.max_incomplete_fraction = max_incomplete_fraction;
        return o;
    }
};

inline char const* const suite_kinds[] = {"cumulant_martingale", "fdd_equality", "self_similarity",
                                          "excessive",           "potential",    "bblp_correspondence",
                                          "coupled_symmetry"};

namespace detail {

/*!
 * A model is either explicit characteristics or {"switch_of": name,
 * "switch": switch name}, the switching transform of another model.
 */
inline CellModel model_from_json(Json const& j, ExperimentConfig const& cfg,
                                 Json const& all_models, std::vector<std::string>& stack)
{
    CellModel m;
    if (j.contains("switch_of"))
    {
        const auto base = required_string(j, "switch_of");
        const auto sw = required_string(j, "switch");
        if (std::find(stack.begin(), stack.end(), base) != stack.end())
            throw ConfigError("model '" + base + "' refers to itself");
        if (!all_models.contains(base))
            throw ConfigError("unknown model '" + base + "'");
        auto it = cfg.switches.find(sw);
        if (it == cfg.switches.end())
            throw ConfigError("unknown switching probability '" + sw + "'");
        stack.push_back(base);
        auto b = model_from_json(all_models.at(base), cfg, all_models, stack);
        stack.pop_back();
        m.chars = switching_characteristics(b.chars, it->second);
        m.alpha = number(j, "alpha", b.alpha);
        m.start_size = number(j, "start_size", b.start_size);
        m.grid_step = number(j, "grid_step", b.grid_step);
    }
    else
    {
        m.chars = characteristics_from_json(j);
        m.alpha = number(j, "alpha", 0);
        m.start_size = number(j, "start_size", 1);
        m.grid_step = number(j, "grid_step", 1e-3);
    }
    if (!(m.grid_step > 0))
        throw ConfigError("grid_step must be positive");
    validate_model(m);
    return m;
}

inline void check_range(bool ok, char const* what)
{
    if (!ok)
        throw ConfigError(std::string("invalid value for '") + what + "'");
}

}  // namespace detail

inline ExperimentConfig config_from_json(Json const& j)
{
    if (!j.is_object())
        throw ConfigError("config must be a JSON object");
    if (!j.contains("schema") || j.at("schema") != 1)
        throw ConfigError("config needs \"schema\": 1");
    ExperimentConfig cfg;
    if (j.contains("seed"))
        cfg.seed = detail::count(j, "seed");
    if (j.contains("replicas"))
        cfg.replicas = detail::count(j, "replicas");
    cfg.eps = detail::number(j, "eps", cfg.eps);
    cfg.horizon = detail::number(j, "horizon", cfg.horizon);
    cfg.trunc = detail::number(j, "trunc", cfg.trunc);
    cfg.max_incomplete_fraction =
        detail::number(j, "max_incomplete_fraction", cfg.max_incomplete_fraction);
    cfg.out = j.value("out", cfg.out);
    detail::check_range(cfg.replicas >= 2, "replicas");
    detail::check_range(cfg.eps > 0 && cfg.eps < 1e6, "eps");
    detail::check_range(cfg.horizon >= 0 && std::isfinite(cfg.horizon), "horizon");
    detail::check_range(cfg.trunc <= -ln2, "trunc");
    detail::check_range(cfg.max_incomplete_fraction >= 0 && cfg.max_incomplete_fraction <= 1,
                        "max_incomplete_fraction");
    if (j.contains("snapshot_times"))
        cfg.snapshot_times = detail::number_list(j, "snapshot_times");
    else
        cfg.snapshot_times = {cfg.horizon};
    for (double t : cfg.snapshot_times)
        detail::check_range(t >= 0 && t <= cfg.horizon, "snapshot_times");
    if (j.contains("q_grid"))
        cfg.q_grid = detail::number_list(j, "q_grid");
    if (j.contains("limits"))
    {
        auto const& l = j.at("limits");
        cfg.limits.max_nodes = l.value("max_nodes", cfg.limits.max_nodes);
        cfg.limits.max_generation = l.value("max_generation", cfg.limits.max_generation);
        cfg.limits.max_events = l.value("max_events", cfg.limits.max_events);
    }
    if (j.contains("switch_probabilities"))
        for (auto const& [name, s] : j.at("switch_probabilities").items())
            cfg.switches.emplace(name, switch_from_json(s));
    if (j.contains("models"))
    {
        auto const& all = j.at("models");
        for (auto const& [name, m] : all.items())
        {
            std::vector<std::string> stack{name};
            cfg.models.emplace(name, detail::model_from_json(m, cfg, all, stack));
        }
    }
    if (j.contains("bblp_models"))
        for (auto const& [name, b] : j.at("bblp_models").items())
        {
            if (b.contains("from_model"))
                cfg.bblp_models.emplace(
                    name, gf_to_bblp_characteristics(cfg.model(b.at("from_model")).chars));
            else
                cfg.bblp_models.emplace(name, bblp_from_json(b));
        }
    if (j.contains("suites"))
        for (auto const& s : j.at("suites"))
        {
            SuiteConfig sc;
            sc.kind = detail::required_string(s, "suite");
            if (std::find(std::begin(suite_kinds), std::end(suite_kinds), sc.kind)
                == std::end(suite_kinds))
                throw ConfigError("unknown suite '" + sc.kind + "'");
            sc.name = s.value("name", sc.kind);
            sc.params = s;
            for (char const* key : {"model", "model_a", "model_b", "model_x", "model_y"})
                if (s.contains(key))
                    cfg.model(s.at(key).get<std::string>());
            cfg.suites.push_back(std::move(sc));
        }
    return cfg;
}

inline ExperimentConfig load_config(std::string const& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config '" + path + "'");
    Json j;
    try
    {
        j = Json::parse(in);
    }
    catch (nlohmann::json::parse_error const& e)
    {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return config_from_json(j);
}

//---------------------------------------------------------------------------//
// Suite dispatch
//---------------------------------------------------------------------------//

inline ExperimentReport run_suite(ExperimentConfig const& cfg, SuiteConfig const& s,
                                  VerifyOptions o)
{
    auto const& p = s.params;
    if (p.contains("replicas"))
        o.replicas = detail::count(p, "replicas");
    o.eps = detail::number(p, "eps", o.eps);
    ExperimentReport r;
    if (s.kind == "cumulant_martingale")
        r = verify_cumulant_martingale(cfg.model(p.at("model")), detail::required_number(p, "q"),
                                       detail::required_number(p, "t"), o);
    else if (s.kind == "fdd_equality")
        r = verify_fdd_equality(cfg.model(p.at("model_a")), cfg.model(p.at("model_b")),
                                detail::number_list(p, "times"), o, p.value("check_kappa", true));
    else if (s.kind == "self_similarity")
        r = verify_self_similarity(cfg.model(p.at("model")), detail::required_number(p, "c"),
                                   detail::number_list(p, "times"), o);
    else if (s.kind == "excessive")
        r = verify_excessive(cfg.model(p.at("model")), detail::required_number(p, "q"),
                             detail::number(p, "K", 0), detail::number(p, "s", 0),
                             detail::required_number(p, "t"), o);
    else if (s.kind == "potential")
        r = verify_potential(cfg.model(p.at("model")), detail::required_number(p, "q"),
                             detail::required_number(p, "t_max"), o);
    else if (s.kind == "bblp_correspondence")
        r = verify_bblp_correspondence(cfg.model(p.at("model")), detail::number_list(p, "times"), o,
                                       detail::number(p, "trunc", -40));
    else if (s.kind == "coupled_symmetry")
    {
        auto const& mx = cfg.model(p.at("model_x"));
        auto const& my = cfg.model(p.at("model_y"));
        r = verify_coupled_symmetry(mx.chars, my.chars, detail::number(p, "alpha", mx.alpha),
                                    detail::number(p, "start_size", mx.start_size),
                                    detail::number_list(p, "times"), o);
    }
    else
        throw ConfigError("unknown suite '" + s.kind + "'");
    r.name = s.name;
    return r;
}

//---------------------------------------------------------------------------//
// Exports
//---------------------------------------------------------------------------//

inline std::string label_string(Label const& l)
{
    std::string s;
    for (std::size_t i = 0; i < l.size(); ++i)
        s += (i ? "." : "") + std::to_string(l[i]);
    return s;
}

//! One JSON object per cell, in simulation order.
inline std::string to_ndjson(CellTree const& tree)
{
    std::string out;
    for (auto const& n : tree.nodes)
    {
        Json j{{"label", label_string(n.label)},
               {"birth", n.birth},
               {"start_size", n.start_size},
               {"lifetime", n.lifetime},
               {"reason", to_string(n.reason)},
               {"jumps", n.path.jumps.size()}};
        out += j.dump() + '\n';
    }
    return out;
}

inline std::string to_ndjson(ParticleSystem const& sys)
{
    std::string out;
    for (auto const& p : sys.nodes)
    {
        Json j{{"label", p.label},
               {"birth", p.birth},
               {"birth_position", p.birth_position},
               {"lifetime", p.lifetime},
               {"reason", to_string(p.reason)}};
        if (p.reason == ParticleEnd::branched)
        {
            j["z_near"] = p.z_near;
            j["z_far"] = p.z_far;
        }
        out += j.dump() + '\n';
    }
    return out;
}

//! time,rank,value rows for each snapshot time.
template<class Values>
std::string snapshot_csv(std::vector<double> const& times, Values const& values_at,
                         char const* column)
{
    std::ostringstream os;
    os << std::setprecision(17) << "time,rank," << column << '\n';
    for (double t : times)
    {
        auto v = values_at(t);
        for (std::size_t i = 0; i < v.size(); ++i)
            os << t << ',' << i << ',' << v[i] << '\n';
    }
    return os.str();
}

}  // namespace gfsim
