#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lamperti.hpp"

namespace gfsim {

struct ResourceLimits
{
    std::size_t max_nodes = 1'000'000;
    std::size_t max_generation = 60;
    std::uint64_t max_events = 100'000'000;
};

struct CellModel
{
    SnlpCharacteristics chars;
    double alpha = 0;
    double start_size = 1;
    double grid_step = 1e-3;  // only used when sigma > 0
};

//! Smallest q on the grid 0.01, 0.02, ..., 20 with kappa(q) < 0.
inline std::optional<double> negative_cumulant_point(SnlpCharacteristics const& chars)
{
    for (int j = 1; j <= 2000; ++j)
    {
        const double q = 0.01 * j;
        if (cumulant(chars, q) < 0)
            return q;
    }
    return std::nullopt;
}

/*!
 * Validate a cell model. Returns a warning (possibly empty); throws
 * ConfigError when alpha != 0 and kappa never goes negative.
 */
inline std::string validate_model(CellModel const& m)
{
    validate_levy(m.chars);
    if (!(m.start_size > 0))
        throw ConfigError("start size must be positive");
    if (!negative_cumulant_point(m.chars))
    {
        const std::string msg = "kappa(q) >= 0 for every q on the grid (0, 20]";
        if (m.alpha != 0)
            throw ConfigError("self-similar model needs kappa(q) < 0 for some q: " + msg);
        return msg;
    }
    return {};
}

enum class KillReason
{
    eps,       // entered (0, eps]
    killed,    // exponential killing of the underlying process
    absorbed,  // Lamperti absorption
    horizon,   // alive at the horizon
    limit,     // not simulated because a resource limit was reached
};

inline char const* to_string(KillReason r)
{
    switch (r)
    {
        case KillReason::eps: return "eps";
        case KillReason::killed: return "killed";
        case KillReason::absorbed: return "absorbed";
        case KillReason::horizon: return "horizon";
        case KillReason::limit: return "limit";
    }
    return "?";
}

using Label = std::vector<std::uint32_t>;

struct CellNode
{
    Label label;
    double birth = 0;
    double start_size = 0;
    double parent_jump = 0;  // -Delta X of the mother at birth (start size of Eve for the root)
    CellPath path;
    double lifetime = 0;  // age at which the cell stops
    KillReason reason = KillReason::horizon;

    //! Whether the cell is counted in the snapshot at absolute time t.
    bool alive_at(double t) const
    {
        const double age = t - birth;
        if (age < 0)
            return false;
        return age < lifetime || (reason == KillReason::horizon && age <= lifetime);
    }
};

struct CellTree
{
    std::vector<CellNode> nodes;
    double eps = 0;
    double horizon = 0;
    bool complete = true;
    std::size_t eps_kills = 0;
    std::uint64_t events = 0;
};

struct Snapshot
{
    double time = 0;
    std::vector<double> sizes;  // descending
};

inline double q_mass(Snapshot const& s, double q)
{
    double m = 0;
    for (double y : s.sizes)
        m += std::pow(y, q);
    return m;
}

namespace detail {
inline double initial_levy_horizon(double alpha, double x, double horizon)
{
    if (alpha == 0)
        return horizon;
    return std::max(horizon * std::pow(x, alpha), 1e-3);
}

inline CellPath grow_cell(std::shared_ptr<SnlpSampler const> const& sampler, double grid_step,
                          RandomStream const& stream, double alpha, double x, double horizon,
                          double stop_level, std::uint64_t& events)
{
    PathSkeleton sk(sampler, grid_step, stream);
    auto cp = cover_cell_path(
        [&sk](double s) {
            sk.extend_to(s);
            return log_path(sk);
        },
        alpha, x, horizon, initial_levy_horizon(alpha, x, horizon), stop_level);
    events += sk.events().size();
    return cp;
}
}  // namespace detail

//---------------------------------------------------------------------------//
/*!
 * Eps-truncated cell system simulator for one model.
 *
 * Cell u with stream S spawns, at its jump with ordinal j, a daughter with
 * label u.(j+1) and stream S.split(j+1). Labels and streams depend only on
 * the jump sequence, so runs with nested eps share every surviving cell.
 */
class CellSystemSimulator
{
  public:
    explicit CellSystemSimulator(CellModel model)
        : model_(std::move(model))
    {
        validate_model(model_);
        sampler_ = std::make_shared<SnlpSampler const>(model_.chars);
    }

    CellModel const& model() const { return model_; }
    std::shared_ptr<SnlpSampler const> const& sampler() const { return sampler_; }

    CellTree simulate(double eps, double horizon, ResourceLimits const& limits,
                      RandomStream const& rng, std::optional<double> start = {}) const
    {
        const double x = start.value_or(model_.start_size);
        if (!(eps > 0))
            throw DomainError("simulate_cell_system: eps must be positive");
        if (!(horizon >= 0))
            throw DomainError("simulate_cell_system: horizon must be nonnegative");
        CellTree tree;
        tree.eps = eps;
        tree.horizon = horizon;

        struct Pending
        {
            Label label;
            double birth;
            double size;
            RandomStream stream;
        };
        std::deque<Pending> queue;
        queue.push_back({{}, 0.0, x, rng});
        while (!queue.empty())
        {
            Pending cur = std::move(queue.front());
            queue.pop_front();
            CellNode node;
            node.label = std::move(cur.label);
            node.birth = cur.birth;
            node.start_size = cur.size;
            node.parent_jump = cur.size;
            const double remaining = horizon - cur.birth;
            if (tree.nodes.size() >= limits.max_nodes || node.label.size() > limits.max_generation
                || tree.events >= limits.max_events)
            {
                node.reason = KillReason::limit;
                node.lifetime = 0;
                tree.complete = false;
                tree.nodes.push_back(std::move(node));
                continue;
            }
            node.path = detail::grow_cell(sampler_, model_.grid_step, cur.stream, model_.alpha,
                                          cur.size, remaining, eps, tree.events);
            const double t_eps = node.path.first_passage_below(eps);
            const double death = node.path.death_time;
            if (t_eps <= std::min(death, remaining))
            {
                node.lifetime = t_eps;
                node.reason = KillReason::eps;
                ++tree.eps_kills;
            }
            else if (death <= remaining)
            {
                node.lifetime = death;
                node.reason = node.path.end_kind == CellEnd::killed ? KillReason::killed
                                                                    : KillReason::absorbed;
            }
            else
            {
                node.lifetime = remaining;
                node.reason = KillReason::horizon;
            }
            // A daughter born at the jump that takes the mother below eps
            // is not a future descendant, so it is kept.
            for (auto const& j : node.path.jumps)
            {
                if (j.t > node.lifetime)
                    break;
                const double d = j.fragment();
                if (!(d > eps))
                    continue;
                Label l = node.label;
                l.push_back(static_cast<std::uint32_t>(j.ordinal + 1));
                queue.push_back({std::move(l), cur.birth + j.t, d, cur.stream.split(j.ordinal + 1)});
            }
            tree.nodes.push_back(std::move(node));
        }
        return tree;
    }

  private:
    CellModel model_;
    std::shared_ptr<SnlpSampler const> sampler_;
};

inline CellTree simulate_cell_system(CellModel const& model, double eps, double horizon,
                                     ResourceLimits const& limits, RandomStream const& rng)
{
    if (!(eps < model.start_size))
        throw DomainError("simulate_cell_system: eps must be below the start size");
    return CellSystemSimulator(model).simulate(eps, horizon, limits, rng);
}

inline Snapshot snapshot(CellTree const& tree, double t)
{
    if (!(t >= 0) || t > tree.horizon)
        throw DomainError("snapshot: time outside [0, horizon]");
    Snapshot s;
    s.time = t;
    for (auto const& n : tree.nodes)
    {
        if (n.reason == KillReason::limit || !n.alive_at(t))
            continue;
        const double y = n.path.size_at(t - n.birth);
        if (y > 0)
            s.sizes.push_back(y);
    }
    std::sort(s.sizes.begin(), s.sizes.end(), std::greater<>());
    return s;
}

/*!
 * int_0^{t_end} X(t)^p dt along one cell path.
 *
 * With dt = x^-alpha e^{-alpha xi} ds this is x^{p-alpha} int e^{(p-alpha) xi(s)} ds
 * in Levy time, closed form on each linear piece.
 */
inline double integrate_power(CellPath const& cp, double p, double t_end)
{
    const double e = p - cp.alpha;
    const double lx = std::log(cp.x);
    double total = 0;
    for (auto const& pc : cp.pieces)
    {
        if (pc.t0 >= t_end)
            break;
        const double s1 = pc.t1 <= t_end ? pc.s1 : cp.levy_time(pc, t_end);
        const double ds = s1 - pc.s0;
        if (!(ds > 0))
            continue;
        const double y = e * pc.slope * ds;
        total += std::exp(p * lx - cp.alpha * lx + e * pc.v0 + std::log(ds)
                          + detail::log_expm1_ratio(y));
    }
    return total;
}

//! int_0^{t_max} sum of X_u^{q + alpha} over living cells.
inline double time_integrated_mass(CellTree const& tree, double q, double alpha, double t_max)
{
    if (t_max > tree.horizon)
        throw DomainError("time_integrated_mass: t_max beyond the tree horizon");
    double total = 0;
    for (auto const& n : tree.nodes)
    {
        if (n.reason == KillReason::limit || n.birth >= t_max)
            continue;
        const double t_end = std::min(n.lifetime, t_max - n.birth);
        total += integrate_power(n.path, q + alpha, t_end);
    }
    return total;
}

using TimeSizeFunction = std::function<double(double, double)>;

struct ExcessiveDraw
{
    double total = 0;  // f(s + t, X(t)) + jump sum
    double jumps = 0;  // jump sum alone
};

/*!
 * One draw of f(s + t, X(t)) + sum_{r <= t} f(s + r, -Delta X(r)) along a
 * single cell path from the model's start size, with the jump sum reported
 * separately.
 */
inline ExcessiveDraw excessive_parts(CellSystemSimulator const& sim, TimeSizeFunction const& f,
                                     double s, double t, RandomStream const& rng)
{
    auto const& m = sim.model();
    std::uint64_t events = 0;
    auto cp = detail::grow_cell(sim.sampler(), m.grid_step, rng, m.alpha, m.start_size, t, 0,
                                events);
    ExcessiveDraw d;
    for (auto const& j : cp.jumps)
    {
        if (j.t > t)
            break;
        d.jumps += f(s + j.t, j.fragment());
    }
    const double xt = t >= cp.death_time ? 0.0 : cp.size_at(t);
    d.total = d.jumps + (xt > 0 ? f(s + t, xt) : 0.0);
    return d;
}

inline double excessive_sample(CellSystemSimulator const& sim, TimeSizeFunction const& f,
                               double s, double t, RandomStream const& rng)
{
    return excessive_parts(sim, f, s, t, rng).total;
}

inline double excessive_sample(CellModel const& model, TimeSizeFunction const& f, double s,
                               double t, RandomStream const& rng)
{
    return excessive_sample(CellSystemSimulator(model), f, s, t, rng);
}

}  // namespace gfsim
