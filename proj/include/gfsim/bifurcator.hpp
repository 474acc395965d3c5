#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <memory>
#include <string>
#include <vector>

#include "cellsystem.hpp"
#include "switching.hpp"

namespace gfsim {

struct BifurcatorPath
{
    CellPath path_x;
    CellPath path_y;
    double switch_time = inf;  // cell time; inf if not reached within the simulated range
};

namespace detail {
// Concatenation of the switched path up to tau and an independent copy after it.
inline LogPath switched_log_path(PathSkeleton const& xi, std::size_t marked,
                                 PathSkeleton& tail, double levy_horizon)
{
    const double tau = xi.events()[marked].t;
    const double zbar = detail::bar(xi.events()[marked].z);
    LogPath lp;
    for (auto const& p : xi.pieces())
    {
        if (p.s0 >= tau)
            break;
        lp.pieces.push_back(p);
    }
    for (std::size_t j = 0; j < marked; ++j)
        lp.jumps.push_back({xi.events()[j].t, xi.events()[j].z, j});
    lp.jumps.push_back({tau, zbar, marked});
    const double v_tau = xi.value_before(tau) + zbar;
    tail.extend_to(std::max(levy_horizon - tau, 1e-12));
    for (auto p : tail.pieces())
    {
        p.s0 += tau;
        p.s1 += tau;
        p.v0 += v_tau;
        lp.pieces.push_back(p);
    }
    const std::size_t offset = xi.events().size() + (std::size_t{1} << 40);
    for (std::size_t j = 0; j < tail.events().size(); ++j)
        lp.jumps.push_back({tail.events()[j].t + tau, tail.events()[j].z, offset + j});
    lp.end = tau + tail.end();
    lp.killed = tail.kill_time() <= tail.horizon();
    return lp;
}
}  // namespace detail

//---------------------------------------------------------------------------//
/*!
 * Switching-based bifurcator of two cell processes with equal cumulants.
 *
 * For one bifurcator with stream R: the driving path uses R.split(0), the
 * switching marks are the uniforms at blocks of R.split(1) and the
 * post-switch copy uses R.split(2).
 */
class BifurcatorFactory
{
  public:
    BifurcatorFactory(SnlpCharacteristics const& chars_x, SnlpCharacteristics const& chars_y,
                      double alpha, double grid_step = 1e-3)
        : alpha_(alpha), grid_step_(grid_step)
    {
        if (auto why = kappa_mismatch_reason(chars_x, chars_y))
            throw ConfigError("bifurcator needs equal cumulants: " + *why);
        if (alpha != 0)
        {
            if (!negative_cumulant_point(chars_x))
                throw ConfigError("self-similar bifurcator needs kappa(q) < 0 for some q");
        }
        sampler_x_ = std::make_shared<SnlpSampler const>(chars_x);
        sampler_y_ = std::make_shared<SnlpSampler const>(chars_y);
        p_ = canonical_switch_probability(chars_y);
        detail::require_valid(p_, chars_x.levy);
    }

    double alpha() const { return alpha_; }
    SwitchProbability const& switch_probability() const { return p_; }
    SnlpCharacteristics const& chars_x() const { return sampler_x_->characteristics(); }
    SnlpCharacteristics const& chars_y() const { return sampler_y_->characteristics(); }

    /*!
     * Build one bifurcator from size x covering [0, horizon]. The Y path is
     * skipped when with_y is false; stop_level lets the X path stop early
     * once it has reached that size.
     */
    BifurcatorPath build(double x, double horizon, RandomStream const& rng, bool with_y = true,
                         double stop_level = 0) const
    {
        PathSkeleton xi(sampler_x_, grid_step_, rng.split(0));
        const RandomStream marks = rng.split(1);
        BifurcatorPath b;
        b.path_x = cover_cell_path(
            [&xi](double s) {
                xi.extend_to(s);
                return log_path(xi);
            },
            alpha_, x, horizon, detail::initial_levy_horizon(alpha_, x, horizon), stop_level);

        auto first_mark = [&]() -> std::optional<std::size_t> {
            auto const& ev = xi.events();
            for (std::size_t j = 0; j < ev.size(); ++j)
                if (marks.uniform_at(j) < p_(ev[j].z) && std::abs(ev[j].z + ln2) > atom_tol)
                    return j;
            return std::nullopt;
        };
        if (auto j = first_mark())
        {
            for (auto const& jp : b.path_x.jumps)
            {
                if (jp.ordinal == *j)
                {
                    b.switch_time = jp.t;
                    break;
                }
            }
        }
        if (!with_y)
            return b;

        PathSkeleton tail(sampler_y_, grid_step_, rng.split(2));
        b.path_y = cover_cell_path(
            [&](double s) {
                xi.extend_to(s);
                auto j = first_mark();
                if (!j)
                {
                    // Marked jumps at the fixed point leave the path unchanged.
                    return log_path(xi);
                }
                return detail::switched_log_path(xi, *j, tail, s);
            },
            alpha_, x, horizon, std::max(xi.horizon(), 1e-3));
        return b;
    }

  private:
    double alpha_;
    double grid_step_;
    std::shared_ptr<SnlpSampler const> sampler_x_;
    std::shared_ptr<SnlpSampler const> sampler_y_;
    SwitchProbability p_;
};

inline BifurcatorPath build_homogeneous_bifurcator(SnlpCharacteristics const& chars_x,
                                                   SnlpCharacteristics const& chars_y, double x,
                                                   double horizon, RandomStream const& rng)
{
    return BifurcatorFactory(chars_x, chars_y, 0).build(x, horizon, rng);
}

inline BifurcatorPath build_self_similar_bifurcator(SnlpCharacteristics const& chars_x,
                                                    SnlpCharacteristics const& chars_y,
                                                    double alpha, double x, double horizon,
                                                    RandomStream const& rng)
{
    if (alpha != 0 && !negative_cumulant_point(chars_y))
        throw ConfigError("self-similar bifurcator needs kappa(q) < 0 for some q");
    return BifurcatorFactory(chars_x, chars_y, alpha).build(x, horizon, rng);
}

//---------------------------------------------------------------------------//
// Coupled bivariate system
//---------------------------------------------------------------------------//

enum class CoupledEnd
{
    eps,       // X entered (0, eps] strictly first: killed
    big_jump,  // branch at a jump of size > eps, non-marked
    switched,  // branch at the switching time, marked
    killed,    // X died, or none of the three times is finite
    horizon,   // alive at the horizon
    limit,     // not simulated
};

inline char const* to_string(CoupledEnd e)
{
    switch (e)
    {
        case CoupledEnd::eps: return "eps";
        case CoupledEnd::big_jump: return "big_jump";
        case CoupledEnd::switched: return "switch";
        case CoupledEnd::killed: return "killed";
        case CoupledEnd::horizon: return "horizon";
        case CoupledEnd::limit: return "limit";
    }
    return "?";
}

struct CoupledNode
{
    std::string label;  // over {'1', '2'}: '1' left child, '2' right child
    double birth = 0;
    double start_size = 0;
    double lifetime = 0;
    bool marked = false;
    CoupledEnd reason = CoupledEnd::horizon;
    double child_left = 0;
    double child_right = 0;
    CellPath path_x;

    bool alive_at(double t) const
    {
        const double age = t - birth;
        if (age < 0)
            return false;
        return age < lifetime || (reason == CoupledEnd::horizon && age <= lifetime);
    }
};

struct CoupledSystem
{
    std::vector<CoupledNode> nodes;
    double eps = 0;
    double horizon = 0;
    bool complete = true;
    std::size_t eps_kills = 0;
};

class CoupledSystemSimulator
{
  public:
    CoupledSystemSimulator(SnlpCharacteristics const& chars_x, SnlpCharacteristics const& chars_y,
                           double alpha, double grid_step = 1e-3)
        : factory_(chars_x, chars_y, alpha, grid_step)
    {
        if (alpha != 0 && !negative_cumulant_point(chars_y))
            throw ConfigError("self-similar bifurcator needs kappa(q) < 0 for some q");
    }

    BifurcatorFactory const& factory() const { return factory_; }

    /*!
     * Node v with stream R builds its bifurcator from R.split(0); its
     * children use R.split(1) and R.split(2). Nodes on the leftmost branch
     * keep their X path up to the horizon so that the branch can be
     * continued past its kill time.
     */
    CoupledSystem simulate(double x, double eps, double horizon, ResourceLimits const& limits,
                           RandomStream const& rng) const
    {
        if (!(eps > 0))
            throw DomainError("simulate_coupled_system: eps must be positive");
        CoupledSystem sys;
        sys.eps = eps;
        sys.horizon = horizon;
        struct Pending
        {
            std::string label;
            double birth;
            double size;
            RandomStream stream;
        };
        std::deque<Pending> queue;
        queue.push_back({"", 0.0, x, rng});
        while (!queue.empty())
        {
            Pending cur = std::move(queue.front());
            queue.pop_front();
            CoupledNode node;
            node.label = std::move(cur.label);
            node.birth = cur.birth;
            node.start_size = cur.size;
            const double remaining = horizon - cur.birth;
            if (sys.nodes.size() >= limits.max_nodes || node.label.size() > limits.max_generation)
            {
                node.reason = CoupledEnd::limit;
                sys.complete = false;
                sys.nodes.push_back(std::move(node));
                continue;
            }
            const bool leftmost = node.label.find('2') == std::string::npos;
            if (cur.size <= eps && !leftmost)
            {
                node.reason = CoupledEnd::eps;
                node.lifetime = 0;
                ++sys.eps_kills;
                sys.nodes.push_back(std::move(node));
                continue;
            }
            auto b = factory_.build(cur.size, remaining, cur.stream.split(0), false,
                                    leftmost ? 0.0 : eps);
            node.path_x = std::move(b.path_x);
            auto const& px = node.path_x;
            const double t_eps = px.first_passage_below(eps);
            double t_big = inf;
            CellJump const* big = nullptr;
            CellJump const* at_tau = nullptr;
            for (auto const& j : px.jumps)
            {
                if (!big && j.fragment() > eps)
                {
                    t_big = j.t;
                    big = &j;
                }
                if (!at_tau && j.t == b.switch_time)
                    at_tau = &j;
                if (big && (at_tau || b.switch_time == inf))
                    break;
            }
            const double tau = b.switch_time;
            const double delta = std::min({tau, t_eps, t_big});
            const double death = px.death_time;
            if (delta > remaining && death > remaining)
            {
                node.lifetime = remaining;
                node.reason = CoupledEnd::horizon;
            }
            else if (death < delta || delta == inf)
            {
                node.lifetime = death;
                node.reason = CoupledEnd::killed;
            }
            else if (t_eps == delta && t_eps < std::min(tau, t_big))
            {
                node.lifetime = t_eps;
                node.reason = CoupledEnd::eps;
                ++sys.eps_kills;
            }
            else
            {
                node.lifetime = delta;
                node.marked = tau == delta;
                node.reason = node.marked ? CoupledEnd::switched : CoupledEnd::big_jump;
                CellJump const* j = node.marked ? at_tau : big;
                node.child_left = j->after;
                node.child_right = j->fragment();
                const double birth = cur.birth + delta;
                queue.push_back({node.label + '1', birth, node.child_left, cur.stream.split(1)});
                queue.push_back({node.label + '2', birth, node.child_right, cur.stream.split(2)});
            }
            sys.nodes.push_back(std::move(node));
        }
        return sys;
    }

  private:
    BifurcatorFactory factory_;
};

inline CoupledSystem simulate_coupled_system(SnlpCharacteristics const& chars_x,
                                             SnlpCharacteristics const& chars_y, double alpha,
                                             double x, double eps, double horizon,
                                             ResourceLimits const& limits, RandomStream const& rng)
{
    return CoupledSystemSimulator(chars_x, chars_y, alpha).simulate(x, eps, horizon, limits, rng);
}

//! Multiset of X sizes alive at time t, descending.
inline Snapshot snapshot(CoupledSystem const& sys, double t)
{
    if (!(t >= 0) || t > sys.horizon)
        throw DomainError("snapshot: time outside [0, horizon]");
    Snapshot s;
    s.time = t;
    for (auto const& n : sys.nodes)
    {
        if (n.reason == CoupledEnd::limit || !n.alive_at(t))
            continue;
        const double y = n.path_x.size_at(t - n.birth);
        if (y > 0)
            s.sizes.push_back(y);
    }
    std::sort(s.sizes.begin(), s.sizes.end(), std::greater<>());
    return s;
}

/*!
 * Leftmost X-branch at time t, continued past the kill time of the first
 * killed node along it.
 */
inline double leftmost_branch_value(CoupledSystem const& sys, double t)
{
    std::string label;
    for (;;)
    {
        auto it = std::find_if(sys.nodes.begin(), sys.nodes.end(),
                               [&](CoupledNode const& n) { return n.label == label; });
        if (it == sys.nodes.end())
            throw std::runtime_error("leftmost branch is incomplete");
        auto const& n = *it;
        const bool branched = n.reason == CoupledEnd::big_jump || n.reason == CoupledEnd::switched;
        if (!branched || t < n.birth + n.lifetime)
        {
            const double age = t - n.birth;
            if (age >= n.path_x.death_time)
                return 0;
            return n.path_x.size_at(age);
        }
        label += '1';
    }
}

}  // namespace gfsim
