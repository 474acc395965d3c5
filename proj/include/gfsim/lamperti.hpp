#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "path.hpp"

namespace gfsim {

struct LogJump
{
    double t;
    double z;
    std::size_t ordinal;
};

//---------------------------------------------------------------------------//
/*!
 * Piecewise-linear log path with jumps, defined on [0, end).
 *
 * Jump j sits at the boundary between two pieces. When killed is set the
 * path is sent to the cemetery at end.
 */
struct LogPath
{
    std::vector<LogPiece> pieces;
    std::vector<LogJump> jumps;
    double end = 0;
    bool killed = false;
};

inline LogPath log_path(PathSkeleton const& sk)
{
    LogPath lp;
    lp.pieces = sk.pieces();
    lp.jumps.reserve(sk.events().size());
    for (std::size_t j = 0; j < sk.events().size(); ++j)
        lp.jumps.push_back({sk.events()[j].t, sk.events()[j].z, j});
    lp.end = sk.end();
    lp.killed = sk.kill_time() <= sk.horizon();
    return lp;
}

namespace detail {
// log(expm1(y) / y)
inline double log_expm1_ratio(double y)
{
    if (y == 0)
        return 0;
    if (std::abs(y) < 1e-8)
        return y / 2;
    if (y > 0)
        return y + std::log1p(-std::exp(-y)) - std::log(y);
    return std::log(-std::expm1(y) / -y);
}

// Sizes outside [e^-575, e^575] are treated as absorbed when alpha != 0.
inline constexpr double log_size_floor = -575.0;
inline constexpr double log_size_ceiling = 575.0;
}  // namespace detail

//! Image of one log piece on the cell time axis.
struct CellPiece
{
    double t0;
    double t1;
    double s0;
    double s1;
    double v0;     // log size relative to x at s0
    double slope;  // d(log size)/ds
};

struct CellJump
{
    double t;
    double before;
    double after;
    double z;  // log(after / before)
    std::size_t ordinal;

    //! -Delta X, computed without cancellation.
    double fragment() const { return before * -std::expm1(z); }
};

enum class CellEnd
{
    covered,   // alive through covered_until
    killed,    // exponential killing
    absorbed,  // Lamperti clock exhausted, or size left the representable range
};

//---------------------------------------------------------------------------//
/*!
 * Self-similar cell path X(t) = x exp(xi(tau(t x^alpha))).
 *
 * Death is an absorption time; size_at returns 0 there and afterwards.
 */
class CellPath
{
  public:
    double x = 1;
    double alpha = 0;
    std::vector<CellPiece> pieces;
    std::vector<CellJump> jumps;
    double death_time = inf;
    double covered_until = 0;
    CellEnd end_kind = CellEnd::covered;

    double initial_size() const { return x; }

    //! Levy time at cell time t (inside a piece).
    double levy_time(CellPiece const& p, double t) const
    {
        if (alpha == 0)
            return t;
        if (!(t > p.t0))
            return p.s0;
        // Invert t - t0 = x^-alpha e^{-alpha v0} (e^{beta r} - 1) / beta.
        const double beta = -alpha * p.slope;
        const double lj = std::log(t - p.t0) + alpha * (std::log(x) + p.v0);
        if (beta == 0)
            return p.s0 + std::exp(lj);
        const double arg = beta * std::exp(lj);
        return p.s0 + std::log1p(std::max(arg, -1.0)) / beta;
    }

    double log_size_in(CellPiece const& p, double t) const
    {
        return std::log(x) + p.v0 + p.slope * (levy_time(p, t) - p.s0);
    }

    //! X(t), right-continuous; 0 once dead.
    double size_at(double t) const
    {
        if (t >= death_time)
            return 0;
        if (t > covered_until)
            throw DomainError("size_at: time beyond the simulated range");
        auto const* p = find(t);
        if (!p)
            return t == 0 ? x : 0.0;
        return std::exp(log_size_in(*p, t));
    }

    //! X(t-)
    double size_before(double t) const
    {
        if (t > death_time)
            return 0;
        auto it = std::lower_bound(jumps.begin(), jumps.end(), t,
                                   [](CellJump const& j, double v) { return j.t < v; });
        if (it != jumps.end() && it->t == t)
            return it->before;
        if (t == death_time)
        {
            auto const* p = find_before(t);
            return p ? std::exp(log_size_in(*p, t)) : 0;
        }
        return size_at(t);
    }

    /*!
     * First cell time at which the size is at most level, or inf if none
     * within the simulated range.
     */
    double first_passage_below(double level) const
    {
        if (x <= level)
            return 0;
        const double target = std::log(level) - std::log(x);
        for (auto const& p : pieces)
        {
            if (p.v0 <= target)
                return p.t0;
            if (p.slope < 0)
            {
                const double ds = (target - p.v0) / p.slope;
                const double t = cell_time_after(p, ds);
                if (t < p.t1)
                    return t;
            }
        }
        return inf;
    }

    //! Cell time at Levy offset ds from the start of piece p.
    double cell_time_after(CellPiece const& p, double ds) const
    {
        if (alpha == 0)
            return p.t0 + ds;
        const double beta = -alpha * p.slope;
        const double ld = -alpha * (std::log(x) + p.v0) + std::log(ds)
                          + detail::log_expm1_ratio(beta * ds);
        return p.t0 + std::exp(ld);
    }

    CellPiece const* find(double t) const
    {
        auto it = std::upper_bound(pieces.begin(), pieces.end(), t,
                                   [](double v, CellPiece const& p) { return v < p.t0; });
        if (it == pieces.begin())
            return nullptr;
        --it;
        return t < it->t1 || (t == it->t1 && t == covered_until) ? &*it : nullptr;
    }

  private:
    CellPiece const* find_before(double t) const
    {
        auto it = std::lower_bound(pieces.begin(), pieces.end(), t,
                                   [](CellPiece const& p, double v) { return p.t0 < v; });
        if (it == pieces.begin())
            return nullptr;
        return &*(it - 1);
    }
};

/*!
 * Lamperti image of a log path started from size x.
 *
 * On a linear piece the clock integral of e^{-alpha xi} is closed form, so
 * the transform is exact for the skeleton.
 */
inline CellPath lamperti_transform(LogPath const& lp, double alpha, double x)
{
    if (!(x > 0))
        throw DomainError("lamperti_transform: x must be positive");
    CellPath cp;
    cp.x = x;
    cp.alpha = alpha;
    cp.pieces.reserve(lp.pieces.size());
    const double lx = std::log(x);
    double t = 0;
    std::size_t j = 0;
    for (auto const& p : lp.pieces)
    {
        // Jumps at the left end of this piece.
        while (j < lp.jumps.size() && lp.jumps[j].t <= p.s0)
        {
            auto const& jp = lp.jumps[j];
            const double after = std::exp(lx + p.v0);
            cp.jumps.push_back({t, after * std::exp(-jp.z), after, jp.z, jp.ordinal});
            ++j;
        }
        double ds = p.s1 - p.s0;
        bool absorbed = false;
        if (alpha != 0)
        {
            // Stop where the size leaves the representable range.
            const double l0 = lx + p.v0;
            const double l1 = l0 + p.slope * ds;
            if (l0 <= detail::log_size_floor || l0 >= detail::log_size_ceiling)
            {
                cp.death_time = t;
                cp.covered_until = t;
                cp.end_kind = CellEnd::absorbed;
                return cp;
            }
            if (l1 <= detail::log_size_floor)
            {
                ds = (detail::log_size_floor - l0) / p.slope;
                absorbed = true;
            }
            else if (l1 >= detail::log_size_ceiling)
            {
                ds = (detail::log_size_ceiling - l0) / p.slope;
                absorbed = true;
            }
        }
        CellPiece cpc{t, 0, p.s0, p.s0 + ds, p.v0, p.slope};
        const double t1 = ds > 0 ? cp.cell_time_after(cpc, ds) : t;
        cpc.t1 = t1;
        if (t1 > t)
            cp.pieces.push_back(cpc);
        t = t1;
        if (absorbed)
        {
            cp.death_time = t;
            cp.covered_until = t;
            cp.end_kind = CellEnd::absorbed;
            return cp;
        }
        if (!std::isfinite(t))
            break;
    }
    cp.covered_until = t;
    if (lp.killed)
    {
        cp.death_time = t;
        cp.end_kind = CellEnd::killed;
    }
    return cp;
}

/*!
 * tau_t = inf{r : int_0^r e^{-alpha xi(s)} ds >= t}, extending the
 * skeleton as needed. Returns inf when the clock never reaches t.
 */
inline double time_change(PathSkeleton& sk, double alpha, double t)
{
    if (!(t >= 0))
        throw DomainError("time_change: t must be nonnegative");
    if (alpha == 0)
    {
        if (sk.kill_time() <= t)
            return inf;
        return t;
    }
    double horizon = std::max(sk.horizon(), 1.0);
    for (int iter = 0; iter < 64; ++iter)
    {
        sk.extend_to(horizon);
        auto cp = lamperti_transform(log_path(sk), alpha, 1.0);
        if (t < cp.covered_until)
        {
            if (t >= cp.death_time)
                return inf;
            auto const* p = cp.find(t);
            return p ? cp.levy_time(*p, t) : 0.0;
        }
        if (cp.end_kind != CellEnd::covered)
            return inf;
        horizon *= 2;
    }
    return inf;
}

/*!
 * Cell path covering [0, horizon], built from a log-path source indexed by
 * Levy horizon. The Levy horizon doubles until the cell horizon is covered,
 * the cell dies, or the size has reached stop_level (the caller does not
 * need the path past that point).
 */
template<class Source>
CellPath cover_cell_path(Source&& source, double alpha, double x, double horizon,
                         double levy_start, double stop_level = 0)
{
    double s = levy_start;
    for (int iter = 0;; ++iter)
    {
        CellPath cp = lamperti_transform(source(s), alpha, x);
        if (cp.covered_until >= horizon || cp.end_kind != CellEnd::covered)
            return cp;
        if (stop_level > 0 && cp.first_passage_below(stop_level) < inf)
            return cp;
        if (iter > 200)
            throw std::runtime_error("cell path did not cover its horizon");
        if (alpha == 0)
            s = std::max(2 * s, horizon);
        else
            s *= 2;
    }
}

inline CellPath self_similar_path(PathSkeleton& sk, double alpha, double x, double horizon)
{
    if (!(x > 0))
        throw DomainError("self_similar_path: x must be positive");
    return cover_cell_path(
        [&sk](double s) {
            sk.extend_to(s);
            return log_path(sk);
        },
        alpha, x, horizon, std::max(sk.horizon(), alpha == 0 ? horizon : 1.0));
}

}  // namespace gfsim
