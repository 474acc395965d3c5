#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <vector>

#include "levy.hpp"
#include "random.hpp"

namespace gfsim {

//---------------------------------------------------------------------------//
/*!
 * Compound Poisson sampler for the jumps at or below -small_jump_cutoff.
 *
 * Proposals arrive at the total base rate of all pieces; modulated density
 * pieces are thinned, so a proposal may yield no jump.
 */
class SnlpSampler
{
  public:
    explicit SnlpSampler(SnlpCharacteristics const& chars)
        : chars_(chars)
    {
        validate_levy(chars);
        drift_ = effective_drift(chars);
        const double delta = chars.levy.small_jump_cutoff;
        auto big = chars.levy.restricted(-inf, -delta);
        for (auto const& a : big.atoms)
        {
            rate_ += a.mass;
            cumulative_.push_back(rate_);
            pieces_.push_back({true, a.z, 0});
        }
        for (std::size_t i = 0; i < big.densities.size(); ++i)
        {
            auto const& d = big.densities[i];
            const double m = d.weight * d.base_mass();
            if (!(m > 0))
                continue;
            if (!std::isfinite(m))
                throw ConfigError("density piece is not samplable as compound Poisson: "
                                  + d.describe());
            rate_ += m;
            cumulative_.push_back(rate_);
            pieces_.push_back({false, 0, components_.size()});
            components_.push_back(d);
        }
    }

    SnlpCharacteristics const& characteristics() const { return chars_; }
    double drift() const { return drift_; }
    double sigma() const { return chars_.sigma; }
    double kill_rate() const { return chars_.kill_rate; }
    //! Total proposal rate.
    double rate() const { return rate_; }

    //! Draw the mark of one proposal; empty when thinned out.
    std::optional<double> draw_jump(RandomStream& rng) const
    {
        const double target = rng.uniform() * rate_;
        auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
        const std::size_t k = std::min<std::size_t>(it - cumulative_.begin(), pieces_.size() - 1);
        auto const& p = pieces_[k];
        if (p.atom)
            return p.z;
        auto const& d = components_[p.component];
        const double w = d.map(d.sample_base(rng.uniform()));
        if (d.modulation && rng.uniform() >= d.modulation(w))
            return std::nullopt;
        return w;
    }

  private:
    struct Piece
    {
        bool atom;
        double z;
        std::size_t component;
    };
    SnlpCharacteristics chars_;
    double drift_ = 0;
    double rate_ = 0;
    std::vector<double> cumulative_;
    std::vector<Piece> pieces_;
    std::vector<DensityComponent> components_;
};

struct JumpEvent
{
    double t;
    double z;
};

//! Linear stretch of a log path: value v0 + slope (s - s0) on [s0, s1).
struct LogPiece
{
    double s0;
    double s1;
    double v0;
    double slope;
};

//---------------------------------------------------------------------------//
/*!
 * One SNLP trajectory, generated lazily and extendable.
 *
 * Proposal j draws from jump stream split(j); Brownian grid cell k from
 * block k of the Brownian stream; the killing clock is fixed at
 * construction. Extending the horizon in any number of steps therefore gives
 * the same trajectory. Between grid nodes the diffusion part is linearly
 * interpolated, so the skeleton is piecewise linear with jumps.
 */
class PathSkeleton
{
  public:
    PathSkeleton(std::shared_ptr<SnlpSampler const> sampler, double grid_step,
                 RandomStream rng, double start_value = 0)
        : sampler_(std::move(sampler))
        , start_value_(start_value)
        , grid_step_(grid_step)
        , jump_stream_(rng.split(0))
        , brown_stream_(rng.split(1))
    {
        if (sampler_->sigma() > 0 && !(grid_step_ > 0))
            throw ConfigError("sigma > 0 requires a positive grid step");
        if (sampler_->sigma() == 0)
            grid_step_ = 0;
        const double k = sampler_->kill_rate();
        kill_time_ = k > 0 ? -std::log(rng.split(2).uniform_at(0)) / k : inf;
        next_proposal_ = sampler_->rate() > 0 ? propose(0) : inf;
        if (grid_step_ > 0)
            brownian_.push_back(0.0);
    }

    double start_value() const { return start_value_; }
    double horizon() const { return horizon_; }
    double grid_step() const { return grid_step_; }
    double kill_time() const { return kill_time_; }
    double drift() const { return sampler_->drift(); }
    std::vector<JumpEvent> const& events() const { return events_; }
    //! Cumulative diffusion sigma * B at grid nodes k * grid_step.
    std::vector<double> const& brownian() const { return brownian_; }
    SnlpSampler const& sampler() const { return *sampler_; }

    //! Time up to which the path is defined (horizon, or death if earlier).
    double end() const { return std::min(horizon_, kill_time_); }

    void extend_to(double horizon)
    {
        if (horizon <= horizon_)
            return;
        if (frozen_)
            throw DomainError("cannot extend a transformed path");
        horizon_ = horizon;
        const double stop = end();
        while (next_proposal_ < stop)
        {
            if (pending_mark_)
            {
                events_.push_back({next_proposal_, *pending_mark_});
                jump_sums_.push_back(jump_sums_.back() + *pending_mark_);
            }
            ++proposal_index_;
            next_proposal_ = propose(proposal_index_);
        }
        if (grid_step_ > 0)
        {
            const auto needed = static_cast<std::size_t>(std::ceil(stop / grid_step_)) + 1;
            const double sd = sampler_->sigma() * std::sqrt(grid_step_);
            while (brownian_.size() < needed + 1)
            {
                const std::size_t k = brownian_.size() - 1;
                brownian_.push_back(brownian_.back() + sd * brown_stream_.normal_at(k));
            }
        }
    }

    double diffusion(double t) const
    {
        if (grid_step_ <= 0)
            return 0;
        const double pos = t / grid_step_;
        const auto k = std::min(static_cast<std::size_t>(pos), brownian_.size() - 2);
        const double frac = pos - static_cast<double>(k);
        return brownian_[k] + frac * (brownian_[k + 1] - brownian_[k]);
    }

    //! xi(t), right-continuous.
    double value(double t) const
    {
        auto it = std::upper_bound(events_.begin(), events_.end(), t,
                                   [](double v, JumpEvent const& e) { return v < e.t; });
        return base(t) + jump_sums_[it - events_.begin()];
    }

    //! xi(t-)
    double value_before(double t) const
    {
        auto it = std::lower_bound(events_.begin(), events_.end(), t,
                                   [](JumpEvent const& e, double v) { return e.t < v; });
        return base(t) + jump_sums_[it - events_.begin()];
    }

    /*!
     * Linear pieces covering [0, end()). Piece boundaries are jump times and
     * grid nodes; jump j happens at the right end of the piece preceding it.
     * Each piece starts from the exact reconstruction of the path value.
     */
    std::vector<LogPiece> pieces() const
    {
        std::vector<LogPiece> out;
        const double stop = end();
        double s = 0;
        std::size_t j = 0;
        std::size_t k = 0;
        while (s < stop)
        {
            double next = stop;
            double slope = drift();
            if (grid_step_ > 0)
            {
                while (static_cast<double>(k + 1) * grid_step_ <= s)
                    ++k;
                next = std::min(next, static_cast<double>(k + 1) * grid_step_);
                slope += (brownian_[k + 1] - brownian_[k]) / grid_step_;
            }
            const bool jump_here = j < events_.size() && events_[j].t <= next;
            if (jump_here)
                next = events_[j].t;
            if (next > s)
                out.push_back({s, next, base(s) + jump_sums_[j], slope});
            if (jump_here)
                ++j;
            s = next;
        }
        return out;
    }

    //! Copy with the jump sizes replaced; the copy cannot be extended.
    PathSkeleton with_jump_sizes(std::vector<double> const& sizes) const
    {
        PathSkeleton p = *this;
        p.frozen_ = true;
        for (std::size_t i = 0; i < events_.size(); ++i)
        {
            p.events_[i].z = sizes[i];
            p.jump_sums_[i + 1] = p.jump_sums_[i] + sizes[i];
        }
        return p;
    }

  private:
    // Continuous part: start + drift t + diffusion(t).
    double base(double t) const { return start_value_ + drift() * t + diffusion(t); }

    double propose(std::uint64_t index)
    {
        auto s = jump_stream_.split(index);
        const double prev = index == 0 ? 0.0 : next_proposal_;
        const double t = prev + s.exponential(sampler_->rate());
        pending_mark_ = sampler_->draw_jump(s);
        return t;
    }

    std::shared_ptr<SnlpSampler const> sampler_;
    double start_value_ = 0;
    double horizon_ = 0;
    double grid_step_ = 0;
    double kill_time_ = inf;
    RandomStream jump_stream_;
    RandomStream brown_stream_;
    std::vector<JumpEvent> events_;
    std::vector<double> jump_sums_{0.0};  // jump_sums_[j] = sum of the first j jumps
    std::vector<double> brownian_;
    std::uint64_t proposal_index_ = 0;
    double next_proposal_ = inf;
    std::optional<double> pending_mark_;
    bool frozen_ = false;
};

inline PathSkeleton sample_snlp_path(SnlpCharacteristics const& chars, double horizon,
                                     std::optional<double> grid_step, RandomStream rng)
{
    if (!(horizon > 0))
        throw DomainError("sample_snlp_path: horizon must be positive");
    if (chars.sigma > 0 && !grid_step)
        throw ConfigError("sample_snlp_path: sigma > 0 requires a grid step");
    auto sampler = std::make_shared<SnlpSampler const>(chars);
    PathSkeleton path(sampler, grid_step.value_or(0), rng);
    path.extend_to(horizon);
    return path;
}

}  // namespace gfsim
