#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cellsystem.hpp"
#include "switching.hpp"

namespace gfsim {

struct BblpCharacteristics
{
    double sigma_b = 0;
    double c_b = 0;
    JumpMeasure levy_b;
    double k_b = 0;
    JumpMeasure mu_b;  // supported in [-log 2, 0)

    SnlpCharacteristics motion() const { return {sigma_b, c_b, levy_b, k_b}; }
};

inline void validate_bblp(BblpCharacteristics const& b)
{
    validate_levy(b.motion());
    for (auto const& a : b.mu_b.atoms)
        if (a.z < -ln2 - atom_tol || !(a.z < 0) || !(a.mass > 0))
            throw ConfigError("branching measure must be supported in [-log 2, 0)");
    for (auto const& d : b.mu_b.densities)
        if (d.out_lo() < -ln2 - atom_tol || d.out_hi() > 0)
            throw ConfigError("branching measure must be supported in [-log 2, 0): " + d.describe());
    validate_levy({0, 0, b.mu_b, 0});
}

//! e^{qz} + (1 - e^z)^q - 1 + q(1 - e^z)
inline double bblp_integrand(double q, double z)
{
    return phi_integrand(q, z) + kappa_integrand(q, z);
}

inline double bblp_cumulant(BblpCharacteristics const& b, double q)
{
    if (!(q >= 0))
        throw DomainError("bblp_cumulant: q must be nonnegative");
    for (auto const& d : b.mu_b.densities)
        if (detail::singular_at_zero(d, q))
            return inf;
    double k = laplace_exponent(b.motion(), q);
    if (!std::isfinite(k))
        return k;
    for (auto const& a : b.mu_b.atoms)
        k += a.mass * bblp_integrand(q, a.z);
    for (auto const& d : b.mu_b.densities)
        k += d.integrate([q](double w) { return bblp_integrand(q, w); });
    return k;
}

/*!
 * BBLP whose particle positions are the log sizes of the homogeneous
 * growth-fragmentation: drift c + int_{z<-log 2} (1 - 2e^z) Lambda, no
 * motion jumps, branching measure (Lambda + bar(Lambda)) on (-log 2, 0) plus
 * half of it at -log 2.
 */
inline BblpCharacteristics gf_to_bblp_characteristics(SnlpCharacteristics const& chars)
{
    BblpCharacteristics b;
    b.sigma_b = chars.sigma;
    b.k_b = chars.kill_rate;
    b.c_b = detail::symmetric_drift(chars);
    b.levy_b.small_jump_cutoff = chars.levy.small_jump_cutoff;
    b.mu_b.small_jump_cutoff = chars.levy.small_jump_cutoff;
    for (auto const& a : detail::symmetric_atoms(chars.levy))
    {
        if (std::abs(a.z + ln2) <= atom_tol)
            b.mu_b.add_atom(-ln2, 0.5 * a.mass);
        else if (a.z > -ln2)
            b.mu_b.add_atom(a.z, a.mass);
    }
    for (auto const& d : chars.levy.densities)
    {
        b.mu_b.add_density(d.restricted(-ln2, 0));
        b.mu_b.add_density(d.reflected_copy().restricted(-ln2, 0));
    }
    return b;
}

//---------------------------------------------------------------------------//
// Particle system
//---------------------------------------------------------------------------//

enum class ParticleEnd
{
    branched,
    killed,
    horizon,
    limit,
};

inline char const* to_string(ParticleEnd e)
{
    switch (e)
    {
        case ParticleEnd::branched: return "branched";
        case ParticleEnd::killed: return "killed";
        case ParticleEnd::horizon: return "horizon";
        case ParticleEnd::limit: return "limit";
    }
    return "?";
}

struct Particle
{
    std::string label;  // '1' closer child, '2' farther child
    double birth = 0;
    double birth_position = 0;
    double lifetime = 0;
    ParticleEnd reason = ParticleEnd::horizon;
    double z_near = 0;  // child displacements at a branch, z_near >= z_far
    double z_far = 0;
    std::shared_ptr<PathSkeleton const> motion;  // started from birth_position

    bool alive_at(double t) const
    {
        const double age = t - birth;
        if (age < 0)
            return false;
        return age < lifetime || (reason == ParticleEnd::horizon && age <= lifetime);
    }
    double position(double t) const { return motion->value(t - birth); }
    double end_position() const { return motion->value_before(lifetime); }
};

struct ParticleSystem
{
    std::vector<Particle> nodes;
    double truncation_level = -ln2;
    double horizon = 0;
    bool complete = true;
};

/*!
 * Simulator of the level-b truncation: branching measure
 * 1_{[-log 2, bar(b))} mu_b, with the rest of mu_b moved into the motion
 * jump measure and int (1 - e^z) mu^b added to the drift.
 *
 * Particle v with stream R moves with R.split(0), draws its branching time
 * and displacement from R.split(1); children use R.split(2), R.split(3).
 */
class BblpSimulator
{
  public:
    BblpSimulator(BblpCharacteristics b, double trunc, double grid_step = 1e-3)
        : b_(std::move(b)), trunc_(trunc), grid_step_(grid_step)
    {
        if (!(trunc <= -ln2))
            throw DomainError("simulate_bblp: truncation level must be <= -log 2");
        validate_bblp(b_);
        const double cut = detail::bar(trunc);
        JumpMeasure branching = b_.mu_b.restricted(-ln2, cut, true, false);
        branching.small_jump_cutoff = 0;  // finite, every branch is sampled
        SnlpCharacteristics motion = b_.motion();
        motion.c += branching.integrate([](double z) { return -std::expm1(z); });
        motion.levy.add(b_.mu_b.restricted(cut, 0, true, true));
        motion_ = std::make_shared<SnlpSampler const>(motion);
        rate_ = branching.total_mass();
        if (rate_ > 0)
            branch_ = std::make_shared<SnlpSampler const>(SnlpCharacteristics{0, 0, branching, 0});
    }

    double branching_rate() const { return rate_; }

    ParticleSystem simulate(double horizon, ResourceLimits const& limits,
                            RandomStream const& rng) const
    {
        ParticleSystem sys;
        sys.truncation_level = trunc_;
        sys.horizon = horizon;
        struct Pending
        {
            std::string label;
            double birth;
            double position;
            RandomStream stream;
        };
        std::deque<Pending> queue;
        queue.push_back({"", 0.0, 0.0, rng});
        while (!queue.empty())
        {
            Pending cur = std::move(queue.front());
            queue.pop_front();
            Particle p;
            p.label = std::move(cur.label);
            p.birth = cur.birth;
            p.birth_position = cur.position;
            if (sys.nodes.size() >= limits.max_nodes || p.label.size() > limits.max_generation)
            {
                p.reason = ParticleEnd::limit;
                sys.complete = false;
                sys.nodes.push_back(std::move(p));
                continue;
            }
            const double remaining = horizon - cur.birth;
            RandomStream bs = cur.stream.split(1);
            const double branch_at = rate_ > 0 ? bs.exponential(rate_) : inf;
            auto motion = std::make_shared<PathSkeleton>(motion_, grid_step_, cur.stream.split(0),
                                                         cur.position);
            const double until = std::min(branch_at, remaining);
            motion->extend_to(until > 0 ? until : 1e-300);
            if (motion->kill_time() <= until)
            {
                p.lifetime = motion->kill_time();
                p.reason = ParticleEnd::killed;
            }
            else if (branch_at <= remaining)
            {
                p.lifetime = branch_at;
                p.reason = ParticleEnd::branched;
                double z;
                for (;;)
                {
                    if (auto d = branch_->draw_jump(bs))
                    {
                        z = *d;
                        break;
                    }
                }
                const double zb = detail::bar(z);
                p.z_near = std::max(z, zb);
                p.z_far = std::min(z, zb);
                const double at = motion->value_before(branch_at);
                const double birth = cur.birth + branch_at;
                queue.push_back({p.label + '1', birth, at + p.z_near, cur.stream.split(2)});
                queue.push_back({p.label + '2', birth, at + p.z_far, cur.stream.split(3)});
            }
            else
            {
                p.lifetime = remaining;
                p.reason = ParticleEnd::horizon;
            }
            p.motion = std::move(motion);
            sys.nodes.push_back(std::move(p));
        }
        return sys;
    }

  private:
    BblpCharacteristics b_;
    double trunc_;
    double grid_step_;
    double rate_ = 0;
    std::shared_ptr<SnlpSampler const> motion_;
    std::shared_ptr<SnlpSampler const> branch_;
};

inline ParticleSystem simulate_bblp(BblpCharacteristics const& b, double trunc, double horizon,
                                    ResourceLimits const& limits, RandomStream const& rng)
{
    return BblpSimulator(b, trunc).simulate(horizon, limits, rng);
}

//! Positions alive at time t, descending.
inline std::vector<double> positions(ParticleSystem const& sys, double t)
{
    if (!(t >= 0) || t > sys.horizon)
        throw DomainError("positions: time outside [0, horizon]");
    std::vector<double> out;
    for (auto const& p : sys.nodes)
        if (p.reason != ParticleEnd::limit && p.alive_at(t))
            out.push_back(p.position(t));
    std::sort(out.begin(), out.end(), std::greater<>());
    return out;
}

/*!
 * Drop, at every branch, the farther child and its offspring when it is born
 * at distance >= |trunc2| from its mother.
 */
inline ParticleSystem truncate_system(ParticleSystem const& sys, double trunc2)
{
    if (!(trunc2 >= sys.truncation_level) || !(trunc2 <= -ln2))
        throw DomainError("truncate_system: level outside [current level, -log 2]");
    ParticleSystem out;
    out.truncation_level = trunc2;
    out.horizon = sys.horizon;
    out.complete = sys.complete;
    std::vector<std::string> dropped;
    for (auto const& p : sys.nodes)
    {
        // Nodes come in breadth-first order, so ancestors are seen first.
        bool skip = false;
        for (auto const& d : dropped)
        {
            if (p.label.compare(0, d.size(), d) == 0)
            {
                skip = true;
                break;
            }
        }
        if (skip)
            continue;
        out.nodes.push_back(p);
        if (p.reason == ParticleEnd::branched && p.z_far <= trunc2)
            dropped.push_back(p.label + '2');
    }
    return out;
}

/*!
 * Recover sigma, k, c and the atom masses of mu_b from a cumulant with no
 * motion jumps, given the candidate atom locations, by least squares on
 * the q grid. The columns are 1, q, q^2 and e^{qz_i} + (1 - e^{z_i})^q; the
 * affine part of the integrand folds into the first two.
 */
template<class Kappa>
BblpCharacteristics recover_bblp_atoms(Kappa const& kappa, std::vector<double> const& locations,
                                       std::vector<double> const& q_grid)
{
    const auto n = static_cast<Eigen::Index>(locations.size());
    const auto m = static_cast<Eigen::Index>(q_grid.size());
    if (m < n + 3)
        throw DomainError("recover_bblp_atoms: q grid too small");
    Eigen::MatrixXd a(m, n + 3);
    Eigen::VectorXd y(m);
    for (Eigen::Index r = 0; r < m; ++r)
    {
        const double q = q_grid[r];
        a(r, 0) = 1;
        a(r, 1) = q;
        a(r, 2) = 0.5 * q * q;
        for (Eigen::Index i = 0; i < n; ++i)
        {
            const double z = locations[i];
            a(r, 3 + i) = std::exp(q * z) + kappa_integrand(q, z);
        }
        y(r) = kappa(q);
    }
    const Eigen::VectorXd x = a.colPivHouseholderQr().solve(y);
    BblpCharacteristics b;
    double total = 0;
    double comp = 0;
    for (Eigen::Index i = 0; i < n; ++i)
    {
        b.mu_b.add_atom(locations[i], x(3 + i));
        total += x(3 + i);
        comp += x(3 + i) * -std::expm1(locations[i]);
    }
    b.k_b = -x(0) - total;
    b.c_b = x(1) - comp;
    b.sigma_b = std::sqrt(std::max(x(2), 0.0));
    return b;
}

}  // namespace gfsim
