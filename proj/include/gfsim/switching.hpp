#pragma once

#include <cmath>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "path.hpp"

namespace gfsim {

//---------------------------------------------------------------------------//
/*!
 * Switching probability p on (-inf, 0).
 *
 * Tabulated p is piecewise constant: values[0] on (-inf, breaks[0]),
 * values[i] on [breaks[i-1], breaks[i]) and values.back() up to 0.
 * Radon-Nikodym p is bar(L)/(L + bar(L)) for a target measure L: the atom
 * mass ratio at atoms of L + bar(L), the density ratio elsewhere.
 */
struct SwitchProbability
{
    enum class Kind
    {
        constant,
        canonical_halfline,
        radon_nikodym,
        tabulated
    };

    Kind kind = Kind::constant;
    double p0 = 0;
    std::vector<double> breaks;
    std::vector<double> values;
    std::shared_ptr<JumpMeasure const> target;

    static SwitchProbability constant(double p)
    {
        if (!(p >= 0 && p <= 1))
            throw ConfigError("constant switching probability must lie in [0, 1]");
        SwitchProbability s;
        s.p0 = p;
        return s;
    }
    static SwitchProbability halfline()
    {
        SwitchProbability s;
        s.kind = Kind::canonical_halfline;
        return s;
    }
    static SwitchProbability tabulated(std::vector<double> breaks, std::vector<double> values)
    {
        if (values.size() != breaks.size() + 1)
            throw ConfigError("tabulated switching probability needs one more value than breaks");
        for (std::size_t i = 0; i < breaks.size(); ++i)
            if (!(breaks[i] < 0) || (i > 0 && !(breaks[i] > breaks[i - 1])))
                throw ConfigError("tabulated breaks must be increasing and negative");
        for (double v : values)
            if (!(v >= 0 && v <= 1))
                throw ConfigError("tabulated values must lie in [0, 1]");
        SwitchProbability s;
        s.kind = Kind::tabulated;
        s.breaks = std::move(breaks);
        s.values = std::move(values);
        return s;
    }

    //! Mass-ratio value at z when z is an atom of the target (or its image).
    std::optional<double> atom_value(double z) const
    {
        const double m = target->atom_mass_at(z);
        const double mbar = target->atom_mass_at(detail::bar(z));
        if (m + mbar > 0)
            return mbar / (m + mbar);
        return std::nullopt;
    }

    double density_value(double z) const
    {
        double rho = 0;
        double rhobar = 0;
        const double zb = detail::bar(z);
        for (auto const& d : target->densities)
        {
            rho += d.density(z);
            // Density of the image measure at z is the density at bar(z)
            // times the Jacobian e^{z - bar(z)}.
            rhobar += d.density(zb) * std::exp(z - zb);
        }
        return rho + rhobar > 0 ? rhobar / (rho + rhobar) : 0.0;
    }

    double operator()(double z) const
    {
        switch (kind)
        {
            case Kind::constant: return p0;
            case Kind::canonical_halfline:
                if (std::abs(z + ln2) <= atom_tol)
                    return 0.5;
                return z < -ln2 ? 1.0 : 0.0;
            case Kind::tabulated: {
                auto it = std::upper_bound(breaks.begin(), breaks.end(), z);
                return values[it - breaks.begin()];
            }
            case Kind::radon_nikodym:
                if (auto a = atom_value(z))
                    return *a;
                return density_value(z);
        }
        return 0;
    }

    std::string name() const
    {
        const char* names[] = {"constant", "canonical_halfline", "radon_nikodym", "tabulated"};
        return names[static_cast<int>(kind)];
    }
};

/*!
 * The measure p * levy, or (1 - p) * levy when complement is set.
 *
 * Structured kinds split density pieces along the level sets of p, so only
 * the Radon-Nikodym kind needs a modulation.
 */
inline JumpMeasure multiply(JumpMeasure const& levy, SwitchProbability const& p,
                            bool complement = false)
{
    using Kind = SwitchProbability::Kind;
    auto val = [&](double v) { return complement ? 1 - v : v; };
    JumpMeasure out;
    out.small_jump_cutoff = levy.small_jump_cutoff;
    switch (p.kind)
    {
        case Kind::constant: return levy.scaled(val(p.p0));
        case Kind::canonical_halfline:
            for (auto const& a : levy.atoms)
                out.add_atom(a.z, a.mass * val(p(a.z)));
            for (auto const& d : levy.densities)
            {
                if (complement)
                    out.add_density(d.restricted(-ln2, 0));
                else
                    out.add_density(d.restricted(-inf, -ln2));
            }
            return out;
        case Kind::tabulated:
            for (auto const& a : levy.atoms)
                out.add_atom(a.z, a.mass * val(p(a.z)));
            for (auto const& d : levy.densities)
            {
                for (std::size_t i = 0; i < p.values.size(); ++i)
                {
                    const double lo = i == 0 ? -inf : p.breaks[i - 1];
                    const double hi = i == p.breaks.size() ? 0.0 : p.breaks[i];
                    auto piece = d.restricted(lo, hi);
                    piece.weight *= val(p.values[i]);
                    out.add_density(piece);
                }
            }
            return out;
        case Kind::radon_nikodym:
            for (auto const& a : levy.atoms)
                out.add_atom(a.z, a.mass * val(p(a.z)));
            for (auto const& d : levy.densities)
            {
                auto pp = p;
                out.add_density(d.modulated([pp, complement](double w) {
                    const double v = pp.density_value(w);
                    return complement ? 1 - v : v;
                }));
            }
            return out;
    }
    return out;
}

struct SwitchValidation
{
    bool ok = false;
    double rate = 0;  // int p dLambda
    bool complementarity = false;
    std::string message;
};

namespace detail {
inline bool complementary(SwitchProbability const& p)
{
    using Kind = SwitchProbability::Kind;
    switch (p.kind)
    {
        case Kind::constant: return p.p0 == 0.5;
        case Kind::canonical_halfline: return true;
        case Kind::radon_nikodym: return true;  // ratio of a measure and its image
        case Kind::tabulated:
            for (int j = 0; j < 10000; ++j)
            {
                const double z = std::log((j + 0.5) / 1e4);
                if (std::abs(p(z) + p(detail::bar(z)) - 1) > 1e-9)
                    return false;
            }
            return true;
    }
    return false;
}
}  // namespace detail

inline SwitchValidation validate_switch_probability(SwitchProbability const& p,
                                                    JumpMeasure const& levy)
{
    SwitchValidation v;
    if (p.kind == SwitchProbability::Kind::radon_nikodym && !p.target)
    {
        v.message = "radon_nikodym switching probability has no target measure";
        return v;
    }
    v.complementarity = detail::complementary(p);
    auto weighted = multiply(levy, p);
    for (auto const& a : weighted.atoms)
        v.rate += a.mass;
    for (auto const& d : weighted.densities)
    {
        bool divergent = d.infinite_mass();
        if (divergent && d.modulation)
        {
            // A modulation may tame the singularity at 0; probe its limit.
            divergent = d.modulation(-1e-12) > 1e-9;
        }
        if (divergent)
        {
            v.rate = inf;
            v.message = "int p dLambda diverges on " + d.describe();
            return v;
        }
        v.rate += d.mass();
    }
    v.ok = std::isfinite(v.rate);
    if (!v.ok)
        v.message = "int p dLambda is not finite";
    return v;
}

namespace detail {
inline void require_valid(SwitchProbability const& p, JumpMeasure const& levy)
{
    auto v = validate_switch_probability(p, levy);
    if (!v.ok)
        throw ConfigError("invalid switching probability: " + v.message);
}
}  // namespace detail

//! Characteristics of the switched process.
inline SnlpCharacteristics switching_characteristics(SnlpCharacteristics const& chars,
                                                     SwitchProbability const& p)
{
    detail::require_valid(p, chars.levy);
    auto switched = multiply(chars.levy, p);
    SnlpCharacteristics out;
    out.sigma = chars.sigma;
    out.kill_rate = chars.kill_rate;
    out.c = chars.c + switched.integrate([](double z) { return 1 - 2 * std::exp(z); });
    out.levy = multiply(chars.levy, p, true);
    out.levy.add(pushforward_bar(switched));
    out.levy.small_jump_cutoff = chars.levy.small_jump_cutoff;
    return out;
}

//! int over z != -log 2 of p dLambda
inline double switching_time_rate(SwitchProbability const& p, JumpMeasure const& levy)
{
    detail::require_valid(p, levy);
    auto weighted = multiply(levy, p);
    double rate = 0;
    for (auto const& a : weighted.atoms)
        if (std::abs(a.z + ln2) > atom_tol)
            rate += a.mass;
    for (auto const& d : weighted.densities)
        rate += d.mass();
    return rate;
}

struct SwitchedPath
{
    PathSkeleton path;
    double switch_time;
};

/*!
 * Mark jump j when the uniform at block j of rng falls below p(z_j) and
 * replace marked jumps by their reflection.
 */
inline SwitchedPath apply_switching(PathSkeleton const& path, SwitchProbability const& p,
                                    RandomStream const& rng)
{
    std::vector<double> sizes;
    sizes.reserve(path.events().size());
    double tau = inf;
    for (std::size_t j = 0; j < path.events().size(); ++j)
    {
        const double z = path.events()[j].z;
        const bool marked = rng.uniform_at(j) < p(z);
        sizes.push_back(marked ? detail::bar(z) : z);
        if (marked && tau == inf && std::abs(z + ln2) > atom_tol)
            tau = path.events()[j].t;
    }
    return {path.with_jump_sizes(sizes), tau};
}

//! p = bar(L)/(L + bar(L)) for the target's jump measure.
inline SwitchProbability canonical_switch_probability(SnlpCharacteristics const& target)
{
    SwitchProbability s;
    s.kind = SwitchProbability::Kind::radon_nikodym;
    s.target = std::make_shared<JumpMeasure const>(target.levy);
    return s;
}

namespace detail {
//! c + int_{z < -log 2} (1 - 2 e^z) Lambda(dz)
inline double symmetric_drift(SnlpCharacteristics const& chars)
{
    auto low = chars.levy.restricted(-inf, -ln2, true, false);
    return chars.c + low.integrate([](double z) { return 1 - 2 * std::exp(z); });
}

//! Atoms of Lambda + bar(Lambda), merged.
inline std::vector<Atom> symmetric_atoms(JumpMeasure const& m)
{
    JumpMeasure s;
    for (auto const& a : m.atoms)
    {
        s.add_atom(a.z, a.mass);
        s.add_atom(detail::bar(a.z), a.mass);
    }
    return s.atoms;
}

inline double symmetric_density(JumpMeasure const& m, double z)
{
    const double zb = detail::bar(z);
    double d = 0;
    for (auto const& c : m.densities)
        d += c.density(z) + c.density(zb) * std::exp(z - zb);
    return d;
}

inline bool close(double a, double b, double tol)
{
    return std::abs(a - b) <= tol * std::max(1.0, std::max(std::abs(a), std::abs(b)));
}
}  // namespace detail

/*!
 * Reason why two characteristics have different cumulants, or empty when
 * sigma, k, Lambda + bar(Lambda) and the symmetric drift all agree.
 */
inline std::optional<std::string> kappa_mismatch_reason(SnlpCharacteristics const& a,
                                                         SnlpCharacteristics const& b)
{
    if (!detail::close(a.sigma, b.sigma, 1e-12))
        return "sigma differs";
    if (!detail::close(a.kill_rate, b.kill_rate, 1e-12))
        return "kill rate differs";
    const auto sa = detail::symmetric_atoms(a.levy);
    const auto sb = detail::symmetric_atoms(b.levy);
    if (sa.size() != sb.size())
        return "Lambda + bar(Lambda) differs (atom count)";
    for (std::size_t i = 0; i < sa.size(); ++i)
    {
        if (std::abs(sa[i].z - sb[i].z) > atom_tol)
        {
            std::ostringstream os;
            os << "Lambda + bar(Lambda) differs (atom at " << sa[i].z << " vs " << sb[i].z << ")";
            return os.str();
        }
        if (!detail::close(sa[i].mass, sb[i].mass, 1e-10))
        {
            std::ostringstream os;
            os << "Lambda + bar(Lambda) differs (mass at " << sa[i].z << ")";
            return os.str();
        }
    }
    if (!a.levy.densities.empty() || !b.levy.densities.empty())
    {
        for (int j = 0; j < 10000; ++j)
        {
            const double z = std::log((j + 0.5) / 1e4);
            if (!detail::close(detail::symmetric_density(a.levy, z),
                               detail::symmetric_density(b.levy, z), 1e-9))
            {
                std::ostringstream os;
                os << "Lambda + bar(Lambda) differs (density at " << z << ")";
                return os.str();
            }
        }
    }
    if (!detail::close(detail::symmetric_drift(a), detail::symmetric_drift(b), 1e-10))
        return "c + int_{z<-log 2} (1 - 2e^z) Lambda(dz) differs";
    return std::nullopt;
}

inline bool same_kappa_characteristics(SnlpCharacteristics const& a, SnlpCharacteristics const& b)
{
    return !kappa_mismatch_reason(a, b).has_value();
}

}  // namespace gfsim
