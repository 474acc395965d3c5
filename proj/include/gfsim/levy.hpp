#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "quadrature.hpp"

namespace gfsim {

inline constexpr double ln2 = std::numbers::ln2;
inline constexpr double inf = std::numeric_limits<double>::infinity();
//! Two atoms closer than this are the same location.
inline constexpr double atom_tol = 1e-12;

struct DomainError : std::domain_error
{
    using std::domain_error::domain_error;
};

struct ConfigError : std::invalid_argument
{
    using std::invalid_argument::invalid_argument;
};

//---------------------------------------------------------------------------//
// Involution z -> log(1 - e^z)
//---------------------------------------------------------------------------//

namespace detail {
// Accurate on both halves; extended so that -inf <-> 0.
inline double bar(double z) noexcept
{
    if (z == -inf)
        return 0.0;
    if (z >= 0)
        return -inf;
    return z < -ln2 ? std::log1p(-std::exp(z)) : std::log(-std::expm1(z));
}
}  // namespace detail

inline double reflect_jump(double z)
{
    if (!(z < 0))
        throw DomainError("reflect_jump: location must be negative");
    return detail::bar(z);
}

//! e^{qz} - 1 + q(1 - e^z), without cancellation near z = 0.
inline double phi_integrand(double q, double z)
{
    if (std::abs(z) * std::max(q, 1.0) < 1e-2)
    {
        // sum_{n>=2} (q^n - q) z^n / n!
        double sum = 0, qn = q, zn = z, fact = 1;
        for (int n = 2; n <= 12; ++n)
        {
            qn *= q;
            zn *= z;
            fact *= n;
            sum += (qn - q) * zn / fact;
        }
        return sum;
    }
    return std::expm1(q * z) - q * std::expm1(z);
}

//! (1 - e^z)^q
inline double kappa_integrand(double q, double z)
{
    if (q == 0)
        return 1.0;
    return std::exp(q * detail::bar(z));
}

//---------------------------------------------------------------------------//
/*!
 * A bounded-shape density piece of a jump measure.
 *
 * The piece is the image of scale * shape(u) du on the base interval
 * [lo, hi] under u -> u (or u -> bar(u) when reflected), multiplied by a
 * constant weight and an optional modulation in [0, 1] evaluated in the
 * output coordinate. Base shapes have closed-form antiderivatives, so the
 * unmodulated piece is sampled by inverse CDF and the modulation by
 * rejection.
 *
 * Shapes: uniform 1; exponential e^{rate u}; power (-u)^{-1-beta}.
 */
struct DensityComponent
{
    enum class Kind
    {
        uniform,
        exponential,
        power
    };

    Kind kind = Kind::uniform;
    double lo = -1;
    double hi = 0;
    double scale = 1;
    double param = 0;  // rate for exponential, beta for power
    bool reflected = false;
    double weight = 1;
    std::function<double(double)> modulation;

    static DensityComponent uniform(double lo, double hi, double mass)
    {
        DensityComponent d;
        d.kind = Kind::uniform;
        d.lo = lo;
        d.hi = hi;
        d.scale = mass / (hi - lo);
        return d;
    }
    static DensityComponent exponential(double lo, double hi, double rate, double scale)
    {
        DensityComponent d;
        d.kind = Kind::exponential;
        d.lo = lo;
        d.hi = hi;
        d.param = rate;
        d.scale = scale;
        return d;
    }
    static DensityComponent power(double lo, double hi, double beta, double scale)
    {
        DensityComponent d;
        d.kind = Kind::power;
        d.lo = lo;
        d.hi = hi;
        d.param = beta;
        d.scale = scale;
        return d;
    }

    double shape(double u) const
    {
        switch (kind)
        {
            case Kind::uniform: return 1.0;
            case Kind::exponential: return std::exp(param * u);
            case Kind::power: return std::pow(-u, -1 - param);
        }
        return 0;
    }

    //! Antiderivative of shape.
    double antiderivative(double u) const
    {
        switch (kind)
        {
            case Kind::uniform: return u;
            case Kind::exponential: return std::exp(param * u) / param;
            case Kind::power:
                if (param == 0)
                    return u == 0 ? inf : -std::log(-u);
                return std::pow(-u, -param) / param;
        }
        return 0;
    }

    double inverse_antiderivative(double s) const
    {
        switch (kind)
        {
            case Kind::uniform: return s;
            case Kind::exponential: return std::log(param * s) / param;
            case Kind::power:
                if (param == 0)
                    return -std::exp(-s);
                return -std::pow(param * s, -1 / param);
        }
        return 0;
    }

    bool empty() const { return !(lo < hi) || weight == 0 || scale == 0; }

    //! Mass of the unweighted, unmodulated base piece.
    double base_mass() const
    {
        if (empty())
            return 0;
        return scale * (antiderivative(hi) - antiderivative(lo));
    }

    bool infinite_mass() const { return !std::isfinite(base_mass()); }

    double map(double u) const { return reflected ? detail::bar(u) : u; }

    //! Output-coordinate support.
    double out_lo() const { return reflected ? detail::bar(hi) : lo; }
    double out_hi() const { return reflected ? detail::bar(lo) : hi; }

    double modulation_at(double w) const { return modulation ? modulation(w) : 1.0; }

    //! Density with respect to Lebesgue measure in the output coordinate.
    double density(double w) const
    {
        if (empty() || !(w > out_lo() && w < out_hi()))
            return 0;
        double d;
        if (reflected)
        {
            const double u = detail::bar(w);
            d = scale * shape(u) * std::exp(w - u);
        }
        else
        {
            d = scale * shape(w);
        }
        return weight * d * modulation_at(w);
    }

    //! Integral of g(w) against the piece.
    template<class F>
    double integrate(F const& g) const
    {
        if (empty())
            return 0;
        auto f = [&](double u) {
            const double w = map(u);
            return g(w) * modulation_at(w) * shape(u);
        };
        return weight * scale * gfsim::integrate(f, lo, hi);
    }

    double mass() const
    {
        if (empty())
            return 0;
        if (!modulation)
            return weight * base_mass();
        return integrate([](double) { return 1.0; });
    }

    //! Restriction to output coordinates in [a, b].
    DensityComponent restricted(double a, double b) const
    {
        DensityComponent d = *this;
        if (reflected)
        {
            d.lo = std::max(lo, detail::bar(b));
            d.hi = std::min(hi, detail::bar(a));
        }
        else
        {
            d.lo = std::max(lo, a);
            d.hi = std::min(hi, b);
        }
        return d;
    }

    DensityComponent reflected_copy() const
    {
        DensityComponent d = *this;
        d.reflected = !reflected;
        if (modulation)
        {
            // Keep modulation expressed in the new output coordinate.
            auto m = modulation;
            d.modulation = [m](double w) { return m(detail::bar(w)); };
        }
        return d;
    }

    DensityComponent modulated(std::function<double(double)> g) const
    {
        DensityComponent d = *this;
        if (modulation)
        {
            auto m = modulation;
            d.modulation = [m, g](double w) { return m(w) * g(w); };
        }
        else
        {
            d.modulation = std::move(g);
        }
        return d;
    }

    //! Draw a base location by inverse CDF.
    double sample_base(double uniform01) const
    {
        const double s0 = antiderivative(lo);
        const double s1 = antiderivative(hi);
        const double u = inverse_antiderivative(s0 + uniform01 * (s1 - s0));
        return std::clamp(u, lo, hi);
    }

    std::string describe() const
    {
        std::ostringstream os;
        const char* names[] = {"uniform", "exponential", "power"};
        os << names[static_cast<int>(kind)] << (reflected ? " (reflected)" : "") << " on ["
           << out_lo() << ", " << out_hi() << "]";
        return os.str();
    }
};

struct Atom
{
    double z;
    double mass;
};

//---------------------------------------------------------------------------//
/*!
 * Measure on (-inf, 0) made of atoms and density pieces.
 *
 * Jumps in (-small_jump_cutoff, 0) are not sampled individually.
 */
struct JumpMeasure
{
    std::vector<Atom> atoms;
    std::vector<DensityComponent> densities;
    double small_jump_cutoff = 0;

    //! Add an atom, merging with an existing one at the same location.
    void add_atom(double z, double mass)
    {
        if (mass == 0)
            return;
        auto it = std::lower_bound(atoms.begin(), atoms.end(), z - atom_tol,
                                   [](Atom const& a, double v) { return a.z < v; });
        if (it != atoms.end() && std::abs(it->z - z) <= atom_tol)
        {
            it->mass += mass;
            return;
        }
        atoms.insert(it, Atom{z, mass});
    }

    void add_density(DensityComponent d)
    {
        if (!d.empty())
            densities.push_back(std::move(d));
    }

    void add(JumpMeasure const& other)
    {
        for (auto const& a : other.atoms)
            add_atom(a.z, a.mass);
        for (auto const& d : other.densities)
            add_density(d);
    }

    bool empty() const { return atoms.empty() && densities.empty(); }

    double atom_mass_at(double z) const
    {
        for (auto const& a : atoms)
            if (std::abs(a.z - z) <= atom_tol)
                return a.mass;
        return 0;
    }

    template<class F>
    double integrate(F const& g) const
    {
        double sum = 0;
        for (auto const& a : atoms)
            sum += a.mass * g(a.z);
        for (auto const& d : densities)
            sum += d.integrate(g);
        return sum;
    }

    double total_mass() const
    {
        double m = 0;
        for (auto const& a : atoms)
            m += a.mass;
        for (auto const& d : densities)
            m += d.infinite_mass() ? inf : d.mass();
        return m;
    }

    //! Restriction to [a, b]; the include flags only matter for atoms.
    JumpMeasure restricted(double a, double b, bool include_a = true, bool include_b = true) const
    {
        JumpMeasure r;
        r.small_jump_cutoff = small_jump_cutoff;
        for (auto const& at : atoms)
        {
            const bool above = include_a ? at.z >= a - atom_tol : at.z > a + atom_tol;
            const bool below = include_b ? at.z <= b + atom_tol : at.z < b - atom_tol;
            if (above && below)
                r.atoms.push_back(at);
        }
        for (auto const& d : densities)
            r.add_density(d.restricted(a, b));
        return r;
    }

    JumpMeasure scaled(double factor) const
    {
        JumpMeasure r = *this;
        if (factor == 0)
            return JumpMeasure{{}, {}, small_jump_cutoff};
        for (auto& a : r.atoms)
            a.mass *= factor;
        for (auto& d : r.densities)
            d.weight *= factor;
        return r;
    }
};

//! Image of the measure under z -> bar(z).
inline JumpMeasure pushforward_bar(JumpMeasure const& levy)
{
    JumpMeasure r;
    r.small_jump_cutoff = levy.small_jump_cutoff;
    for (auto const& a : levy.atoms)
        r.add_atom(detail::bar(a.z), a.mass);
    for (auto const& d : levy.densities)
        r.add_density(d.reflected_copy());
    return r;
}

//---------------------------------------------------------------------------//
// Characteristics
//---------------------------------------------------------------------------//

struct SnlpCharacteristics
{
    double sigma = 0;
    double c = 0;
    JumpMeasure levy;
    double kill_rate = 0;
};

namespace detail {
// True when the piece has a non-integrable singularity at output 0 for an
// integrand behaving like (-w)^order there.
inline bool singular_at_zero(DensityComponent const& d, double order)
{
    return d.kind == DensityComponent::Kind::power && !d.reflected && d.hi == 0
           && !(order > d.param) && !d.empty();
}
}  // namespace detail

//! Throws ConfigError describing the first violated constraint.
inline void validate_levy(SnlpCharacteristics const& chars)
{
    if (!(chars.sigma >= 0))
        throw ConfigError("sigma must be nonnegative");
    if (!(chars.kill_rate >= 0))
        throw ConfigError("kill rate must be nonnegative");
    if (!std::isfinite(chars.c))
        throw ConfigError("drift must be finite");
    auto const& m = chars.levy;
    if (!(m.small_jump_cutoff >= 0))
        throw ConfigError("small jump cutoff must be nonnegative");
    for (auto const& a : m.atoms)
    {
        if (!(a.z < 0) || !std::isfinite(a.z))
            throw ConfigError("atom location must lie in (-inf, 0)");
        if (!(a.mass > 0) || !std::isfinite(a.mass))
            throw ConfigError("atom mass must be positive and finite");
    }
    for (auto const& d : m.densities)
    {
        if (!(d.out_hi() <= 0) || d.out_lo() >= d.out_hi())
            throw ConfigError("density support must lie in (-inf, 0): " + d.describe());
        if (!(d.scale > 0) || !(d.weight >= 0))
            throw ConfigError("density scale must be positive: " + d.describe());
        if (d.kind == DensityComponent::Kind::uniform && !std::isfinite(d.lo))
            throw ConfigError("uniform density needs a finite support: " + d.describe());
        if (d.kind == DensityComponent::Kind::exponential && !(d.param > 0))
            throw ConfigError("exponential density needs a positive rate: " + d.describe());
        if (d.infinite_mass())
        {
            // Only a power singularity at 0 of order < 2 is a Levy measure.
            const bool ok_zero = d.kind == DensityComponent::Kind::power && !d.reflected
                                 && d.hi == 0 && d.param < 2 && std::isfinite(d.lo);
            if (!ok_zero)
                throw ConfigError("density is not a Levy measure: " + d.describe());
            if (!(m.small_jump_cutoff > 0))
                throw ConfigError("infinite-activity density needs small_jump_cutoff > 0: "
                                  + d.describe());
        }
    }
}

//! Phi(q) = -k + sigma^2 q^2 / 2 + c q + int (e^{qz} - 1 + q(1 - e^z)) Lambda(dz)
inline double laplace_exponent(SnlpCharacteristics const& chars, double q)
{
    if (!(q >= 0))
        throw DomainError("laplace_exponent: q must be nonnegative");
    double phi = -chars.kill_rate + 0.5 * chars.sigma * chars.sigma * q * q + chars.c * q;
    if (q == 0)
        return phi;
    for (auto const& a : chars.levy.atoms)
        phi += a.mass * phi_integrand(q, a.z);
    for (auto const& d : chars.levy.densities)
    {
        if (detail::singular_at_zero(d, 2))
            return inf;
        phi += d.integrate([q](double w) { return phi_integrand(q, w); });
    }
    return phi;
}

//! kappa(q) = Phi(q) + int (1 - e^z)^q Lambda(dz); +inf when divergent.
inline double cumulant(SnlpCharacteristics const& chars, double q)
{
    if (!(q >= 0))
        throw DomainError("cumulant: q must be nonnegative");
    for (auto const& d : chars.levy.densities)
        if (detail::singular_at_zero(d, q))
            return inf;
    double k = laplace_exponent(chars, q);
    for (auto const& a : chars.levy.atoms)
        k += a.mass * kappa_integrand(q, a.z);
    for (auto const& d : chars.levy.densities)
        k += d.integrate([q](double w) { return kappa_integrand(q, w); });
    return k;
}

/*!
 * Linear drift of the sampled process.
 *
 * Jumps at or below -delta are sampled and compensated by (1 - e^z); the
 * discarded small jumps are replaced by their mean z plus the same
 * compensation, which keeps the first-order term of Phi exact.
 */
inline double effective_drift(SnlpCharacteristics const& chars)
{
    const double delta = chars.levy.small_jump_cutoff;
    auto big = chars.levy.restricted(-inf, -delta, true, true);
    double a = chars.c + big.integrate([](double z) { return -std::expm1(z); });
    if (delta > 0)
    {
        auto small = chars.levy.restricted(-delta, 0, false, true);
        a += small.integrate([](double z) {
            // z + 1 - e^z, series below 1e-4
            if (std::abs(z) < 1e-4)
                return -z * z / 2 - z * z * z / 6;
            return z - std::expm1(z);
        });
    }
    return a;
}

}  // namespace gfsim
