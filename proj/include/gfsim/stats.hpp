#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "levy.hpp"

namespace gfsim {

struct KsResult
{
    double statistic = 0;
    double p_value = 1;
};

//! P(K > lambda) for the Kolmogorov distribution.
inline double kolmogorov_survival(double lambda)
{
    if (!(lambda > 0))
        return 1;
    if (lambda < 0.2)
        return 1;  // the alternating series is useless here and Q = 1 to 1e-20
    double sum = 0;
    for (int k = 1; k <= 200; ++k)
    {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        sum += (k % 2 == 1 ? term : -term);
        if (term < 1e-300)
            break;
    }
    return std::clamp(2 * sum, 0.0, 1.0);
}

//! Two-sample KS statistic with the asymptotic p-value; ties handled jointly.
inline KsResult ks_two_sample(std::vector<double> a, std::vector<double> b)
{
    if (a.empty() || b.empty())
        throw DomainError("ks_two_sample: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t i = 0;
    std::size_t j = 0;
    double d = 0;
    while (i < a.size() && j < b.size())
    {
        const double v = std::min(a[i], b[j]);
        while (i < a.size() && a[i] == v)
            ++i;
        while (j < b.size() && b[j] == v)
            ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    const double ne = na * nb / (na + nb);
    return {d, kolmogorov_survival(std::sqrt(ne) * d)};
}

/*!
 * Round to the given number of significant digits. Laws with atoms (a
 * path with no events ends at a deterministic point) can land on values a
 * few ulps apart when two equal drifts are summed in different orders; the
 * KS statistic would count that as a distribution difference.
 */
inline std::vector<double> round_significant(std::vector<double> x, int digits = 10)
{
    for (double& v : x)
    {
        if (v == 0 || !std::isfinite(v))
            continue;
        const double scale = std::pow(10.0, digits - 1 - std::floor(std::log10(std::abs(v))));
        v = std::round(v * scale) / scale;
    }
    return x;
}

//! One-sample KS test against a continuous cdf.
template<class Cdf>
KsResult ks_one_sample(std::vector<double> x, Cdf const& cdf)
{
    if (x.empty())
        throw DomainError("ks_one_sample: empty sample");
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double d = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
    {
        const double f = cdf(x[i]);
        d = std::max({d, (static_cast<double>(i) + 1) / n - f, f - static_cast<double>(i) / n});
    }
    return {d, kolmogorov_survival(std::sqrt(n) * d)};
}

inline KsResult exponentiality_test(std::vector<double> const& samples, double rate)
{
    if (!(rate > 0))
        throw DomainError("exponentiality_test: rate must be positive");
    for (double s : samples)
        if (!(s > 0))
            throw DomainError("exponentiality_test: samples must be positive");
    return ks_one_sample(samples, [rate](double x) { return -std::expm1(-rate * x); });
}

struct MeanEstimate
{
    double mean = 0;
    double se = 0;
    std::size_t n = 0;
};

//! Sample mean and its standard error (Welford).
inline MeanEstimate mean_se(std::vector<double> const& x)
{
    MeanEstimate e;
    double m2 = 0;
    for (double v : x)
    {
        ++e.n;
        const double delta = v - e.mean;
        e.mean += delta / static_cast<double>(e.n);
        m2 += delta * (v - e.mean);
    }
    if (e.n > 1)
        e.se = std::sqrt(m2 / static_cast<double>(e.n - 1) / static_cast<double>(e.n));
    return e;
}

}  // namespace gfsim
