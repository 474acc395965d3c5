#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

namespace gfsim {

inline constexpr double quad_rel_tol = 1e-10;
inline constexpr double quad_abs_tol = 1e-14;

namespace detail {
template<class F>
auto guarded(F const& f)
{
    return [&f](double u) {
        const double v = f(u);
        return std::isfinite(v) ? v : 0.0;
    };
}
}  // namespace detail

//---------------------------------------------------------------------------//
/*!
 * Integrate f over [lo, hi] where either end may be infinite.
 *
 * Double-exponential rules handle integrable endpoint singularities. Points
 * where f overflows (0 * inf at a singular endpoint) are treated as zero;
 * the rule never samples the endpoints themselves so this only affects
 * abscissae within rounding distance of them.
 */
template<class F>
double integrate(F const& f, double lo, double hi)
{
    if (!(lo < hi))
        return 0;
    // Abscissa tables are costly to build, so keep one pair per thread.
    thread_local boost::math::quadrature::tanh_sinh<double> ts;
    thread_local boost::math::quadrature::exp_sinh<double> es;
    auto g = detail::guarded(f);
    double err = 0;
    double l1 = 0;
    double result;
    try
    {
        if (std::isinf(lo) && std::isinf(hi))
        {
            result = es.integrate([&](double u) { return g(-u); }, quad_rel_tol, &err, &l1)
                     + es.integrate(g, quad_rel_tol, &err, &l1);
        }
        else if (std::isinf(lo))
        {
            // Split so the finite end keeps its own tanh-sinh clustering.
            result = ts.integrate(g, hi - 1, hi, quad_rel_tol, &err, &l1)
                     + es.integrate([&](double u) { return g(hi - 1 - u); }, quad_rel_tol, &err, &l1);
        }
        else if (std::isinf(hi))
        {
            result = ts.integrate(g, lo, lo + 1, quad_rel_tol, &err, &l1)
                     + es.integrate([&](double u) { return g(lo + 1 + u); }, quad_rel_tol, &err, &l1);
        }
        else
        {
            result = ts.integrate(g, lo, hi, quad_rel_tol, &err, &l1);
        }
    }
    catch (std::exception const& e)
    {
        throw std::runtime_error(std::string("quadrature failed: ") + e.what());
    }
    return result;
}

}  // namespace gfsim
