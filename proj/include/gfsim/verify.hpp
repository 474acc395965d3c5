#pragma once

#include <cmath>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bblp.hpp"
#include "bifurcator.hpp"
#include "cellsystem.hpp"
#include "parallel.hpp"
#include "stats.hpp"
#include "switching.hpp"

namespace gfsim {

using Json = nlohmann::ordered_json;

struct VerifyOptions
{
    std::size_t replicas = 10'000;
    std::uint64_t seed = 0;
    double eps = 1e-4;
    ResourceLimits limits;
    unsigned threads = 1;
    double level = 0.01;                   // family-wise, Bonferroni split
    double max_incomplete_fraction = 1e-3;
    double se_multiplier = 3;
};

enum class Verdict
{
    pass,
    fail,
    flagged,  // tests passed but too many trees hit a resource limit
};

inline char const* to_string(Verdict v)
{
    switch (v)
    {
        case Verdict::pass: return "pass";
        case Verdict::fail: return "fail";
        case Verdict::flagged: return "flagged";
    }
    return "?";
}

struct Estimate
{
    std::string name;
    double mean = 0;
    double se = 0;
    std::size_t n = 0;
};

struct Reference
{
    std::string name;
    double value = 0;
    std::string source;
};

struct TestResult
{
    enum class Kind
    {
        ks,           // pass iff p > threshold
        upper_bound,  // pass iff value <= reference + slack
        two_sided,    // pass iff |value - reference| <= slack
    };
    std::string name;
    Kind kind = Kind::ks;
    double statistic = 0;  // KS distance, or the estimate being bounded
    double p_value = std::numeric_limits<double>::quiet_NaN();
    double threshold = 0;  // p threshold, or the reference value
    double slack = 0;
    bool pass = false;
};

inline char const* to_string(TestResult::Kind k)
{
    switch (k)
    {
        case TestResult::Kind::ks: return "ks";
        case TestResult::Kind::upper_bound: return "upper_bound";
        case TestResult::Kind::two_sided: return "two_sided";
    }
    return "?";
}

struct Diagnostics
{
    std::size_t trees = 0;
    std::size_t eps_kills = 0;
    std::size_t incomplete = 0;
    double max_incomplete_fraction = 1e-3;

    double incomplete_fraction() const
    {
        return trees == 0 ? 0.0 : static_cast<double>(incomplete) / static_cast<double>(trees);
    }
};

//! Plot data: one CSV table.
struct CsvTable
{
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

struct ExperimentReport
{
    std::string name;
    Json parameters = Json::object();
    std::vector<Estimate> estimates;
    std::vector<Reference> references;
    std::vector<TestResult> tests;
    std::size_t replicas = 0;
    std::uint64_t seed = 0;
    Diagnostics diagnostics;
    std::vector<CsvTable> plots;

    bool tests_pass() const
    {
        for (auto const& t : tests)
            if (!t.pass)
                return false;
        return true;
    }

    Verdict verdict() const
    {
        if (!tests_pass())
            return Verdict::fail;
        if (diagnostics.incomplete_fraction() > diagnostics.max_incomplete_fraction)
            return Verdict::flagged;
        return Verdict::pass;
    }
};

inline Json to_json(ExperimentReport const& r)
{
    Json j;
    j["name"] = r.name;
    j["verdict"] = to_string(r.verdict());
    j["seed"] = r.seed;
    j["replicas"] = r.replicas;
    j["parameters"] = r.parameters;
    j["estimates"] = Json::array();
    for (auto const& e : r.estimates)
        j["estimates"].push_back({{"name", e.name}, {"mean", e.mean}, {"se", e.se}, {"n", e.n}});
    j["references"] = Json::array();
    for (auto const& e : r.references)
        j["references"].push_back({{"name", e.name}, {"value", e.value}, {"source", e.source}});
    j["tests"] = Json::array();
    for (auto const& t : r.tests)
    {
        Json tj{{"name", t.name}, {"kind", to_string(t.kind)}, {"statistic", t.statistic}};
        if (t.kind == TestResult::Kind::ks)
        {
            tj["p_value"] = t.p_value;
            tj["threshold"] = t.threshold;
        }
        else
        {
            tj["reference"] = t.threshold;
            tj["slack"] = t.slack;
        }
        tj["pass"] = t.pass;
        j["tests"].push_back(std::move(tj));
    }
    auto const& d = r.diagnostics;
    j["diagnostics"] = {{"trees", d.trees},
                        {"eps_kills", d.eps_kills},
                        {"incomplete", d.incomplete},
                        {"incomplete_fraction", d.incomplete_fraction()},
                        {"max_incomplete_fraction", d.max_incomplete_fraction}};
    return j;
}

inline std::string to_text(ExperimentReport const& r)
{
    std::ostringstream os;
    os << std::setprecision(8);
    os << r.name << ": " << to_string(r.verdict()) << "  (seed " << r.seed << ", " << r.replicas
       << " replicas)\n";
    for (auto const& e : r.estimates)
        os << "  estimate  " << std::left << std::setw(40) << e.name << e.mean << " +- " << e.se
           << '\n';
    for (auto const& e : r.references)
        os << "  reference " << std::left << std::setw(40) << e.name << e.value << "  [" << e.source
           << "]\n";
    for (auto const& t : r.tests)
    {
        os << "  " << (t.pass ? "ok  " : "FAIL") << "      " << std::left << std::setw(40) << t.name;
        if (t.kind == TestResult::Kind::ks)
            os << "D = " << t.statistic << ", p = " << t.p_value << " (> " << t.threshold << ")";
        else if (t.kind == TestResult::Kind::upper_bound)
            os << t.statistic << " <= " << t.threshold << " + " << t.slack;
        else
            os << "|" << t.statistic << " - " << t.threshold << "| <= " << t.slack;
        os << '\n';
    }
    auto const& d = r.diagnostics;
    os << "  trees " << d.trees << ", eps kills " << d.eps_kills << ", incomplete " << d.incomplete
       << '\n';
    return os.str();
}

inline std::string to_csv(CsvTable const& t)
{
    std::ostringstream os;
    os << std::setprecision(17);
    for (std::size_t i = 0; i < t.columns.size(); ++i)
        os << (i ? "," : "") << t.columns[i];
    os << '\n';
    for (auto const& row : t.rows)
    {
        for (std::size_t i = 0; i < row.size(); ++i)
            os << (i ? "," : "") << row[i];
        os << '\n';
    }
    return os.str();
}

namespace detail {

inline std::string num(double v)
{
    std::ostringstream os;
    os << v;
    return os.str();
}

struct ReplicaOut
{
    std::vector<double> values;
    std::size_t eps_kills = 0;
    bool complete = true;
};

inline void gather(Diagnostics& d, std::vector<ReplicaOut> const& out)
{
    for (auto const& r : out)
    {
        ++d.trees;
        d.eps_kills += r.eps_kills;
        d.incomplete += r.complete ? 0 : 1;
    }
}

inline std::vector<double> column(std::vector<ReplicaOut> const& out, std::size_t k)
{
    std::vector<double> c;
    c.reserve(out.size());
    for (auto const& r : out)
        c.push_back(r.values[k]);
    return c;
}

//! Largest element, count above a and the q-mass of a descending multiset.
inline void push_functionals(std::vector<double>& v, std::vector<double> const& sizes, double q,
                             double a)
{
    double mass = 0;
    double count = 0;
    for (double y : sizes)
    {
        mass += std::pow(y, q);
        count += y > a ? 1 : 0;
    }
    v.push_back(mass);
    v.push_back(sizes.empty() ? 0.0 : sizes.front());
    v.push_back(count);
}

inline char const* const functional_names[] = {"q_mass(2)", "max", "count_above"};

inline Estimate estimate(std::string name, std::vector<double> const& x)
{
    auto m = mean_se(x);
    return {std::move(name), m.mean, m.se, m.n};
}

//! Two-sample KS on samples rounded to 10 significant digits (see round_significant).
inline TestResult ks_test(std::string name, std::vector<double> const& a,
                          std::vector<double> const& b, double threshold)
{
    auto r = ks_two_sample(round_significant(a), round_significant(b));
    TestResult t;
    t.name = std::move(name);
    t.kind = TestResult::Kind::ks;
    t.statistic = r.statistic;
    t.p_value = r.p_value;
    t.threshold = threshold;
    t.pass = r.p_value > threshold;
    return t;
}

inline TestResult upper_bound_test(std::string name, Estimate const& e, double bound, double k)
{
    TestResult t;
    t.name = std::move(name);
    t.kind = TestResult::Kind::upper_bound;
    t.statistic = e.mean;
    t.threshold = bound;
    t.slack = k * e.se;
    t.pass = e.mean <= bound + t.slack;
    return t;
}

inline TestResult two_sided_test(std::string name, double value, double reference, double slack)
{
    TestResult t;
    t.name = std::move(name);
    t.kind = TestResult::Kind::two_sided;
    t.statistic = value;
    t.threshold = reference;
    t.slack = slack + 1e-12 * std::abs(reference);  // deterministic cases have SE 0
    t.pass = std::abs(value - reference) <= t.slack;
    return t;
}

//! Sorted pooled values with both ECDFs, thinned to at most max_rows rows.
inline CsvTable ecdf_pair(std::string name, std::vector<double> a, std::vector<double> b,
                          std::size_t max_rows = 2000)
{
    CsvTable t{std::move(name), {"value", "ecdf_a", "ecdf_b"}, {}};
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::vector<double> pooled(a);
    pooled.insert(pooled.end(), b.begin(), b.end());
    std::sort(pooled.begin(), pooled.end());
    pooled.erase(std::unique(pooled.begin(), pooled.end()), pooled.end());
    const std::size_t stride = std::max<std::size_t>(1, pooled.size() / max_rows);
    for (std::size_t i = 0; i < pooled.size(); i += stride)
    {
        const double v = pooled[i];
        const auto fa = std::upper_bound(a.begin(), a.end(), v) - a.begin();
        const auto fb = std::upper_bound(b.begin(), b.end(), v) - b.begin();
        t.rows.push_back({v, static_cast<double>(fa) / static_cast<double>(a.size()),
                          static_cast<double>(fb) / static_cast<double>(b.size())});
    }
    return t;
}

//! Running mean and SE at 100 checkpoints, against a reference.
inline CsvTable mean_trace(std::string name, std::vector<double> const& x, double reference)
{
    CsvTable t{std::move(name), {"replicas", "mean", "se", "reference"}, {}};
    const std::size_t step = std::max<std::size_t>(1, x.size() / 100);
    double mean = 0;
    double m2 = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
    {
        const double n = static_cast<double>(i + 1);
        const double delta = x[i] - mean;
        mean += delta / n;
        m2 += delta * (x[i] - mean);
        if ((i + 1) % step == 0 || i + 1 == x.size())
            t.rows.push_back({n, mean, i > 0 ? std::sqrt(m2 / (n - 1) / n) : 0.0, reference});
    }
    return t;
}

inline void require_positive_times(std::vector<double> const& times)
{
    if (times.empty())
        throw ConfigError("at least one time is required");
    for (double t : times)
        if (!(t >= 0) || !std::isfinite(t))
            throw ConfigError("times must be finite and nonnegative");
}

inline void require_replicas(VerifyOptions const& o)
{
    if (o.replicas < 2)
        throw ConfigError("at least two replicas are required");
    if (!(o.eps > 0))
        throw ConfigError("eps must be positive");
}

inline Json times_json(std::vector<double> const& times)
{
    Json a = Json::array();
    for (double t : times)
        a.push_back(t);
    return a;
}

inline ExperimentReport new_report(std::string name, VerifyOptions const& o)
{
    ExperimentReport r;
    r.name = std::move(name);
    r.replicas = o.replicas;
    r.seed = o.seed;
    r.diagnostics.max_incomplete_fraction = o.max_incomplete_fraction;
    return r;
}

//! Functionals of the snapshots of one tree at each of the given times.
inline ReplicaOut tree_functionals(CellTree const& tree, std::vector<double> const& times,
                                   double scale, double q, double a)
{
    ReplicaOut out;
    out.eps_kills = tree.eps_kills;
    out.complete = tree.complete;
    for (double t : times)
    {
        auto s = snapshot(tree, t);
        for (double& y : s.sizes)
            y *= scale;
        push_functionals(out.values, s.sizes, q, a);
    }
    return out;
}

inline void add_ks_suite(ExperimentReport& r, std::vector<ReplicaOut> const& a,
                         std::vector<ReplicaOut> const& b, std::vector<double> const& times,
                         double threshold)
{
    for (std::size_t i = 0; i < times.size(); ++i)
        for (std::size_t k = 0; k < 3; ++k)
        {
            const std::string name =
                std::string(functional_names[k]) + " at t=" + num(times[i]);
            auto ca = column(a, 3 * i + k);
            auto cb = column(b, 3 * i + k);
            r.tests.push_back(ks_test(name, ca, cb, threshold));
            r.plots.push_back(ecdf_pair("ecdf " + name, std::move(ca), std::move(cb)));
        }
}

}  // namespace detail

/*!
 * Mean of sum X^q at time t over independent trees against e^{kappa(q) t} x^q.
 */
inline ExperimentReport verify_cumulant_martingale(CellModel const& model, double q, double t,
                                                   VerifyOptions const& o)
{
    if (model.alpha != 0)
        throw ConfigError("cumulant martingale: the identity holds for alpha = 0 only");
    if (!(q >= 0))
        throw ConfigError("cumulant martingale: q must be nonnegative");
    detail::require_replicas(o);
    const double kappa = cumulant(model.chars, q);
    if (!std::isfinite(kappa))
        throw ConfigError("cumulant martingale: kappa(q) is infinite");
    auto r = detail::new_report("cumulant_martingale", o);
    r.parameters = {{"q", q}, {"t", t}, {"eps", o.eps}, {"start_size", model.start_size}};
    CellSystemSimulator sim(model);
    const RandomStream root(o.seed);
    auto out = parallel_map(o.replicas, o.threads, [&](std::size_t i) {
        auto tree = sim.simulate(o.eps, t, o.limits, root.split(i));
        detail::ReplicaOut ro;
        ro.eps_kills = tree.eps_kills;
        ro.complete = tree.complete;
        ro.values.push_back(q_mass(snapshot(tree, t), q));
        return ro;
    });
    detail::gather(r.diagnostics, out);
    auto x = detail::column(out, 0);
    const double ref = std::pow(model.start_size, q) * std::exp(kappa * t);
    auto e = detail::estimate("sum X^q at t", x);
    r.estimates.push_back(e);
    r.references.push_back({"x^q exp(kappa(q) t)", ref, "moment identity of the cell system"});
    r.tests.push_back(detail::two_sided_test("mean within 3 SE", e.mean, ref, o.se_multiplier * e.se));
    r.plots.push_back(detail::mean_trace("mean trace", x, ref));
    return r;
}

/*!
 * Two-sample KS tests between the growth-fragmentations of two models on
 * q-mass (q = 2), the largest cell and the count of cells above x/4.
 * check_kappa = false skips the precondition (negative controls).
 */
inline ExperimentReport verify_fdd_equality(CellModel const& a, CellModel const& b,
                                            std::vector<double> const& times,
                                            VerifyOptions const& o, bool check_kappa = true)
{
    detail::require_positive_times(times);
    detail::require_replicas(o);
    if (check_kappa)
    {
        if (auto why = kappa_mismatch_reason(a.chars, b.chars))
            throw ConfigError("fdd equality: models have different cumulants: " + *why);
        if (a.alpha != b.alpha)
            throw ConfigError("fdd equality: models have different alpha");
    }
    if (a.start_size != b.start_size)
        throw ConfigError("fdd equality: models have different start sizes");
    auto r = detail::new_report("fdd_equality", o);
    const double x = a.start_size;
    const double horizon = *std::max_element(times.begin(), times.end());
    const std::size_t m = 3 * times.size();
    const double threshold = o.level / static_cast<double>(m);
    r.parameters = {{"times", detail::times_json(times)},
                    {"eps", o.eps},
                    {"alpha", a.alpha},
                    {"start_size", x},
                    {"count_level", x / 4},
                    {"kappa_checked", check_kappa},
                    {"bonferroni_tests", m}};
    CellSystemSimulator sa(a);
    CellSystemSimulator sb(b);
    const RandomStream ra = RandomStream(o.seed).split(0);
    const RandomStream rb = RandomStream(o.seed).split(1);
    auto run = [&](CellSystemSimulator const& sim, RandomStream const& root) {
        return parallel_map(o.replicas, o.threads, [&](std::size_t i) {
            return detail::tree_functionals(sim.simulate(o.eps, horizon, o.limits, root.split(i)),
                                            times, 1, 2, x / 4);
        });
    };
    auto oa = run(sa, ra);
    auto ob = run(sb, rb);
    detail::gather(r.diagnostics, oa);
    detail::gather(r.diagnostics, ob);
    detail::add_ks_suite(r, oa, ob, times, threshold);
    return r;
}

/*!
 * Scaling property: c times the system from x at time c^alpha t against the
 * system from c x at time t, with eps scaled by c.
 */
inline ExperimentReport verify_self_similarity(CellModel const& model, double c,
                                               std::vector<double> const& times,
                                               VerifyOptions const& o)
{
    if (!(c > 0) || !std::isfinite(c))
        throw ConfigError("self similarity: c must be positive");
    detail::require_positive_times(times);
    detail::require_replicas(o);
    validate_model(model);
    auto r = detail::new_report("self_similarity", o);
    const double x = model.start_size;
    const double speed = std::pow(c, model.alpha);
    const double horizon = *std::max_element(times.begin(), times.end());
    std::vector<double> scaled_times;
    for (double t : times)
        scaled_times.push_back(speed * t);
    const std::size_t m = 3 * times.size();
    const double threshold = o.level / static_cast<double>(m);
    r.parameters = {{"c", c},
                    {"alpha", model.alpha},
                    {"times", detail::times_json(times)},
                    {"eps", o.eps},
                    {"start_size", x},
                    {"count_level", c * x / 4},
                    {"bonferroni_tests", m}};
    CellSystemSimulator sim(model);
    const RandomStream ra = RandomStream(o.seed).split(0);
    const RandomStream rb = RandomStream(o.seed).split(1);
    auto oa = parallel_map(o.replicas, o.threads, [&](std::size_t i) {
        auto tree = sim.simulate(o.eps, speed * horizon, o.limits, ra.split(i), x);
        return detail::tree_functionals(tree, scaled_times, c, 2, c * x / 4);
    });
    auto ob = parallel_map(o.replicas, o.threads, [&](std::size_t i) {
        auto tree = sim.simulate(c * o.eps, horizon, o.limits, rb.split(i), c * x);
        return detail::tree_functionals(tree, times, 1, 2, c * x / 4);
    });
    detail::gather(r.diagnostics, oa);
    detail::gather(r.diagnostics, ob);
    detail::add_ks_suite(r, oa, ob, times, threshold);
    return r;
}

/*!
 * Excessive-function checks along single cell paths from x.
 *
 * alpha = 0: f(t, x) = x^q e^{-K t} with K > kappa(q); the full statistic is
 * bounded by f(s, x) and the jump part by eta f(s, x) with
 * eta = (kappa - Phi) / (K - Phi). Both also have closed-form means.
 * alpha != 0: f(x) = x^q with kappa(q) < 0 and eta = 1 - kappa / Phi; the
 * jump part over [0, t] is bounded by the all-time sum, whose mean is eta x^q.
 */
inline ExperimentReport verify_excessive(CellModel const& model, double q, double K, double s,
                                         double t, VerifyOptions const& o)
{
    detail::require_replicas(o);
    if (!(q > 0))
        throw ConfigError("excessive: q must be positive");
    if (!(s >= 0) || !(t >= 0))
        throw ConfigError("excessive: s and t must be nonnegative");
    const double kappa = cumulant(model.chars, q);
    const double phi = laplace_exponent(model.chars, q);
    const bool homogeneous = model.alpha == 0;
    if (!std::isfinite(kappa))
        throw ConfigError("excessive: kappa(q) is infinite");
    if (homogeneous && !(K > kappa))
        throw ConfigError("excessive: need K > kappa(q) for alpha = 0");
    if (!homogeneous && !(kappa < 0))
        throw ConfigError("excessive: need kappa(q) < 0 for alpha != 0");
    auto r = detail::new_report("excessive", o);
    const double x = model.start_size;
    const double kk = homogeneous ? K : 0.0;
    auto f = [q, kk](double u, double y) { return std::pow(y, q) * std::exp(-kk * u); };
    const double fsx = f(s, x);
    const double eta = homogeneous ? (kappa - phi) / (K - phi) : 1 - kappa / phi;
    r.parameters = {{"q", q},
                    {"K", homogeneous ? Json(K) : Json(nullptr)},
                    {"s", s},
                    {"t", t},
                    {"alpha", model.alpha},
                    {"start_size", x},
                    {"f", homogeneous ? "x^q exp(-K t)" : "x^q"}};
    CellSystemSimulator sim(model);
    const RandomStream root(o.seed);
    auto out = parallel_map(o.replicas, o.threads, [&](std::size_t i) {
        auto d = excessive_parts(sim, f, s, t, root.split(i));
        detail::ReplicaOut ro;
        ro.values = {d.total, d.jumps};
        return ro;
    });
    detail::gather(r.diagnostics, out);
    auto total = detail::column(out, 0);
    auto jumps = detail::column(out, 1);
    auto et = detail::estimate("f(s+t, X(t)) + jump sum", total);
    auto ej = detail::estimate("jump sum", jumps);
    r.estimates.push_back(et);
    r.estimates.push_back(ej);
    r.references.push_back({"f(s, x)", fsx, "excessive bound [H]"});
    r.references.push_back({"eta", eta,
                            homogeneous ? "(kappa(q) - Phi(q)) / (K - Phi(q)), compensation formula"
                                        : "1 - kappa(q) / Phi(q), self-similar case"});
    r.references.push_back({"eta f(s, x)", eta * fsx, "bound [H eta]"});
    const double k = o.se_multiplier;
    r.tests.push_back(detail::upper_bound_test("[H] mean <= f(s, x)", et, fsx, k));
    r.tests.push_back(detail::upper_bound_test("[H eta] jump mean <= eta f(s, x)", ej, eta * fsx, k));
    if (homogeneous)
    {
        // E_x of the two statistics in closed form (the killed part contributes 0)
        const double decay = std::exp((phi - K) * t);
        const double jump_ref = eta * (1 - decay) * fsx;
        const double total_ref = decay * fsx + jump_ref;
        r.references.push_back({"closed form total", total_ref, "homogeneous example"});
        r.references.push_back({"closed form jump sum", jump_ref, "compensation formula"});
        r.tests.push_back(detail::two_sided_test("total matches closed form", et.mean, total_ref,
                                                 k * et.se));
        r.tests.push_back(
            detail::two_sided_test("jump sum matches closed form", ej.mean, jump_ref, k * ej.se));
        r.plots.push_back(detail::mean_trace("mean trace total", total, total_ref));
        r.plots.push_back(detail::mean_trace("mean trace jumps", jumps, jump_ref));
    }
    else
    {
        r.plots.push_back(detail::mean_trace("mean trace total", total, fsx));
        r.plots.push_back(detail::mean_trace("mean trace jumps", jumps, eta * fsx));
    }
    return r;
}

/*!
 * E_x int_0^infty sum X^{q+alpha} dt = -x^q / kappa(q), estimated up to
 * t_max; the cutoff tail e^{kappa t_max} / |kappa| (times x^q) is reported
 * and added to the tolerance.
 */
inline ExperimentReport verify_potential(CellModel const& model, double q, double t_max,
                                         VerifyOptions const& o)
{
    detail::require_replicas(o);
    if (!(t_max > 0) || !std::isfinite(t_max))
        throw ConfigError("potential: t_max must be positive and finite");
    const double kappa = cumulant(model.chars, q);
    if (!(kappa < 0))
        throw ConfigError("potential: need kappa(q) < 0, the integral is infinite otherwise");
    auto r = detail::new_report("potential", o);
    const double xq = std::pow(model.start_size, q);
    const double ref = -xq / kappa;
    const double tail = xq * std::exp(kappa * t_max) / std::abs(kappa);
    r.parameters = {{"q", q},
                    {"t_max", t_max},
                    {"eps", o.eps},
                    {"alpha", model.alpha},
                    {"start_size", model.start_size}};
    CellSystemSimulator sim(model);
    const RandomStream root(o.seed);
    auto out = parallel_map(o.replicas, o.threads, [&](std::size_t i) {
        auto tree = sim.simulate(o.eps, t_max, o.limits, root.split(i));
        detail::ReplicaOut ro;
        ro.eps_kills = tree.eps_kills;
        ro.complete = tree.complete;
        ro.values.push_back(time_integrated_mass(tree, q, model.alpha, t_max));
        return ro;
    });
    detail::gather(r.diagnostics, out);
    auto v = detail::column(out, 0);
    auto e = detail::estimate("int_0^t_max sum X^{q+alpha} dt", v);
    r.estimates.push_back(e);
    r.references.push_back({"-x^q / kappa(q)", ref, "potential identity"});
    r.references.push_back({"tail bound", tail, "e^{kappa t_max} x^q / |kappa|"});
    r.tests.push_back(detail::two_sided_test("mean within 3 SE + tail", e.mean, ref,
                                             o.se_multiplier * e.se + tail));
    r.plots.push_back(detail::mean_trace("mean trace", v, ref));
    return r;
}

/*!
 * The logarithm of the growth-fragmentation against the binary branching
 * Levy process built from the same characteristics: sum e^{2 position}
 * moments (each against x^2 e^{kappa(2) t} and against each other) and KS
 * on the largest position. trunc is the BBLP truncation level.
 */
inline ExperimentReport verify_bblp_correspondence(CellModel const& model,
                                                   std::vector<double> const& times,
                                                   VerifyOptions const& o, double trunc = -40)
{
    if (model.alpha != 0)
        throw ConfigError("bblp correspondence: alpha must be 0");
    detail::require_positive_times(times);
    detail::require_replicas(o);
    auto r = detail::new_report("bblp_correspondence", o);
    const double x = model.start_size;
    const double lx = std::log(x);
    const double kappa = cumulant(model.chars, 2);
    const double horizon = *std::max_element(times.begin(), times.end());
    const double threshold = o.level / static_cast<double>(times.size());
    r.parameters = {{"times", detail::times_json(times)},
                    {"eps", o.eps},
                    {"trunc", trunc},
                    {"start_size", x},
                    {"bonferroni_tests", times.size()}};
    CellSystemSimulator gf(model);
    BblpSimulator bblp(gf_to_bblp_characteristics(model.chars), trunc);
    const RandomStream ra = RandomStream(o.seed).split(0);
    const RandomStream rb = RandomStream(o.seed).split(1);
    auto oa = parallel_map(o.replicas, o.threads, [&](std::size_t i) {
        auto tree = gf.simulate(o.eps, horizon, o.limits, ra.split(i));
        detail::ReplicaOut ro;
        ro.eps_kills = tree.eps_kills;
        ro.complete = tree.complete;
        for (double t : times)
        {
            auto s = snapshot(tree, t);
            ro.values.push_back(q_mass(s, 2));
            ro.values.push_back(s.sizes.empty() ? -inf : std::log(s.sizes.front()));
        }
        return ro;
    });
    auto ob = parallel_map(o.replicas, o.threads, [&](std::size_t i) {
        auto sys = bblp.simulate(horizon, o.limits, rb.split(i));
        detail::ReplicaOut ro;
        ro.complete = sys.complete;
        for (double t : times)
        {
            auto p = positions(sys, t);
            double m = 0;
            for (double y : p)
                m += std::exp(2 * (y + lx));
            ro.values.push_back(m);
            ro.values.push_back(p.empty() ? -inf : p.front() + lx);
        }
        return ro;
    });
    detail::gather(r.diagnostics, oa);
    detail::gather(r.diagnostics, ob);
    const double k = o.se_multiplier;
    for (std::size_t i = 0; i < times.size(); ++i)
    {
        const std::string at = " at t=" + detail::num(times[i]);
        const double ref = x * x * std::exp(kappa * times[i]);
        auto ma = detail::column(oa, 2 * i);
        auto mb = detail::column(ob, 2 * i);
        auto ea = detail::estimate("gf sum X^2" + at, ma);
        auto eb = detail::estimate("bblp sum e^{2 position}" + at, mb);
        r.estimates.push_back(ea);
        r.estimates.push_back(eb);
        r.references.push_back({"x^2 exp(kappa(2) t)" + at, ref, "moment identity"});
        r.tests.push_back(detail::two_sided_test("gf moment" + at, ea.mean, ref, k * ea.se));
        r.tests.push_back(detail::two_sided_test("bblp moment" + at, eb.mean, ref, k * eb.se));
        r.tests.push_back(detail::two_sided_test("gf vs bblp moment" + at, ea.mean - eb.mean, 0,
                                                 k * std::hypot(ea.se, eb.se)));
        auto xa = detail::column(oa, 2 * i + 1);
        auto xb = detail::column(ob, 2 * i + 1);
        r.tests.push_back(detail::ks_test("max position" + at, xa, xb, threshold));
        r.plots.push_back(detail::ecdf_pair("ecdf max position" + at, std::move(xa), std::move(xb)));
    }
    return r;
}

/*!
 * The coupled system of (X, Y) against that of (Y, X): KS on the snapshot
 * functionals at each time.
 */
inline ExperimentReport verify_coupled_symmetry(SnlpCharacteristics const& chars_x,
                                                SnlpCharacteristics const& chars_y, double alpha,
                                                double x, std::vector<double> const& times,
                                                VerifyOptions const& o)
{
    detail::require_positive_times(times);
    detail::require_replicas(o);
    if (!(x > o.eps))
        throw ConfigError("coupled symmetry: start size must exceed eps");
    auto r = detail::new_report("coupled_symmetry", o);
    const double horizon = *std::max_element(times.begin(), times.end());
    const std::size_t m = 3 * times.size();
    const double threshold = o.level / static_cast<double>(m);
    r.parameters = {{"alpha", alpha},
                    {"start_size", x},
                    {"times", detail::times_json(times)},
                    {"eps", o.eps},
                    {"count_level", x / 4},
                    {"bonferroni_tests", m}};
    CoupledSystemSimulator xy(chars_x, chars_y, alpha);
    CoupledSystemSimulator yx(chars_y, chars_x, alpha);
    const RandomStream ra = RandomStream(o.seed).split(0);
    const RandomStream rb = RandomStream(o.seed).split(1);
    auto run = [&](CoupledSystemSimulator const& sim, RandomStream const& root) {
        return parallel_map(o.replicas, o.threads, [&](std::size_t i) {
            auto sys = sim.simulate(x, o.eps, horizon, o.limits, root.split(i));
            detail::ReplicaOut ro;
            ro.eps_kills = sys.eps_kills;
            ro.complete = sys.complete;
            for (double t : times)
                detail::push_functionals(ro.values, snapshot(sys, t).sizes, 2, x / 4);
            return ro;
        });
    };
    auto oa = run(xy, ra);
    auto ob = run(yx, rb);
    detail::gather(r.diagnostics, oa);
    detail::gather(r.diagnostics, ob);
    detail::add_ks_suite(r, oa, ob, times, threshold);
    return r;
}

}  // namespace gfsim
