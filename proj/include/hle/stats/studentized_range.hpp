#pragma once

#include <cmath>
#include <algorithm>
#include <limits>
#include <map>
#include <tuple>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include "hle/core/types.hpp"

namespace hle::stats {

namespace srange_detail {

constexpr double kTol = 1e-11;
constexpr unsigned kDepth = 10;

inline double phi(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI); }
inline double Phi(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

/// P(range of k iid standard normals <= w).
inline double range_cdf(double w, int k) {
    if (w <= 0) return 0.0;
    using boost::math::quadrature::gauss_kronrod;
    const auto f = [&](double z) {
        const double inner = Phi(z) - Phi(z - w);
        return inner <= 0 ? 0.0 : phi(z) * std::pow(inner, k - 1);
    };
    // the integrand is negligible outside [-9, 9 + w]
    double v = gauss_kronrod<double, 61>::integrate(f, -9.0, 0.0, kDepth, kTol) +
               gauss_kronrod<double, 61>::integrate(f, 0.0, w, kDepth, kTol) +
               gauss_kronrod<double, 61>::integrate(f, w, 9.0 + w, kDepth, kTol);
    return std::min(1.0, k * v);
}

/// log density of s = sqrt(chi2_df / df).
inline double log_scale_density(double s, double df) {
    return 0.5 * df * std::log(df) - std::lgamma(0.5 * df) - (0.5 * df - 1.0) * std::log(2.0) +
           (df - 1.0) * std::log(s) - 0.5 * df * s * s;
}

}  // namespace srange_detail

/// CDF of the studentized range distribution with k groups and df degrees of
/// freedom: integral over s of f_df(s) * P(range <= q s). df may be infinite.
inline double studentized_range_cdf(double q, int k, double df) {
    using namespace srange_detail;
    if (k < 2) throw Error(ErrorCode::invalid_argument, "studentized range needs k >= 2");
    if (!(df > 0)) throw Error(ErrorCode::invalid_argument, "studentized range needs df > 0");
    if (q <= 0) return 0.0;
    if (std::isinf(df)) return range_cdf(q, k);
    using boost::math::quadrature::gauss_kronrod;
    const auto f = [&](double s) { return s <= 0 ? 0.0 : std::exp(log_scale_density(s, df)) * range_cdf(q * s, k); };
    // s concentrates around 1 with spread ~ 1/sqrt(2 df); the density is
    // negligible beyond 12 spreads on either side
    const double sd = 1.0 / std::sqrt(2.0 * df);
    const double lo = std::max(0.0, 1.0 - 12.0 * sd);
    const double hi = 1.0 + 12.0 * sd;
    const double v = gauss_kronrod<double, 31>::integrate(f, lo, 1.0, kDepth, kTol) +
                     gauss_kronrod<double, 31>::integrate(f, 1.0, hi, kDepth, kTol);
    return std::clamp(v, 0.0, 1.0);
}

/// Upper-tail probability 1 - CDF.
inline double studentized_range_sf(double q, int k, double df) { return 1.0 - studentized_range_cdf(q, k, df); }

/// q such that CDF(q) = p. Results are memoized per thread.
inline double studentized_range_quantile(double p, int k, double df) {
    if (!(p > 0 && p < 1)) throw Error(ErrorCode::invalid_argument, "quantile probability must be in (0, 1)");
    thread_local std::map<std::tuple<double, int, double>, double> memo;
    const auto key = std::make_tuple(p, k, df);
    if (const auto it = memo.find(key); it != memo.end()) return it->second;
    double hi = 1.0;
    while (studentized_range_cdf(hi, k, df) < p) hi *= 2.0;
    double lo = hi / 2.0;
    if (hi == 1.0) lo = 0.0;
    const auto f = [&](double q) { return studentized_range_cdf(q, k, df) - p; };
    boost::uintmax_t iters = 200;
    const auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, boost::math::tools::eps_tolerance<double>(45), iters);
    return memo[key] = 0.5 * (a + b);
}

}  // namespace hle::stats
