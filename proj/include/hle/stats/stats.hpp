#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/students_t.hpp>

#include "hle/core/types.hpp"
#include "hle/stats/studentized_range.hpp"

namespace hle::stats {

inline constexpr double kDefaultAlpha = 0.05;
/// 0.05 split over four comparisons against the reference model.
inline constexpr double kBonferroniLevel = 0.0125;

struct GroupSample {
    std::string group_id;
    std::vector<double> values;
};

struct GroupSummary {
    std::string group_id;
    std::size_t n = 0;
    double mean = 0.0;
    std::optional<double> se;  // absent for n = 1
};

inline void to_json(Json& j, const GroupSummary& g) {
    j = Json{{"group", g.group_id}, {"n", g.n}, {"mean", g.mean}, {"se", g.se ? Json(*g.se) : Json(nullptr)}};
}

/// Mean and standard error (sample sd with n - 1, divided by sqrt(n)).
inline GroupSummary group_summary(const GroupSample& g) {
    if (g.values.empty()) throw Error(ErrorCode::empty_group, "group '" + g.group_id + "' has no values");
    GroupSummary s{g.group_id, g.values.size(), 0.0, std::nullopt};
    double sum = 0;
    for (double v : g.values) sum += v;
    s.mean = sum / static_cast<double>(s.n);
    if (s.n > 1) {
        double ss = 0;
        for (double v : g.values) ss += (v - s.mean) * (v - s.mean);
        s.se = std::sqrt(ss / static_cast<double>(s.n - 1)) / std::sqrt(static_cast<double>(s.n));
    }
    return s;
}

struct TukeyPair {
    std::string a;
    std::string b;
    double mean_diff = 0.0;  // mean(b) - mean(a)
    double q = 0.0;
    double p_value = 1.0;
    bool significant = false;
};

struct TukeyResult {
    double alpha = kDefaultAlpha;
    int k = 0;
    double df = 0.0;
    double mse = 0.0;
    double q_critical = 0.0;
    bool degenerate_variance = false;
    std::vector<TukeyPair> pairs;

    const TukeyPair* find(const std::string& x, const std::string& y) const {
        for (const auto& p : pairs) {
            if ((p.a == x && p.b == y) || (p.a == y && p.b == x)) return &p;
        }
        return nullptr;
    }
};

inline void to_json(Json& j, const TukeyPair& p) {
    j = Json{{"a", p.a}, {"b", p.b}, {"mean_diff", p.mean_diff}, {"q", p.q}, {"p_value", p.p_value},
             {"significant", p.significant}};
}

inline void to_json(Json& j, const TukeyResult& r) {
    j = Json{{"alpha", r.alpha}, {"k", r.k},   {"df", r.df}, {"mse", r.mse}, {"q_critical", r.q_critical},
             {"degenerate_variance", r.degenerate_variance}, {"pairs", r.pairs}};
}

/// Pairwise Tukey-Kramer comparisons. Each pair uses
/// q = |mean_i - mean_j| / sqrt(MSE / 2 * (1/n_i + 1/n_j)) with the pooled
/// within-group MSE on N - k degrees of freedom. When MSE is zero, unequal
/// means count as significant and equal means do not.
inline TukeyResult tukey_kramer(const std::vector<GroupSample>& groups, double alpha = kDefaultAlpha) {
    if (groups.size() < 2) throw Error(ErrorCode::insufficient_data, "tukey_kramer needs at least two groups");
    if (!(alpha > 0 && alpha < 1)) throw Error(ErrorCode::invalid_argument, "alpha must be in (0, 1)");
    std::vector<GroupSummary> s;
    std::size_t total = 0;
    double sse = 0;
    for (const auto& g : groups) {
        s.push_back(group_summary(g));
        total += g.values.size();
        for (double v : g.values) sse += (v - s.back().mean) * (v - s.back().mean);
    }
    TukeyResult r;
    r.alpha = alpha;
    r.k = static_cast<int>(groups.size());
    r.df = static_cast<double>(total) - r.k;
    if (r.df < 1) throw Error(ErrorCode::insufficient_data, "tukey_kramer needs N - k >= 1");
    r.mse = sse / r.df;
    r.degenerate_variance = r.mse <= 0;
    r.q_critical = studentized_range_quantile(1.0 - alpha, r.k, r.df);
    for (std::size_t i = 0; i < s.size(); ++i) {
        for (std::size_t j = i + 1; j < s.size(); ++j) {
            TukeyPair p{s[i].group_id, s[j].group_id, s[j].mean - s[i].mean, 0.0, 1.0, false};
            const double diff = std::abs(p.mean_diff);
            if (r.degenerate_variance) {
                p.q = diff > 0 ? std::numeric_limits<double>::infinity() : 0.0;
                p.p_value = diff > 0 ? 0.0 : 1.0;
                p.significant = diff > 0;
            } else {
                const double scale =
                    std::sqrt(r.mse / 2.0 * (1.0 / static_cast<double>(s[i].n) + 1.0 / static_cast<double>(s[j].n)));
                p.q = diff / scale;
                p.p_value = studentized_range_sf(p.q, r.k, r.df);
                p.significant = p.q > r.q_critical;
            }
            r.pairs.push_back(p);
        }
    }
    return r;
}

struct OlsGroup {
    std::string group_id;
    std::size_t n = 0;
    double fitted = 0.0;     // intercept + beta
    double fitted_se = 0.0;  // standard error of the fitted group value
    double beta = 0.0;       // 0 for the reference group
    double beta_se = 0.0;
    double t = 0.0;
    double p_value = 1.0;
    bool significant_vs_reference = false;
};

struct OlsResult {
    std::string reference;
    double correction_level = kBonferroniLevel;
    double df_resid = 0.0;
    double sigma2 = 0.0;
    std::vector<OlsGroup> groups;
    std::vector<double> residuals;

    const OlsGroup* find(const std::string& id) const {
        for (const auto& g : groups) {
            if (g.group_id == id) return &g;
        }
        return nullptr;
    }
};

inline void to_json(Json& j, const OlsGroup& g) {
    j = Json{{"group", g.group_id}, {"n", g.n},       {"fitted", g.fitted},   {"fitted_se", g.fitted_se},
             {"beta", g.beta},      {"beta_se", g.beta_se}, {"t", g.t},   {"p_value", g.p_value},
             {"significant_vs_reference", g.significant_vs_reference}};
}

inline void to_json(Json& j, const OlsResult& r) {
    j = Json{{"reference", r.reference}, {"correction_level", r.correction_level}, {"df_resid", r.df_resid},
             {"sigma2", r.sigma2},       {"groups", r.groups}};
}

/// OLS of value on an intercept plus one dummy per non-reference group. Each
/// beta is t-tested against zero; significant iff p < correction_level.
inline OlsResult ols_dummy(const std::vector<GroupSample>& groups, const std::string& reference,
                           double correction_level = kBonferroniLevel) {
    if (groups.size() < 2) throw Error(ErrorCode::insufficient_data, "ols_dummy needs at least two groups");
    std::size_t ref = groups.size();
    std::size_t n = 0;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        if (groups[g].values.empty()) {
            throw Error(ErrorCode::singular_design, "group '" + groups[g].group_id + "' has no observations");
        }
        if (groups[g].group_id == reference) ref = g;
        n += groups[g].values.size();
    }
    if (ref == groups.size()) throw Error(ErrorCode::singular_design, "reference group '" + reference + "' absent");
    const auto p = static_cast<Eigen::Index>(groups.size());
    if (static_cast<Eigen::Index>(n) <= p) throw Error(ErrorCode::insufficient_data, "ols_dummy needs N > groups");

    Eigen::MatrixXd X = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), p);
    Eigen::VectorXd y(static_cast<Eigen::Index>(n));
    std::vector<Eigen::Index> column(groups.size(), 0);
    Eigen::Index next_col = 1;
    for (std::size_t g = 0; g < groups.size(); ++g) column[g] = g == ref ? 0 : next_col++;
    Eigen::Index row = 0;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        for (double v : groups[g].values) {
            X(row, 0) = 1.0;
            if (g != ref) X(row, column[g]) = 1.0;
            y(row++) = v;
        }
    }
    const Eigen::MatrixXd xtx = X.transpose() * X;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(xtx);
    if (!lu.isInvertible()) throw Error(ErrorCode::singular_design, "design matrix is singular");
    const Eigen::MatrixXd xtx_inv = lu.inverse();
    const Eigen::VectorXd beta = xtx_inv * (X.transpose() * y);
    const Eigen::VectorXd resid = y - X * beta;

    OlsResult r;
    r.reference = reference;
    r.correction_level = correction_level;
    r.df_resid = static_cast<double>(n) - static_cast<double>(p);
    r.sigma2 = resid.squaredNorm() / r.df_resid;
    r.residuals.assign(resid.data(), resid.data() + resid.size());
    const Eigen::MatrixXd cov = r.sigma2 * xtx_inv;
    const boost::math::students_t dist(r.df_resid);

    for (std::size_t g = 0; g < groups.size(); ++g) {
        OlsGroup o;
        o.group_id = groups[g].group_id;
        o.n = groups[g].values.size();
        const Eigen::Index c = column[g];
        Eigen::VectorXd w = Eigen::VectorXd::Zero(p);
        w(0) = 1.0;
        if (g != ref) w(c) = 1.0;
        o.fitted = w.dot(beta);
        o.fitted_se = std::sqrt(std::max(0.0, w.dot(cov * w)));
        if (g != ref) {
            o.beta = beta(c);
            o.beta_se = std::sqrt(std::max(0.0, cov(c, c)));
            if (o.beta_se > 0) {
                o.t = o.beta / o.beta_se;
                o.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(o.t)));
            } else {
                // perfect fit: any nonzero effect is exact
                const bool nonzero = std::abs(o.beta) > 1e-12;
                o.t = nonzero ? std::copysign(std::numeric_limits<double>::infinity(), o.beta) : 0.0;
                o.p_value = nonzero ? 0.0 : 1.0;
            }
            o.significant_vs_reference = o.p_value < correction_level;
        }
        r.groups.push_back(o);
    }
    return r;
}

}  // namespace hle::stats
