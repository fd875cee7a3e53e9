#include "ivbounds/lse.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <tuple>

#include "ivbounds/error.hpp"
#include "ivbounds/normal.hpp"
#include "ivbounds/parallel.hpp"

namespace ivb {

namespace {

void check(std::span<const double> v, double t) {
    if (v.empty()) throw Error(ErrorCode::invalid_argument, "log-sum-exp needs at least one value");
    if (!(t > 0.0)) throw Error(ErrorCode::invalid_argument, "smoothing parameter t must be positive");
    for (double e : v)
        if (!std::isfinite(e)) throw Error(ErrorCode::non_finite_input, "log-sum-exp input is not finite");
}

std::size_t first_max(std::span<const double> v) {
    return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

double lse_excess(std::span<const double> v, double t) {
    check(v, t);
    const std::size_t top = first_max(v);
    double rest = 0.0;
    for (std::size_t j = 0; j < v.size(); ++j)
        if (j != top) rest += std::exp(t * (v[j] - v[top]));
    return std::log1p(rest) / t;
}

double lse(std::span<const double> v, double t) {
    const double excess = lse_excess(v, t);
    return v[first_max(v)] + excess;
}

double lse_min(std::span<const double> v, double t) {
    std::vector<double> neg(v.begin(), v.end());
    for (double& e : neg) e = -e;
    return -lse(neg, t);
}

std::vector<double> lse_grad(std::span<const double> v, double t) {
    check(v, t);
    const double top = v[first_max(v)];
    std::vector<double> p(v.size());
    double total = 0.0;
    for (std::size_t j = 0; j < v.size(); ++j) {
        p[j] = std::exp(t * (v[j] - top));
        total += p[j];
    }
    for (double& e : p) e /= total;
    return p;
}

std::vector<double> lse_hess(std::span<const double> v, double t) {
    const auto p = lse_grad(v, t);
    const std::size_t k = p.size();
    std::vector<double> h(k * k);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j) h[i * k + j] = t * ((i == j ? p[i] : 0.0) - p[i] * p[j]);
    return h;
}

LseConfig LseConfig::fixed(double t) {
    if (!(t > 0.0)) throw Error(ErrorCode::invalid_argument, "smoothing parameter t must be positive");
    LseConfig c;
    c.rule = Rule::fixed;
    c.t = t;
    return c;
}

LseConfig LseConfig::simulation(double h, double r) {
    if (!(h > 0.0)) throw Error(ErrorCode::invalid_argument, "simulation t rule needs h > 0");
    LseConfig c;
    c.rule = Rule::simulation;
    c.h = h;
    c.r = r;
    return c;
}

double LseConfig::resolve(std::size_t n) const {
    const double nn = static_cast<double>(n);
    switch (rule) {
        case Rule::fixed: return t;
        case Rule::data_analysis: return 100.0 * std::pow(nn, 0.25);
        case Rule::simulation: return 2.0 * h * std::pow(nn, r);
    }
    return t;
}

BoundEstimate lse_bounds(const Dataset& data, std::span<const NuisanceValue> nuis, const LseConfig& cfg,
                         unsigned threads) {
    if (data.empty()) throw Error(ErrorCode::empty_data, "cannot estimate bounds on zero rows");
    if (nuis.size() != data.size()) throw Error(ErrorCode::fold_failure, "nuisance values missing for some rows");
    const double t = cfg.resolve(data.size());
    if (!(t > 0.0)) throw Error(ErrorCode::invalid_argument, "smoothing parameter t must be positive");

    const std::size_t n = data.size();
    std::vector<double> phi_l(n), phi_u(n);
    std::vector<std::size_t> d_l(n), d_u(n);
    parallel_for(n, threads, [&](std::size_t i) {
        const ThetaProfile prof = theta_profile(nuis[i].pi);
        const IfContribution c = if_contributions(observation(data, i), nuis[i]);
        ThetaVector neg_upper;
        for (std::size_t j = 0; j < 8; ++j) neg_upper[j] = -prof.upper[j];
        const auto w_l = lse_grad(prof.lower, t);
        const auto w_u = lse_grad(neg_upper, t);
        double corr_l = 0.0, corr_u = 0.0;
        for (std::size_t j = 0; j < 8; ++j) {
            corr_l += w_l[j] * c.lower[j];
            corr_u += w_u[j] * c.upper[j];
        }
        phi_l[i] = prof.gamma_lower + lse_excess(prof.lower, t) + corr_l;
        phi_u[i] = prof.gamma_upper - lse_excess(neg_upper, t) + corr_u;
        d_l[i] = prof.d_lower;
        d_u[i] = prof.d_upper;
    });

    BoundEstimate est;
    est.method = "lse";
    est.t = t;
    est.n = n;
    std::tie(est.lower, est.var_lower) = weighted_moments(data, phi_l);
    std::tie(est.upper, est.var_upper) = weighted_moments(data, phi_u);
    est.phi_lower = std::move(phi_l);
    est.phi_upper = std::move(phi_u);
    for (std::size_t i = 0; i < n; ++i) {
        ++est.d_lower_counts[d_l[i]];
        ++est.d_upper_counts[d_u[i]];
    }
    return est;
}

std::pair<double, double> conservative_interval(const BoundEstimate& est, double delta) {
    return conservative_interval(est, est, est.t, delta);
}

std::pair<double, double> conservative_interval(const BoundEstimate& lower_est, const BoundEstimate& upper_est,
                                                double t, double delta) {
    if (!(t > 0.0)) throw Error(ErrorCode::invalid_argument, "smoothing parameter t must be positive");
    if (lower_est.t != t || upper_est.t != t)
        throw Error(ErrorCode::mismatched_config, "conservative interval needs both estimates at t=" +
                                                      std::to_string(t) + " (got " + std::to_string(lower_est.t) +
                                                      " and " + std::to_string(upper_est.t) + ")");
    if (!(delta > 0.0 && delta < 1.0)) throw Error(ErrorCode::invalid_argument, "delta must lie in (0, 1)");
    if (lower_est.n < 2 || upper_est.n < 2)
        throw Error(ErrorCode::invalid_argument, "an interval needs at least two rows");
    const double z = normal_critical(delta);
    const double slack = std::log(8.0) / t;
    return {lower_est.lower - slack - z * lower_est.se_lower(), upper_est.upper + slack + z * upper_est.se_upper()};
}

}  // namespace ivb
