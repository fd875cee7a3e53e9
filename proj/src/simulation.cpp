#include "ivbounds/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>

#include "ivbounds/error.hpp"
#include "ivbounds/if_estimators.hpp"
#include "ivbounds/lse.hpp"
#include "ivbounds/parallel.hpp"
#include "ivbounds/rng.hpp"

namespace ivb {

const char* stratum_name(Stratum s) noexcept {
    switch (s) {
        case Stratum::always_taker: return "always_taker";
        case Stratum::never_taker: return "never_taker";
        case Stratum::defier: return "defier";
        case Stratum::complier: return "complier";
    }
    return "?";
}

Stratum illustration_stratum(double x1, double x2, bool compat) noexcept {
    if (compat) return (x1 == 0.0 && x2 >= -0.5 && x2 <= 0.5) ? Stratum::defier : Stratum::complier;
    if (x2 >= 0.99) return Stratum::always_taker;
    if (x2 <= -0.99) return Stratum::never_taker;
    if (x1 == 0.0 && x2 > -0.5 && x2 <= 0.5) return Stratum::defier;
    return Stratum::complier;
}

int stratum_exposure(Stratum s, int z) noexcept {
    switch (s) {
        case Stratum::always_taker: return 1;
        case Stratum::never_taker: return 0;
        case Stratum::defier: return 1 - z;
        case Stratum::complier: return z;
    }
    return z;
}

double stratum_outcome_mean(Stratum s, int a) noexcept {
    switch (s) {
        case Stratum::always_taker: return a ? 0.35 : 0.20;
        case Stratum::never_taker: return a ? 0.95 : 0.90;
        case Stratum::defier: return a ? 0.725 : 0.65;
        case Stratum::complier: return a ? 0.375 : 0.25;
    }
    return 0.0;
}

double stratum_probability(Stratum s, bool compat) noexcept {
    const double defier = 0.3 * 0.5;
    if (compat) return s == Stratum::defier ? defier : s == Stratum::complier ? 1.0 - defier : 0.0;
    switch (s) {
        case Stratum::always_taker:
        case Stratum::never_taker: return 0.005;
        case Stratum::defier: return defier;
        case Stratum::complier: return 1.0 - 0.01 - defier;
    }
    return 0.0;
}

PiVector stratum_pi(Stratum s) noexcept {
    PiVector pi;
    for (int z = 0; z < 2; ++z) {
        const int a = stratum_exposure(s, z);
        const double p = stratum_outcome_mean(s, a);
        pi(1, a, z) = p;
        pi(0, a, z) = 1.0 - p;
    }
    return pi;
}

IllustrationSample gen_illustration_sample(std::size_t n, std::uint64_t seed, bool compat) {
    if (n == 0) throw Error(ErrorCode::invalid_argument, "sample size must be positive");
    IllustrationSample out{Dataset(2, {"X1", "X2"}), {}, {}, {}};
    out.data.reserve(n);
    out.y0.reserve(n);
    out.y1.reserve(n);
    out.strata.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        RandomStream rng(seed, stream_id({tags::illustration_row, i}));
        const int z = rng.bernoulli(0.5) ? 1 : 0;
        const double x1 = rng.bernoulli(0.7) ? 1.0 : 0.0;
        const double x2 = rng.uniform(-1.0, 1.0);
        const Stratum s = illustration_stratum(x1, x2, compat);
        const int y0 = rng.bernoulli(stratum_outcome_mean(s, 0)) ? 1 : 0;
        const int y1 = rng.bernoulli(stratum_outcome_mean(s, 1)) ? 1 : 0;
        const int a = stratum_exposure(s, z);
        const std::array<double, 2> x{x1, x2};
        out.data.add_row(x, z, a, a ? y1 : y0);
        out.y0.push_back(y0);
        out.y1.push_back(y1);
        out.strata.push_back(s);
    }
    return out;
}

Dataset gen_illustration(std::size_t n, std::uint64_t seed, bool compat) {
    return gen_illustration_sample(n, seed, compat).data;
}

namespace {

constexpr std::array<Stratum, 4> all_strata{Stratum::always_taker, Stratum::never_taker, Stratum::defier,
                                            Stratum::complier};

// X2 breakpoints; the stratum is constant inside each segment.
constexpr std::array<double, 6> x2_breaks{-1.0, -0.99, -0.5, 0.5, 0.99, 1.0};

PiVector mix(const std::vector<std::pair<double, PiVector>>& parts) {
    PiVector out;
    for (const auto& [w, pi] : parts)
        for (std::size_t j = 0; j < 8; ++j) out.values[j] += w * pi.values[j];
    return out;
}

PiVector pooled_pi(bool compat) {
    std::vector<std::pair<double, PiVector>> parts;
    for (Stratum s : all_strata) parts.emplace_back(stratum_probability(s, compat), stratum_pi(s));
    return mix(parts);
}

// Exact E[f(conditional pi)] by enumerating X1 and the X2 segments.
template <class F>
double integrate_covariates(F&& f) {
    double total = 0.0;
    for (double x1 : {0.0, 1.0}) {
        const double p1 = x1 == 1.0 ? 0.7 : 0.3;
        for (std::size_t k = 0; k + 1 < x2_breaks.size(); ++k) {
            const double len = x2_breaks[k + 1] - x2_breaks[k];
            const double mid = 0.5 * (x2_breaks[k] + x2_breaks[k + 1]);
            total += p1 * (len / 2.0) * f(x1, mid);
        }
    }
    return total;
}

}  // namespace

IllustrationTruth illustration_truth_exact(bool compat) {
    IllustrationTruth t;
    for (Stratum s : all_strata) {
        const double p = stratum_probability(s, compat);
        t.ate += p * (stratum_outcome_mean(s, 1) - stratum_outcome_mean(s, 0));
    }
    t.adjusted_lower = integrate_covariates(
        [&](double x1, double x2) { return theta_profile(conditional_pi(AdjustmentSet::both, x1, x2, compat)).gamma_lower; });
    t.adjusted_upper = integrate_covariates(
        [&](double x1, double x2) { return theta_profile(conditional_pi(AdjustmentSet::both, x1, x2, compat)).gamma_upper; });
    const ThetaProfile pooled = theta_profile(pooled_pi(compat));
    t.unadjusted_lower = pooled.gamma_lower;
    t.unadjusted_upper = pooled.gamma_upper;
    return t;
}

IllustrationTruth illustration_truth(std::size_t mc_n, std::uint64_t seed, bool compat) {
    if (mc_n < 100000) throw Error(ErrorCode::invalid_argument, "Monte Carlo truth needs mc_n >= 100000");
    IllustrationTruth t = illustration_truth_exact(compat);
    t.mc_n = mc_n;
    const Dataset rows = gen_illustration(mc_n, stream_id({tags::illustration_truth, seed}), compat);
    std::vector<double> lower(mc_n), upper(mc_n);
    for (std::size_t i = 0; i < mc_n; ++i) {
        const auto x = rows.row(i);
        const ThetaProfile prof = theta_profile(stratum_pi(illustration_stratum(x[0], x[1], compat)));
        lower[i] = prof.gamma_lower;
        upper[i] = prof.gamma_upper;
    }
    const auto [ml, vl] = weighted_moments(rows, lower);
    const auto [mu, vu] = weighted_moments(rows, upper);
    t.adjusted_lower = ml;
    t.adjusted_upper = mu;
    t.adjusted_lower_se = std::sqrt(vl / static_cast<double>(mc_n));
    t.adjusted_upper_se = std::sqrt(vu / static_cast<double>(mc_n));
    return t;
}

const char* adjustment_set_name(AdjustmentSet s) noexcept {
    switch (s) {
        case AdjustmentSet::none: return "none";
        case AdjustmentSet::x1: return "X1";
        case AdjustmentSet::x2: return "X2";
        case AdjustmentSet::both: return "X1,X2";
        case AdjustmentSet::constant: return "constant";
    }
    return "?";
}

PiVector conditional_pi(AdjustmentSet set, double x1, double x2, bool compat) {
    switch (set) {
        case AdjustmentSet::both: return stratum_pi(illustration_stratum(x1, x2, compat));
        case AdjustmentSet::x2:
            return mix({{0.3, stratum_pi(illustration_stratum(0.0, x2, compat))},
                        {0.7, stratum_pi(illustration_stratum(1.0, x2, compat))}});
        case AdjustmentSet::x1: {
            std::vector<std::pair<double, PiVector>> parts;
            for (std::size_t k = 0; k + 1 < x2_breaks.size(); ++k) {
                const double mid = 0.5 * (x2_breaks[k] + x2_breaks[k + 1]);
                parts.emplace_back((x2_breaks[k + 1] - x2_breaks[k]) / 2.0,
                                   stratum_pi(illustration_stratum(x1, mid, compat)));
            }
            return mix(parts);
        }
        case AdjustmentSet::none:
        case AdjustmentSet::constant: return pooled_pi(compat);
    }
    return pooled_pi(compat);
}

namespace {

// Coordinates retained by a set.
std::pair<bool, bool> retained(AdjustmentSet s) {
    switch (s) {
        case AdjustmentSet::x1: return {true, false};
        case AdjustmentSet::x2: return {false, true};
        case AdjustmentSet::both: return {true, true};
        default: return {false, false};
    }
}

bool nested(AdjustmentSet small, AdjustmentSet large) {
    const auto [a1, a2] = retained(small);
    const auto [b1, b2] = retained(large);
    return (!a1 || b1) && (!a2 || b2);
}

}  // namespace

WidthReport width_comparison(const std::vector<AdjustmentSet>& sets, std::size_t mc_n, std::uint64_t seed,
                             bool compat) {
    if (mc_n < 2) throw Error(ErrorCode::invalid_argument, "Monte Carlo size must be at least 2");
    WidthReport report;
    report.mc_n = mc_n;
    const Dataset rows = gen_illustration(mc_n, stream_id({tags::width_truth, seed}), compat);
    for (AdjustmentSet set : sets) {
        WidthEntry e;
        e.set = set;
        e.exact_lower = integrate_covariates(
            [&](double x1, double x2) { return theta_profile(conditional_pi(set, x1, x2, compat)).gamma_lower; });
        e.exact_upper = integrate_covariates(
            [&](double x1, double x2) { return theta_profile(conditional_pi(set, x1, x2, compat)).gamma_upper; });
        std::vector<double> lower(mc_n), upper(mc_n), width(mc_n);
        for (std::size_t i = 0; i < mc_n; ++i) {
            const auto x = rows.row(i);
            const ThetaProfile prof = theta_profile(conditional_pi(set, x[0], x[1], compat));
            lower[i] = prof.gamma_lower;
            upper[i] = prof.gamma_upper;
            width[i] = prof.gamma_upper - prof.gamma_lower;
        }
        e.mc_lower = weighted_moments(rows, lower).first;
        e.mc_upper = weighted_moments(rows, upper).first;
        e.mc_width_se = std::sqrt(weighted_moments(rows, width).second / static_cast<double>(mc_n));
        e.lower = e.mc_lower;
        e.upper = e.mc_upper;
        report.entries.push_back(e);
    }
    for (const auto& small : report.entries)
        for (const auto& large : report.entries)
            if (nested(small.set, large.set) && small.width() < large.width() - 1e-12)
                report.nested_monotone = false;
    return report;
}

namespace margin_dgp {

double lambda1(double x) noexcept { return std::clamp(x * x, 0.10, 0.90); }

PiVector pi(double x) noexcept {
    PiVector p;
    p(0, 0, 0) = 1.0 - x / 2.0;
    p(1, 0, 0) = x / 2.0;
    p(0, 1, 1) = (1.0 + x) / 2.0;
    p(1, 1, 1) = (1.0 - x) / 2.0;
    return p;
}

double gamma(double x) noexcept { return 0.5 - x; }

double gap(double x) noexcept { return 0.5 * std::min(x, 1.0 - x); }

double gap_cdf(double t) noexcept { return t <= 0.0 ? 0.0 : t >= 0.25 ? 1.0 : 4.0 * t; }

ClosedFormNuisance nuisance() {
    ClosedFormNuisance truth;
    truth.lambda1 = [](std::span<const double> x) { return lambda1(x[0]); };
    truth.pi[PiVector::index(0, 0, 0)] = [](std::span<const double> x) { return 1.0 - x[0] / 2.0; };
    truth.pi[PiVector::index(1, 0, 0)] = [](std::span<const double> x) { return x[0] / 2.0; };
    truth.pi[PiVector::index(0, 1, 1)] = [](std::span<const double> x) { return (1.0 + x[0]) / 2.0; };
    truth.pi[PiVector::index(1, 1, 1)] = [](std::span<const double> x) { return (1.0 - x[0]) / 2.0; };
    return truth;
}

}  // namespace margin_dgp

Dataset gen_margin_dgp(std::size_t n, std::uint64_t seed) {
    if (n == 0) throw Error(ErrorCode::invalid_argument, "sample size must be positive");
    Dataset data(1, {"X"});
    data.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        RandomStream rng(seed, stream_id({tags::margin_row, i}));
        const double x = rng.uniform_open();
        const int z = rng.bernoulli(margin_dgp::lambda1(x)) ? 1 : 0;
        const int a = z;
        const double u = rng.uniform();
        const double mean = u * (a ? 1.0 - x : x);
        const std::array<double, 1> row{x};
        data.add_row(row, z, a, rng.bernoulli(mean) ? 1.0 : 0.0);
    }
    return data;
}

double RmseResult::rmse(std::size_t n, double r, const std::string& estimator) const {
    for (const auto& c : cells)
        if (c.n == n && std::fabs(c.r - r) < 1e-9 && c.estimator == estimator) return c.rmse;
    throw Error(ErrorCode::invalid_argument, "no RMSE cell for estimator " + estimator);
}

RmseResult rmse_experiment(const RmseConfig& cfg) {
    if (cfg.reps < 1) throw Error(ErrorCode::invalid_argument, "replication count must be positive");
    static const std::array<const char*, 3> estimators{"direct", "lse", "plugin"};
    const ClosedFormNuisance truth = margin_dgp::nuisance();
    const std::size_t n_count = cfg.n_grid.size(), r_count = cfg.r_grid.size();
    const auto reps = static_cast<std::size_t>(cfg.reps);

    // estimates[(ni * reps + rep) * r_count * 3 + ri * 3 + e]
    std::vector<double> estimates(n_count * reps * r_count * 3);
    parallel_for(n_count * reps, cfg.threads, [&](std::size_t job) {
        const std::size_t ni = job / reps, rep = job % reps;
        const std::size_t n = cfg.n_grid[ni];
        const Dataset data = gen_margin_dgp(n, stream_id({tags::rmse_data, cfg.seed, n, rep}));
        const std::uint64_t noise_seed = stream_id({tags::nuisance_noise, cfg.seed, n, rep});
        for (std::size_t ri = 0; ri < r_count; ++ri) {
            const double r = cfg.r_grid[ri];
            const auto nuis = oracle_noisy_nuisance(truth, n, r, cfg.h, noise_seed).evaluate_all(data);
            double* out = &estimates[job * r_count * 3 + ri * 3];
            out[0] = direct_bounds(data, nuis).lower;
            out[1] = lse_bounds(data, nuis, LseConfig::simulation(cfg.h, r)).lower;
            out[2] = plugin_bounds(data, nuis).lower;
        }
    });

    RmseResult result;
    result.config = cfg;
    result.rows.reserve(estimates.size());
    for (std::size_t ni = 0; ni < n_count; ++ni)
        for (std::size_t ri = 0; ri < r_count; ++ri) {
            std::array<double, 3> sq{}, sum{};
            for (std::size_t rep = 0; rep < reps; ++rep)
                for (std::size_t e = 0; e < 3; ++e) {
                    const double v = estimates[(ni * reps + rep) * r_count * 3 + ri * 3 + e];
                    result.rows.push_back({cfg.n_grid[ni], cfg.r_grid[ri], static_cast<int>(rep), estimators[e], v,
                                           margin_dgp::lower_bound});
                    sum[e] += v - margin_dgp::lower_bound;
                    sq[e] += (v - margin_dgp::lower_bound) * (v - margin_dgp::lower_bound);
                }
            for (std::size_t e = 0; e < 3; ++e)
                result.cells.push_back({cfg.n_grid[ni], cfg.r_grid[ri], estimators[e],
                                        std::sqrt(sq[e] / static_cast<double>(reps)),
                                        sum[e] / static_cast<double>(reps), cfg.reps});
        }
    return result;
}

}  // namespace ivb
