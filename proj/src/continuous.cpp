#include "ivbounds/continuous.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <tuple>

#include "ivbounds/error.hpp"
#include "ivbounds/parallel.hpp"
#include "ivbounds/rng.hpp"

namespace ivb {

OutcomeTransform OutcomeTransform::from_data(const Dataset& data) {
    if (data.empty()) throw Error(ErrorCode::empty_data, "cannot derive an outcome range from zero rows");
    const auto [lo, hi] = std::minmax_element(data.y.begin(), data.y.end());
    OutcomeTransform t{*lo, *hi};
    if (!(t.y_max > t.y_min)) {
        // A constant outcome still needs a nondegenerate range.
        if (t.y_min >= 0.0 && t.y_min <= 1.0) t = {0.0, 1.0};
        else t.y_max = t.y_min + 1.0;
    }
    return t;
}

void OutcomeTransform::validate() const {
    if (!std::isfinite(y_min) || !std::isfinite(y_max) || !(y_max > y_min))
        throw Error(ErrorCode::invalid_argument, "outcome range needs finite y_min < y_max");
}

AugmentedDataset augment(const Dataset& data, const OutcomeTransform& transform, std::uint64_t seed,
                         int replicate) {
    transform.validate();
    std::vector<std::size_t> bad;
    for (std::size_t i = 0; i < data.size(); ++i)
        if (!(data.y[i] >= transform.y_min && data.y[i] <= transform.y_max)) bad.push_back(i + 1);
    if (!bad.empty()) {
        std::string rows;
        for (std::size_t k = 0; k < std::min<std::size_t>(bad.size(), 10); ++k)
            rows += (k ? ", " : "") + std::to_string(bad[k]);
        if (bad.size() > 10) rows += ", ... (" + std::to_string(bad.size()) + " rows)";
        throw Error(ErrorCode::out_of_range, "outcome outside [" + std::to_string(transform.y_min) + ", " +
                                                 std::to_string(transform.y_max) + "] at rows " + rows);
    }

    AugmentedDataset out;
    out.replicate = replicate;
    out.data = data;
    out.data.outcome_kind = OutcomeKind::binary;
    out.threshold.resize(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        RandomStream rng(seed, stream_id({tags::augment_uniform, static_cast<std::uint64_t>(replicate), i}));
        const double w = rng.uniform_open();
        out.threshold[i] = w;
        out.data.y[i] = transform(data.y[i]) <= w ? 1.0 : 0.0;
    }
    return out;
}

ContinuousEstimate continuous_bounds(const Dataset& data, const ContinuousConfig& cfg, std::uint64_t seed) {
    if (cfg.replicates < 1) throw Error(ErrorCode::invalid_argument, "replicate count m must be at least 1");
    if (data.empty()) throw Error(ErrorCode::empty_data, "cannot estimate bounds on zero rows");
    const OutcomeTransform transform = cfg.transform ? *cfg.transform : OutcomeTransform::from_data(data);
    transform.validate();

    const std::size_t n = data.size();
    const auto m = static_cast<std::size_t>(cfg.replicates);
    std::vector<BoundEstimate> per_rep(m);
    std::vector<std::array<double, 3>> diag(m);
    parallel_for(m, cfg.threads, [&](std::size_t r) {
        const AugmentedDataset aug = augment(data, transform, seed, static_cast<int>(r));
        const FoldedNuisances folded = cross_fit(aug.data, cfg.folds, cfg.learners, seed);
        const auto nuis = folded.evaluate_all(aug.data);
        diag[r] = {1.0, 0.0, 0.0};
        for (const auto& v : nuis) {
            diag[r][0] = std::min(diag[r][0], v.lambda1);
            diag[r][1] = std::max(diag[r][1], v.lambda1);
            diag[r][2] = std::max(diag[r][2], v.pi.simplex_violation());
        }
        per_rep[r] = cfg.estimator == ContinuousConfig::Estimator::lse ? lse_bounds(aug.data, nuis, cfg.lse)
                                                                       : direct_bounds(aug.data, nuis);
    });

    ContinuousEstimate out;
    out.transform = transform;
    out.propensity_min = 1.0;
    for (const auto& d : diag) {
        out.propensity_min = std::min(out.propensity_min, d[0]);
        out.propensity_max = std::max(out.propensity_max, d[1]);
        out.max_simplex_violation = std::max(out.max_simplex_violation, d[2]);
    }
    std::vector<double> phi_l(n, 0.0), phi_u(n, 0.0);
    for (std::size_t r = 0; r < m; ++r) {
        const BoundEstimate& e = per_rep[r];
        out.replicate_lower.push_back(-e.upper);
        out.replicate_upper.push_back(-e.lower);
        for (std::size_t i = 0; i < n; ++i) {
            phi_l[i] += -e.phi_upper[i];
            phi_u[i] += -e.phi_lower[i];
        }
        for (std::size_t j = 0; j < 8; ++j) {
            out.scaled.d_lower_counts[j] += e.d_upper_counts[j];
            out.scaled.d_upper_counts[j] += e.d_lower_counts[j];
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        phi_l[i] /= static_cast<double>(m);
        phi_u[i] /= static_cast<double>(m);
    }
    BoundEstimate& s = out.scaled;
    s.method = cfg.estimator == ContinuousConfig::Estimator::lse ? "continuous-lse" : "continuous-direct";
    s.t = per_rep.front().t;
    s.n = n;
    std::tie(s.lower, s.var_lower) = weighted_moments(data, phi_l);
    std::tie(s.upper, s.var_upper) = weighted_moments(data, phi_u);
    s.phi_lower = std::move(phi_l);
    s.phi_upper = std::move(phi_u);
    out.lower_original = s.lower * transform.range();
    out.upper_original = s.upper * transform.range();
    return out;
}

double prop2_variance(double mu, double sigma2, std::size_t n, int m) {
    return (sigma2 + (mu * (1.0 - mu) - sigma2) / static_cast<double>(m)) / static_cast<double>(n);
}

Prop2Result prop2_variance_check(const std::function<double(RandomStream&)>& sampler, double mu, double sigma2,
                                 std::size_t n, int m, int reps, std::uint64_t seed, unsigned threads) {
    if (!(sigma2 >= 0.0 && sigma2 <= mu * (1.0 - mu) + 1e-12))
        throw Error(ErrorCode::invalid_argument, "need 0 <= sigma2 <= mu (1 - mu)");
    if (n == 0 || m < 1 || reps < 2) throw Error(ErrorCode::invalid_argument, "need n >= 1, m >= 1, reps >= 2");
    std::vector<double> estimates(static_cast<std::size_t>(reps));
    parallel_for(estimates.size(), threads, [&](std::size_t rep) {
        RandomStream rng(seed, stream_id({tags::prop2, n, static_cast<std::uint64_t>(m), rep}));
        std::size_t hits = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double t = sampler(rng);
            for (int j = 0; j < m; ++j)
                if (t > rng.uniform_open()) ++hits;
        }
        estimates[rep] = static_cast<double>(hits) / (static_cast<double>(n) * m);
    });
    double mean = 0.0;
    for (double e : estimates) mean += e;
    mean /= reps;
    double var = 0.0;
    for (double e : estimates) var += (e - mean) * (e - mean);
    var /= (reps - 1);

    Prop2Result res;
    res.mu = mu;
    res.sigma2 = sigma2;
    res.n = n;
    res.m = m;
    res.reps = reps;
    res.empirical_variance = var;
    res.predicted_variance = prop2_variance(mu, sigma2, n, m);
    res.relative_error = std::fabs(var - res.predicted_variance) / res.predicted_variance;
    return res;
}

}  // namespace ivb
