#include "ivbounds/if_estimators.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <tuple>

#include "ivbounds/error.hpp"
#include "ivbounds/normal.hpp"
#include "ivbounds/parallel.hpp"

namespace ivb {

PsiVector psi_components(const Observation& obs, double lambda1, const PiVector& pi) {
    PsiVector psi{};
    const double lambda = obs.z == 1 ? lambda1 : 1.0 - lambda1;
    for (int y = 0; y < 2; ++y)
        for (int a = 0; a < 2; ++a) {
            const std::size_t j = PiVector::index(y, a, obs.z);
            const double cell = (obs.y == y && obs.a == a) ? 1.0 : 0.0;
            psi[j] = (cell - pi.values[j]) / lambda;
        }
    return psi;
}

IfContribution if_contributions(const Observation& obs, const NuisanceValue& nuis) {
    const PsiVector psi = psi_components(obs, nuis.lambda1, nuis.pi);
    return {lower_terms(psi, 0.0), upper_terms(psi, 0.0)};
}

double BoundEstimate::se_lower() const {
    return n == 0 ? 0.0 : std::sqrt(var_lower / static_cast<double>(n));
}

double BoundEstimate::se_upper() const {
    return n == 0 ? 0.0 : std::sqrt(var_upper / static_cast<double>(n));
}

Observation observation(const Dataset& data, std::size_t i) {
    const double y = data.y[i];
    if (y != 0.0 && y != 1.0)
        throw Error(ErrorCode::non_binary_value, "estimators need a 0/1 outcome (row " + std::to_string(i + 1) + ")");
    return {data.z[i], data.a[i], static_cast<int>(y)};
}

std::pair<double, double> weighted_moments(const Dataset& data, std::span<const double> values) {
    const std::size_t n = values.size();
    if (n == 0) throw Error(ErrorCode::empty_data, "no rows to average");
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += data.w[i];
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += data.w[i] * values[i];
    mean /= total;
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = values[i] - mean;
        var += data.w[i] * d * d;
    }
    return {mean, var / total};
}

namespace {

void check_inputs(const Dataset& data, std::span<const NuisanceValue> nuis) {
    if (data.empty()) throw Error(ErrorCode::empty_data, "cannot estimate bounds on zero rows");
    if (nuis.size() != data.size())
        throw Error(ErrorCode::fold_failure, "nuisance values missing for " +
                                                 std::to_string(data.size() - std::min(data.size(), nuis.size())) +
                                                 " rows");
}

BoundEstimate finish(const Dataset& data, std::string method, std::vector<double> phi_lower,
                     std::vector<double> phi_upper) {
    BoundEstimate est;
    est.method = std::move(method);
    est.n = data.size();
    std::tie(est.lower, est.var_lower) = weighted_moments(data, phi_lower);
    std::tie(est.upper, est.var_upper) = weighted_moments(data, phi_upper);
    est.phi_lower = std::move(phi_lower);
    est.phi_upper = std::move(phi_upper);
    return est;
}

}  // namespace

BoundEstimate direct_bounds(const Dataset& data, std::span<const NuisanceValue> nuis, unsigned threads) {
    check_inputs(data, nuis);
    const std::size_t n = data.size();
    std::vector<double> phi_l(n), phi_u(n);
    std::vector<std::size_t> d_l(n), d_u(n);
    parallel_for(n, threads, [&](std::size_t i) {
        const ThetaProfile prof = theta_profile(nuis[i].pi);
        const IfContribution c = if_contributions(observation(data, i), nuis[i]);
        d_l[i] = prof.d_lower;
        d_u[i] = prof.d_upper;
        phi_l[i] = c.lower[prof.d_lower] + prof.gamma_lower;
        phi_u[i] = c.upper[prof.d_upper] + prof.gamma_upper;
    });
    BoundEstimate est = finish(data, "direct", std::move(phi_l), std::move(phi_u));
    for (std::size_t i = 0; i < n; ++i) {
        ++est.d_lower_counts[d_l[i]];
        ++est.d_upper_counts[d_u[i]];
    }
    return est;
}

BoundEstimate plugin_bounds(const Dataset& data, std::span<const NuisanceValue> nuis, unsigned threads) {
    check_inputs(data, nuis);
    const std::size_t n = data.size();
    std::vector<double> g_l(n), g_u(n);
    std::vector<std::size_t> d_l(n), d_u(n);
    parallel_for(n, threads, [&](std::size_t i) {
        const ThetaProfile prof = theta_profile(nuis[i].pi);
        g_l[i] = prof.gamma_lower;
        g_u[i] = prof.gamma_upper;
        d_l[i] = prof.d_lower;
        d_u[i] = prof.d_upper;
    });
    BoundEstimate est = finish(data, "plugin", std::move(g_l), std::move(g_u));
    for (std::size_t i = 0; i < n; ++i) {
        ++est.d_lower_counts[d_l[i]];
        ++est.d_upper_counts[d_u[i]];
    }
    return est;
}

std::pair<double, double> wald_interval(const BoundEstimate& est, double delta) {
    if (!(delta > 0.0 && delta < 1.0)) throw Error(ErrorCode::invalid_argument, "delta must lie in (0, 1)");
    if (est.n < 2) throw Error(ErrorCode::invalid_argument, "a Wald interval needs at least two rows");
    const double z = normal_critical(delta);
    return {est.lower - z * est.se_lower(), est.upper + z * est.se_upper()};
}

BoundEstimate clamp_bounds(BoundEstimate est) {
    est.lower = std::clamp(est.lower, -1.0, 1.0);
    est.upper = std::clamp(est.upper, -1.0, 1.0);
    est.clamped = true;
    return est;
}

}  // namespace ivb
