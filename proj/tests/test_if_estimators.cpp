#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "ivbounds/core_model.hpp"
#include "ivbounds/error.hpp"
#include "ivbounds/if_estimators.hpp"
#include "ivbounds/nuisance.hpp"
#include "ivbounds/rng.hpp"
#include "ivbounds/simulation.hpp"

using namespace ivb;

namespace {

constexpr std::size_t i111 = PiVector::index(1, 1, 1);

NuisanceValue with_pi(double lambda1, std::initializer_list<std::pair<std::size_t, double>> entries) {
    NuisanceValue v;
    v.lambda1 = lambda1;
    v.pi.values.fill(0.0);
    for (const auto& [k, p] : entries) v.pi.values[k] = p;
    return v;
}

}  // namespace

TEST_CASE("psi examples") {
    auto nv = with_pi(0.5, {{i111, 0.5}});
    auto psi = psi_components({1, 1, 1}, nv.lambda1, nv.pi);
    CHECK(psi[i111] == 1.0);
    for (int y : {0, 1})
        for (int a : {0, 1}) CHECK(psi[PiVector::index(y, a, 0)] == 0.0);

    nv = with_pi(0.75, {{PiVector::index(0, 0, 0), 0.25}});
    psi = psi_components({0, 0, 0}, nv.lambda1, nv.pi);
    CHECK(psi[PiVector::index(0, 0, 0)] == doctest::Approx(3.0).epsilon(1e-15));
    for (int y : {0, 1})
        for (int a : {0, 1}) CHECK(psi[PiVector::index(y, a, 1)] == 0.0);
}

TEST_CASE("psi entries have mean zero under exact nuisances") {
    const std::size_t n = 40000;
    const Dataset d = gen_margin_dgp(n, 21);
    const auto truth = margin_dgp::nuisance();
    std::array<double, 8> sum{}, sum2{};
    for (std::size_t i = 0; i < n; ++i) {
        const auto v = truth(d.row(i));
        const auto psi = psi_components(observation(d, i), v.lambda1, v.pi);
        for (std::size_t k = 0; k < 8; ++k) {
            sum[k] += psi[k];
            sum2[k] += psi[k] * psi[k];
        }
    }
    for (std::size_t k = 0; k < 8; ++k) {
        const double mean = sum[k] / n;
        const double sd = std::sqrt(sum2[k] / n - mean * mean);
        CHECK(std::abs(mean) <= 3.0 * sd / std::sqrt(static_cast<double>(n)) + 1e-15);
    }
}

TEST_CASE("IF contributions vanish when psi is zero") {
    const auto nv = with_pi(0.5, {{i111, 1.0}, {PiVector::index(0, 0, 0), 1.0}});
    const auto c = if_contributions({1, 1, 1}, nv);
    for (std::size_t j = 0; j < 8; ++j) {
        CHECK(c.lower[j] == 0.0);
        CHECK(c.upper[j] == 0.0);
    }
}

TEST_CASE("IF templates for a single nonzero psi_11.1") {
    const double c = 0.37;
    std::array<double, 8> psi{};
    psi[i111] = c;
    const auto lo = lower_terms(psi, 0.0);
    const auto up = upper_terms(psi, 0.0);
    CHECK(lo[0] == c);
    CHECK(lo[1] == 0.0);
    CHECK(lo[4] == -c);
    CHECK(lo[5] == c);
    CHECK(up[2] == c);
    CHECK(up[5] == c);
    CHECK(up[6] == c);
    CHECK(up[7] == c);

    // Independent oracle: each template is affine in pi, so the psi_11.1
    // coefficient is the finite difference of theta in that coordinate.
    std::array<double, 8> base{};
    base.fill(0.2);
    auto bumped = base;
    bumped[i111] += 1.0;
    const auto tl0 = lower_terms(base, 1.0), tl1 = lower_terms(bumped, 1.0);
    const auto tu0 = upper_terms(base, 1.0), tu1 = upper_terms(bumped, 1.0);
    for (std::size_t j = 0; j < 8; ++j) {
        CHECK(lo[j] == doctest::Approx(c * (tl1[j] - tl0[j])).epsilon(1e-12));
        CHECK(up[j] == doctest::Approx(c * (tu1[j] - tu0[j])).epsilon(1e-12));
    }
}

TEST_CASE("IF correction is unbiased under exact nuisances") {
    const std::size_t n = 40000;
    const Dataset d = gen_margin_dgp(n, 22);
    const auto nuis = margin_dgp::nuisance().evaluate_all(d);
    const auto est = direct_bounds(d, nuis);
    for (std::size_t j = 0; j < 8; ++j) {
        double s = 0.0, s2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto c = if_contributions(observation(d, i), nuis[i]);
            s += c.lower[j];
            s2 += c.lower[j] * c.lower[j];
        }
        const double mean = s / n;
        const double sd = std::sqrt(s2 / n - mean * mean);
        CHECK(std::abs(mean) <= 3.0 * sd / std::sqrt(static_cast<double>(n)) + 1e-15);
    }
    double gamma_mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) gamma_mean += margin_dgp::gamma(d.row(i)[0]);
    gamma_mean /= n;
    CHECK(std::abs(est.lower - gamma_mean) <= 3.0 * est.se_lower());
}

TEST_CASE("perfect compliance gives unit bounds with zero variance") {
    Dataset d(1, {"X"});
    RandomStream rng(5, 5);
    for (int i = 0; i < 500; ++i) {
        const int z = rng.bernoulli(0.5);
        const double x[1] = {rng.uniform()};
        d.add_row(x, z, z, z);
    }
    ClosedFormNuisance exact;
    exact.lambda1 = [](std::span<const double>) { return 0.5; };
    exact.pi[i111] = [](std::span<const double>) { return 1.0; };
    exact.pi[PiVector::index(0, 0, 0)] = [](std::span<const double>) { return 1.0; };
    const auto est = direct_bounds(d, exact.evaluate_all(d));
    CHECK(est.lower == 1.0);
    CHECK(est.upper == 1.0);
    CHECK(est.var_lower == 0.0);
    CHECK(est.var_upper == 0.0);
    const auto [lo, hi] = wald_interval(est, 0.05);
    CHECK(lo == 1.0);
    CHECK(hi == 1.0);
}

TEST_CASE("margin design with exact nuisances") {
    const Dataset d = gen_margin_dgp(5000, 23);
    const auto nuis = margin_dgp::nuisance().evaluate_all(d);
    const auto est = direct_bounds(d, nuis);
    CHECK(std::abs(est.lower - margin_dgp::lower_bound) <= 4.0 * est.se_lower());
    CHECK(std::abs(est.upper - margin_dgp::upper_bound) <= 4.0 * est.se_upper());
    CHECK(est.n == 5000);
    CHECK(est.method == "direct");
    CHECK(est.phi_lower.size() == 5000);
    CHECK(std::accumulate(est.d_lower_counts.begin(), est.d_lower_counts.end(), std::size_t{0}) == 5000);

    const auto plug = plugin_bounds(d, nuis);
    double g = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) g += margin_dgp::gamma(d.row(i)[0]);
    CHECK(plug.lower == doctest::Approx(g / 5000).epsilon(1e-12));
    CHECK(plug.upper == doctest::Approx(g / 5000).epsilon(1e-12));
}

TEST_CASE("aggregation does not depend on the thread count") {
    const Dataset d = gen_illustration(4000, 24);
    const auto nuis = cross_fit(d, 5, LearnerSpecs{}, 7).evaluate_all(d);
    const auto a = direct_bounds(d, nuis, 1);
    const auto b = direct_bounds(d, nuis, 4);
    CHECK(a.lower == b.lower);
    CHECK(a.upper == b.upper);
    CHECK(a.var_lower == b.var_lower);
    CHECK(a.var_upper == b.var_upper);
}

TEST_CASE("known propensity path is bit-identical to a constant evaluation") {
    const Dataset d = gen_illustration(2000, 25);
    LearnerSpecs specs;
    specs.propensity = LearnerSpec::known(0.5);
    const auto cf = cross_fit(d, 5, specs, 3);
    const auto nuis = cf.evaluate_all(d);
    auto manual = nuis;
    for (std::size_t i = 0; i < d.size(); ++i) {
        const auto& m = cf.models(cf.fold_of(i));
        manual[i].lambda1 = 0.5;
        manual[i].pi = PiVector::from_arms(m.arm0(d.row(i)), m.arm1(d.row(i)));
    }
    const auto a = direct_bounds(d, nuis);
    const auto b = direct_bounds(d, manual);
    CHECK(a.lower == b.lower);
    CHECK(a.upper == b.upper);
    CHECK(a.var_lower == b.var_lower);
    CHECK(a.var_upper == b.var_upper);
}

TEST_CASE("weights act as replication counts") {
    const Dataset base = gen_illustration(300, 26);
    Dataset weighted = base;
    Dataset replicated = base;
    for (std::size_t i = 0; i < base.size(); i += 3) {
        weighted.w[i] = 2.0;
        replicated.add_row(base.row(i), base.z[i], base.a[i], base.y[i]);
    }
    std::vector<double> v(base.size()), vr;
    for (std::size_t i = 0; i < base.size(); ++i) v[i] = std::sin(static_cast<double>(i));
    vr = v;
    for (std::size_t i = 0; i < base.size(); i += 3) vr.push_back(v[i]);
    const auto [m1, s1] = weighted_moments(weighted, v);
    const auto [m2, s2] = weighted_moments(replicated, vr);
    CHECK(m1 == doctest::Approx(m2).epsilon(1e-12));
    CHECK(s1 == doctest::Approx(s2).epsilon(1e-12));
}

TEST_CASE("Wald interval arithmetic") {
    BoundEstimate est;
    est.lower = 0.1;
    est.upper = 0.3;
    est.n = 100;
    auto [lo, hi] = wald_interval(est, 0.05);
    CHECK(lo == 0.1);
    CHECK(hi == 0.3);

    est.var_lower = 1.0;
    est.var_upper = 1.0;
    std::tie(lo, hi) = wald_interval(est, 0.05);
    CHECK(lo == doctest::Approx(0.1 - 1.959964 * 0.1).epsilon(1e-7));
    CHECK(hi == doctest::Approx(0.3 + 1.959964 * 0.1).epsilon(1e-7));

    est.n = 1;
    CHECK_THROWS_AS(wald_interval(est, 0.05), Error);
    est.n = 100;
    CHECK_THROWS_AS(wald_interval(est, 0.0), Error);
}

TEST_CASE("clamping and crossing are reported, not hidden") {
    BoundEstimate est;
    est.lower = -1.3;
    est.upper = 1.1;
    const auto c = clamp_bounds(est);
    CHECK(c.lower == -1.0);
    CHECK(c.upper == 1.0);
    CHECK(c.clamped);
    CHECK_FALSE(est.clamped);

    est.lower = 0.2;
    est.upper = 0.1;
    CHECK(est.crossed());
    const auto inside = clamp_bounds(est);
    CHECK(inside.lower == 0.2);
    CHECK(inside.upper == 0.1);
    CHECK(inside.crossed());
}

TEST_CASE("estimator input errors") {
    const Dataset d = gen_margin_dgp(50, 1);
    std::vector<NuisanceValue> short_nuis(10);
    CHECK_THROWS_AS(direct_bounds(d, short_nuis), Error);
    CHECK_THROWS_AS(direct_bounds(Dataset(1), {}), Error);
}
