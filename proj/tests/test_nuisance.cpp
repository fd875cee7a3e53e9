#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "ivbounds/error.hpp"
#include "ivbounds/nuisance.hpp"
#include "ivbounds/rng.hpp"
#include "ivbounds/simulation.hpp"

using namespace ivb;

namespace {

Dataset null_data(std::size_t n, double pz, std::uint64_t seed) {
    Dataset d(2, {"X1", "X2"});
    RandomStream rng(seed, 7);
    for (std::size_t i = 0; i < n; ++i) {
        const double x[2] = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
        const int z = rng.bernoulli(pz);
        const int a = rng.bernoulli(0.5);
        d.add_row(x, z, a, rng.bernoulli(0.4) ? 1.0 : 0.0);
    }
    return d;
}

bool same_value(const NuisanceValue& a, const NuisanceValue& b) {
    return a.lambda1 == b.lambda1 && a.pi.values == b.pi.values;
}

}  // namespace

TEST_CASE("known propensity returns the constant") {
    const Dataset d = null_data(200, 0.5, 1);
    const auto m = fit_propensity(d, LearnerSpec::known(0.5), 0.01);
    for (std::size_t i = 0; i < d.size(); ++i) CHECK(m(d.row(i)) == 0.5);
    CHECK_THROWS_AS(fit_propensity(d, LearnerSpec::known(1.0), 0.01), Error);
    CHECK_THROWS_AS(fit_propensity(d, LearnerSpec::known(0.0), 0.01), Error);
    CHECK_THROWS_AS(fit_propensity(d, LearnerSpec::known(0.005), 0.01), Error);
}

TEST_CASE("softmax propensity under a null model matches the mean of z") {
    const Dataset d = null_data(10000, 0.3, 2);
    const double zbar = std::accumulate(d.z.begin(), d.z.end(), 0.0) / static_cast<double>(d.size());
    const auto m = fit_propensity(d, LearnerSpec::softmax(), 0.01);
    for (double u : {-0.8, -0.3, 0.0, 0.4, 0.9}) {
        const double x[2] = {u, -u / 2};
        CHECK(std::abs(m(x) - zbar) <= 0.03);
    }
}

TEST_CASE("propensity truncation") {
    Dataset d(1, {"X"});
    for (int i = 0; i < 2000; ++i) {
        const double x[1] = {i < 1000 ? -0.5 - i * 1e-4 : 0.5 + i * 1e-4};
        d.add_row(x, i < 1000 ? 0 : 1, 0, 0.0);
    }
    const auto m = fit_propensity(d, LearnerSpec::histogram(1, 25, 1.0), 0.025);
    const double lo[1] = {-0.6};
    const double hi[1] = {0.6};
    CHECK(m(lo) == 0.025);
    CHECK(m(hi) == 0.975);
}

TEST_CASE("propensity and joint outputs stay in range on random points") {
    const Dataset d = gen_illustration(3000, 11);
    RandomStream rng(3, 3);
    for (const auto& spec : {LearnerSpec::histogram(), LearnerSpec::knn(25), LearnerSpec::softmax(),
                             LearnerSpec::constant(1.0)}) {
        const auto prop = fit_propensity(d, spec, 0.05);
        const auto j0 = fit_joint(d, 0, spec);
        const auto j1 = fit_joint(d, 1, spec);
        for (int k = 0; k < 1000; ++k) {
            const double x[2] = {static_cast<double>(rng.bernoulli(0.7)), rng.uniform(-1, 1)};
            const double l = prop(x);
            CHECK(l >= 0.05);
            CHECK(l <= 0.95);
            for (const auto& pr : {j0(x), j1(x)}) {
                double s = 0.0;
                for (double p : pr) {
                    CHECK(p >= 0.0);
                    s += p;
                }
                CHECK(std::abs(s - 1.0) <= 1e-9);
            }
        }
    }
}

TEST_CASE("fit errors") {
    Dataset d = null_data(100, 0.5, 4);
    CHECK_THROWS_AS(fit_propensity(d, LearnerSpec::histogram(), 0.0), Error);
    CHECK_THROWS_AS(fit_propensity(d, LearnerSpec::histogram(), 0.5), Error);

    Dataset one_arm = d;
    std::fill(one_arm.z.begin(), one_arm.z.end(), 1);
    try {
        fit_propensity(one_arm, LearnerSpec::histogram(), 0.01);
        FAIL("expected fit_failure");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::fit_failure);
    }
    CHECK_THROWS_AS(fit_joint(one_arm, 0, LearnerSpec::histogram()), Error);

    Dataset bounded = d;
    bounded.outcome_kind = OutcomeKind::bounded;
    bounded.y[3] = 0.25;
    CHECK_THROWS_AS(fit_joint(bounded, bounded.z[3], LearnerSpec::histogram()), Error);
}

TEST_CASE("softmax joint model recovers the margin design law") {
    const Dataset d = gen_margin_dgp(50000, 5);
    const auto j0 = fit_joint(d, 0, LearnerSpec::softmax(2));
    for (double x : {0.25, 0.5, 0.75}) {
        const double row[1] = {x};
        const auto pr = j0(row);
        CHECK(std::abs(pr[0] - (1.0 - x / 2)) <= 0.02);
    }
}

TEST_CASE("fold assignment") {
    const std::size_t n = 103;
    for (int k : {2, 5, 10, 103}) {
        const auto f = assign_folds(n, k, 9);
        std::vector<int> sizes(static_cast<std::size_t>(k), 0);
        for (int v : f) {
            REQUIRE(v >= 0);
            REQUIRE(v < k);
            ++sizes[static_cast<std::size_t>(v)];
        }
        const auto [lo, hi] = std::minmax_element(sizes.begin(), sizes.end());
        CHECK(*hi - *lo <= 1);
    }
    CHECK(assign_folds(n, 5, 9) == assign_folds(n, 5, 9));
    CHECK(assign_folds(n, 5, 9) != assign_folds(n, 5, 10));
    CHECK_THROWS_AS(assign_folds(n, 1, 9), Error);
    CHECK_THROWS_AS(assign_folds(n, 104, 9), Error);
}

TEST_CASE("fold assignment is permutation equivariant") {
    RandomStream rng(12, 1);
    std::vector<std::uint64_t> keys(57);
    for (auto& k : keys) k = rng();
    std::vector<std::size_t> perm(keys.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<std::uint64_t> permuted(keys.size());
    for (std::size_t i = 0; i < perm.size(); ++i) permuted[i] = keys[perm[i]];
    const auto f = assign_folds(keys, 4);
    const auto g = assign_folds(permuted, 4);
    for (std::size_t i = 0; i < perm.size(); ++i) CHECK(g[i] == f[perm[i]]);
}

TEST_CASE("leave-one-out cross-fitting with constant learners") {
    const Dataset d = null_data(24, 0.5, 6);
    const std::size_t n = d.size();
    LearnerSpecs specs{LearnerSpec::constant(), LearnerSpec::constant(), 0.01};
    const auto cf = cross_fit(d, static_cast<int>(n), specs, 3);
    for (std::size_t i = 0; i < n; ++i) {
        double zsum = 0.0;
        std::array<double, 8> counts{};
        std::array<double, 2> arm{};
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            zsum += d.z[j];
            counts[PiVector::index(static_cast<int>(d.y[j]), d.a[j], d.z[j])] += 1.0;
            arm[static_cast<std::size_t>(d.z[j])] += 1.0;
        }
        const auto v = cf.evaluate(d, i);
        CHECK(v.lambda1 == doctest::Approx(zsum / static_cast<double>(n - 1)).epsilon(1e-12));
        for (std::size_t k = 0; k < 8; ++k)
            CHECK(v.pi.values[k] == doctest::Approx(counts[k] / arm[k % 2]).epsilon(1e-12));
    }
}

TEST_CASE("cross-fitting is deterministic and uses the out-of-fold model") {
    const Dataset d = gen_illustration(1500, 8);
    const LearnerSpecs specs{};
    const auto a = cross_fit(d, 5, specs, 42);
    const auto b = cross_fit(d, 5, specs, 42);
    CHECK(a.fold_assignment() == b.fold_assignment());
    const auto va = a.evaluate_all(d);
    const auto vb = b.evaluate_all(d, 3);
    for (std::size_t i = 0; i < d.size(); ++i) CHECK(same_value(va[i], vb[i]));

    for (std::size_t i = 0; i < d.size(); i += 97) {
        const auto& m = a.models(a.fold_of(i));
        const auto x = d.row(i);
        CHECK(va[i].lambda1 == m.propensity(x));
        CHECK(va[i].pi.values == PiVector::from_arms(m.arm0(x), m.arm1(x)).values);
    }
}

TEST_CASE("a training complement without an instrument arm names the fold") {
    Dataset d = null_data(10, 0.5, 9);
    std::fill(d.z.begin(), d.z.end(), 0);
    d.z[4] = 1;
    try {
        cross_fit(d, 10, LearnerSpecs{}, 1);
        FAIL("expected fold_failure");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::fold_failure);
        CHECK(std::string(e.what()).find("fold") != std::string::npos);
    }
}

TEST_CASE("oracle noise magnitude") {
    CHECK(2.25 * std::pow(5000.0, -0.5) <= 0.0319);
    const auto truth = margin_dgp::nuisance();
    const auto same = oracle_noisy_nuisance(truth, 5000, 0.5, 0.0, 1);
    for (double x : {0.05, 0.3, 0.5, 0.77, 0.99}) {
        const double row[1] = {x};
        const auto a = truth(row);
        const auto b = same(row);
        CHECK(same_value(a, b));
    }
    const auto noisy = oracle_noisy_nuisance(truth, 5000, 0.5, 2.25, 1);
    const double row[1] = {0.4};
    const auto v = noisy(row);
    for (std::size_t k = 0; k < 8; ++k)
        if (!truth.pi[k]) CHECK(v.pi.values[k] == 0.0);
    CHECK(v.lambda1 != truth(row).lambda1);
    CHECK(same_value(v, oracle_noisy_nuisance(truth, 5000, 0.5, 2.25, 1)(row)));
}

TEST_CASE("oracle noise rejects perturbing an exact 0 or 1") {
    ClosedFormNuisance truth = margin_dgp::nuisance();
    truth.pi[0] = [](std::span<const double>) { return 1.0; };
    const auto noisy = oracle_noisy_nuisance(truth, 500, 0.25, 2.25, 1);
    const double row[1] = {0.5};
    CHECK_THROWS_AS(noisy(row), Error);
}

TEST_CASE("oracle noise L2 error scales as n^-r") {
    const auto truth = margin_dgp::nuisance();
    const double r = 0.25;
    const std::vector<std::size_t> ns{500, 1000, 5000};
    std::vector<double> rms;
    for (std::size_t n : ns) {
        double total = 0.0;
        for (std::uint64_t seed = 1; seed <= 200; ++seed) {
            const auto noisy = oracle_noisy_nuisance(truth, n, r, 2.25, seed);
            double ss = 0.0;
            int count = 0;
            for (int g = 1; g < 100; ++g) {
                const double row[1] = {g / 100.0};
                const double diff = noisy(row).pi(0, 0, 0) - truth(row).pi(0, 0, 0);
                ss += diff * diff;
                ++count;
            }
            total += std::sqrt(ss / count);
        }
        rms.push_back(total / 200.0);
    }
    for (std::size_t i = 0; i + 1 < ns.size(); ++i) {
        const double observed = rms[i] / rms[i + 1];
        const double predicted = std::pow(static_cast<double>(ns[i + 1]) / static_cast<double>(ns[i]), r);
        CHECK(observed / predicted <= 1.5);
        CHECK(observed / predicted >= 1.0 / 1.5);
    }
}
