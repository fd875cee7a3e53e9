#include <cmath>
#include <vector>

#include "doctest.h"
#include "ivbounds/core_model.hpp"
#include "ivbounds/rng.hpp"

using namespace ivb;

namespace {

PiVector perfect_compliance() {
    PiVector pi;
    pi(1, 1, 1) = 1.0;
    pi(0, 0, 0) = 1.0;
    return pi;
}

PiVector margin_law(double x) {
    PiVector pi;
    pi(0, 0, 0) = 1.0 - x / 2.0;
    pi(1, 0, 0) = x / 2.0;
    pi(0, 1, 1) = 1.0 - (1.0 - x) / 2.0;
    pi(1, 1, 1) = (1.0 - x) / 2.0;
    return pi;
}

ResponseTypeLaw random_law(RandomStream& rng) {
    // Dirichlet(1,...,1) via normalized exponentials, sometimes sparse.
    ResponseTypeLaw law;
    double total = 0.0;
    const bool sparse = rng.uniform() < 0.3;
    for (double& q : law.q) {
        q = (sparse && rng.uniform() < 0.6) ? 0.0 : -std::log(rng.uniform_open());
        total += q;
    }
    if (total == 0.0) {
        law.q[rng.below(16)] = 1.0;
        return law;
    }
    for (double& q : law.q) q /= total;
    return law;
}

void check_theta(const ThetaVector& got, const ThetaVector& want) {
    for (std::size_t j = 0; j < 8; ++j) CHECK(got[j] == doctest::Approx(want[j]).epsilon(1e-15));
}

}  // namespace

TEST_CASE("theta_lower examples") {
    check_theta(theta_lower(perfect_compliance()), {1, -1, 0, 0, -1, 1, -1, 1});
    check_theta(theta_lower(PiVector::uniform()), {-0.5, -0.5, -0.5, -0.5, -0.75, -0.75, -0.75, -0.75});
    for (double x : {0.05, 0.2, 0.5, 0.9}) {
        const auto t = theta_lower(margin_law(x));
        CHECK(t[argmax_first(t)] == doctest::Approx(0.5 - x).epsilon(1e-14));
    }
}

TEST_CASE("theta_upper examples") {
    const auto pc = theta_upper(perfect_compliance());
    CHECK(pc[0] == 1.0);
    CHECK(pc[argmin_first(pc)] == 1.0);
    check_theta(theta_upper(PiVector::uniform()), {0.5, 0.5, 0.5, 0.5, 0.75, 0.75, 0.75, 0.75});
    for (double x : {0.05, 0.2, 0.5, 0.9}) {
        const auto t = theta_upper(margin_law(x));
        CHECK(t[argmin_first(t)] == doctest::Approx(0.5 - x).epsilon(1e-14));
    }
}

TEST_CASE("theta functions reject non-finite input") {
    PiVector pi = PiVector::uniform();
    pi(0, 1, 1) = std::nan("");
    CHECK_THROWS(theta_lower(pi));
    CHECK_THROWS(theta_upper(pi));
}

TEST_CASE("theta_profile examples") {
    const auto uni = theta_profile(PiVector::uniform());
    CHECK(uni.gamma_lower == -0.5);
    CHECK(uni.gamma_upper == 0.5);
    CHECK(uni.d_lower == 0);
    CHECK(uni.d_upper == 0);

    const auto pc = theta_profile(perfect_compliance());
    CHECK(pc.gamma_lower == 1.0);
    CHECK(pc.gamma_upper == 1.0);

    const auto m = theta_profile(margin_law(0.2));
    CHECK(m.gamma_lower == doctest::Approx(0.3).epsilon(1e-14));
    CHECK(m.gamma_upper == doctest::Approx(0.3).epsilon(1e-14));
    CHECK(m.lower[m.d_lower] == m.gamma_lower);
    CHECK(m.upper[m.d_upper] == m.gamma_upper);
}

TEST_CASE("natural bounds") {
    const auto uni = natural_bounds(PiVector::uniform());
    CHECK(uni.lower == -0.5);
    CHECK(uni.upper == 0.5);
    const auto pc = natural_bounds(perfect_compliance());
    CHECK(pc.lower == 1.0);
    CHECK(pc.upper == 1.0);
}

TEST_CASE("response_type_pi examples") {
    ResponseTypeLaw complier;
    complier.q[ResponseTypeLaw::type_index(0, 1, 0, 1)] = 1.0;
    const auto pc = response_type_pi(complier);
    CHECK(pc.values == perfect_compliance().values);

    ResponseTypeLaw uniform;
    uniform.q.fill(1.0 / 16.0);
    for (double v : response_type_pi(uniform).values) CHECK(v == 0.25);

    // Defier harmed by exposure: treated under z = 0 with Y(1) = 0, untreated
    // under z = 1 with Y(0) = 1.
    ResponseTypeLaw defier;
    defier.q[ResponseTypeLaw::type_index(1, 0, 1, 0)] = 1.0;
    const auto d = response_type_pi(defier);
    CHECK(d(0, 1, 0) == 1.0);
    CHECK(d(1, 0, 1) == 1.0);
    CHECK(d.simplex_violation() == 0.0);

    ResponseTypeLaw defier_always_one;
    defier_always_one.q[ResponseTypeLaw::type_index(1, 0, 1, 1)] = 1.0;
    const auto d1 = response_type_pi(defier_always_one);
    CHECK(d1(1, 1, 0) == 1.0);
    CHECK(d1(1, 0, 1) == 1.0);

    ResponseTypeLaw bad;
    bad.q[0] = 0.5;
    CHECK_THROWS(response_type_pi(bad));
}

TEST_CASE("lp_sharp_bounds examples") {
    const auto uni = lp_sharp_bounds(PiVector::uniform());
    REQUIRE(uni.has_value());
    CHECK(uni->lower == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(uni->upper == doctest::Approx(0.5).epsilon(1e-12));

    const auto pc = lp_sharp_bounds(perfect_compliance());
    REQUIRE(pc.has_value());
    CHECK(pc->lower == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(pc->upper == doctest::Approx(1.0).epsilon(1e-12));

    // Always untreated in both arms, yet Y differs across arms: Y(0) cannot be
    // both 0 and 1, so no response-type law reproduces this.
    PiVector violation;
    violation(0, 0, 0) = 1.0;
    violation(1, 0, 1) = 1.0;
    CHECK_FALSE(lp_sharp_bounds(violation).has_value());

    // Complier with Y(0) = Y(1) = 1 is the unique matching law: ATE = 0.
    PiVector always_one;
    always_one(1, 1, 1) = 1.0;
    always_one(1, 0, 0) = 1.0;
    const auto ao = lp_sharp_bounds(always_one);
    REQUIRE(ao.has_value());
    CHECK(std::fabs(ao->lower) < 1e-12);
    CHECK(std::fabs(ao->upper) < 1e-12);

    // Arms with different total mass are not an observed-data law.
    PiVector unbalanced = PiVector::uniform();
    unbalanced(0, 0, 1) = 0.3;
    CHECK_FALSE(lp_sharp_bounds(unbalanced).has_value());
}

TEST_CASE("closed-form bounds are valid and tight over random response-type laws") {
    RandomStream rng(2024, stream_id({tags::property_check, 1}));
    for (int draw = 0; draw < 300; ++draw) {
        const ResponseTypeLaw law = random_law(rng);
        const PiVector pi = response_type_pi(law);
        CHECK(pi.simplex_violation() < 1e-12);
        const auto profile = theta_profile(pi);
        const double ate = law.ate();
        CHECK(profile.gamma_lower <= ate + 1e-12);
        CHECK(ate <= profile.gamma_upper + 1e-12);
        const auto lp = lp_sharp_bounds(pi);
        REQUIRE(lp.has_value());
        CHECK(std::fabs(lp->lower - profile.gamma_lower) <= 1e-8);
        CHECK(std::fabs(lp->upper - profile.gamma_upper) <= 1e-8);

        const auto natural = natural_bounds(pi);
        CHECK(natural.lower == profile.lower[0]);
        CHECK(natural.upper == profile.upper[0]);
        CHECK(natural.lower <= profile.gamma_lower);
        CHECK(profile.gamma_upper <= natural.upper);
    }
}

TEST_CASE("instrument relabeling swaps theta indices pairwise") {
    RandomStream rng(9, stream_id({tags::property_check, 2}));
    for (int draw = 0; draw < 200; ++draw) {
        const PiVector pi = response_type_pi(random_law(rng));
        const PiVector swapped = pi.swapped_instrument();
        const auto lo = theta_lower(pi), lo_s = theta_lower(swapped);
        const auto up = theta_upper(pi), up_s = theta_upper(swapped);
        for (std::size_t j = 0; j < 8; j += 2) {
            CHECK(lo[j] == doctest::Approx(lo_s[j + 1]).epsilon(1e-14));
            CHECK(lo[j + 1] == doctest::Approx(lo_s[j]).epsilon(1e-14));
            CHECK(up[j] == doctest::Approx(up_s[j + 1]).epsilon(1e-14));
            CHECK(up[j + 1] == doctest::Approx(up_s[j]).epsilon(1e-14));
        }
        const auto p = theta_profile(pi), ps = theta_profile(swapped);
        CHECK(p.gamma_lower == doctest::Approx(ps.gamma_lower).epsilon(1e-14));
        CHECK(p.gamma_upper == doctest::Approx(ps.gamma_upper).epsilon(1e-14));
    }
}

TEST_CASE("outcome complement negates and exchanges the templates exactly") {
    RandomStream rng(10, stream_id({tags::property_check, 3}));
    for (int draw = 0; draw < 200; ++draw) {
        std::array<double, 8> p{};
        for (double& v : p) v = rng.uniform(-3.0, 3.0);
        PiVector pi{p};
        const auto lo_flip = lower_terms(pi.flipped_outcome().values, 1.0);
        const auto up = upper_terms(p, 1.0);
        const auto lo_flip0 = lower_terms(pi.flipped_outcome().values, 0.0);
        const auto up0 = upper_terms(p, 0.0);
        for (std::size_t j = 0; j < 8; ++j) {
            CHECK(up[j] == -lo_flip[j]);
            CHECK(up0[j] == -lo_flip0[j]);
        }
    }
}

TEST_CASE("bounds are convex/concave under mixing") {
    RandomStream rng(12, stream_id({tags::property_check, 4}));
    for (int draw = 0; draw < 200; ++draw) {
        const int k = 2 + static_cast<int>(rng.below(4));
        PiVector mixture;
        double weight_total = 0.0, mixed_lower = 0.0, mixed_upper = 0.0;
        std::vector<double> weights;
        for (int i = 0; i < k; ++i) weights.push_back(rng.uniform_open());
        for (double w : weights) weight_total += w;
        for (int i = 0; i < k; ++i) {
            const double w = weights[static_cast<std::size_t>(i)] / weight_total;
            const PiVector pi = response_type_pi(random_law(rng));
            for (std::size_t c = 0; c < 8; ++c) mixture.values[c] += w * pi.values[c];
            const auto prof = theta_profile(pi);
            mixed_lower += w * prof.gamma_lower;
            mixed_upper += w * prof.gamma_upper;
        }
        const auto pooled = theta_profile(mixture);
        CHECK(pooled.gamma_lower <= mixed_lower + 1e-12);
        CHECK(pooled.gamma_upper >= mixed_upper - 1e-12);
    }
}
