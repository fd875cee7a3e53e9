#include <cmath>
#include <set>
#include <vector>

#include "doctest.h"
#include "ivbounds/normal.hpp"
#include "ivbounds/rng.hpp"

using namespace ivb;

TEST_CASE("philox4x32-10 known-answer vectors") {
    // Random123 kat_vectors, philox4x32 with 10 rounds.
    CHECK(philox4x32_10({0, 0, 0, 0}, {0, 0}) ==
          std::array<std::uint32_t, 4>{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(philox4x32_10({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
          std::array<std::uint32_t, 4>{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(philox4x32_10({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
          std::array<std::uint32_t, 4>{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("streams are reproducible and distinct") {
    RandomStream a(42, stream_id({tags::replication, 3}));
    RandomStream b(42, stream_id({tags::replication, 3}));
    RandomStream c(42, stream_id({tags::replication, 4}));
    RandomStream d(43, stream_id({tags::replication, 3}));
    int same_c = 0, same_d = 0;
    for (int i = 0; i < 100; ++i) {
        const auto va = a(), vb = b(), vc = c(), vd = d();
        CHECK(va == vb);
        same_c += va == vc;
        same_d += va == vd;
    }
    CHECK(same_c == 0);
    CHECK(same_d == 0);
    CHECK(stream_id({1, 2}) != stream_id({2, 1}));
}

TEST_CASE("uniform_open never hits the endpoints and has the right mean") {
    RandomStream rng(7, 1);
    double sum = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform_open();
        REQUIRE(u > 0.0);
        REQUIRE(u < 1.0);
        sum += u;
    }
    CHECK(std::fabs(sum / n - 0.5) < 4.0 * std::sqrt(1.0 / 12.0 / n));
}

TEST_CASE("normal draws have unit variance") {
    RandomStream rng(11, 2);
    const int n = 200000;
    double s1 = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
        const double v = rng.normal();
        s1 += v;
        s2 += v * v;
    }
    CHECK(std::fabs(s1 / n) < 4.0 / std::sqrt(n));
    CHECK(std::fabs(s2 / n - 1.0) < 4.0 * std::sqrt(2.0 / n));
}

TEST_CASE("below is within range and hits all values") {
    RandomStream rng(5, 5);
    std::set<std::uint64_t> seen;
    for (int i = 0; i < 1000; ++i) {
        const auto v = rng.below(7);
        REQUIRE(v < 7);
        seen.insert(v);
    }
    CHECK(seen.size() == 7);
}

TEST_CASE("normal quantile matches reference values") {
    // Reference values from scipy.stats.norm.ppf.
    CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-12));
    CHECK(normal_quantile(0.5) == 0.0);
    CHECK(normal_quantile(0.95) == doctest::Approx(1.6448536269514722).epsilon(1e-12));
    CHECK(normal_quantile(0.995) == doctest::Approx(2.5758293035489004).epsilon(1e-12));
    CHECK(normal_quantile(1e-10) == doctest::Approx(-6.361340902404056).epsilon(1e-12));
    CHECK(normal_quantile(0.3) == doctest::Approx(-0.5244005127080409).epsilon(1e-12));
    CHECK(normal_quantile(0.999999) == doctest::Approx(4.753424308817087).epsilon(1e-11));
    CHECK(normal_critical(0.05) == doctest::Approx(1.959963984540054).epsilon(1e-12));
    CHECK_THROWS(normal_quantile(0.0));
    CHECK_THROWS(normal_critical(1.0));
}

TEST_CASE("normal quantile inverts the CDF") {
    for (double p = 0.001; p < 1.0; p += 0.0137) {
        CHECK(normal_cdf(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-12));
    }
}
