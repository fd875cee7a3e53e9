#pragma once

// Self-checks run by `ivbounds check`: the closed-form bounds against the
// linear-programming oracle plus algebraic and smoothing invariants.

#include <cstdint>
#include <string>
#include <vector>

#include "ivbounds/core_model.hpp"
#include "ivbounds/rng.hpp"

namespace ivb {

/// Dirichlet(1) law over the 16 response types; about 30% of draws zero out
/// most types to reach the faces of the simplex.
ResponseTypeLaw random_response_law(RandomStream& rng);

struct CheckResult {
    std::string name;
    bool passed = true;
    std::size_t cases = 0;
    std::size_t failures = 0;
    std::string detail;  // first failure, if any
};

std::vector<CheckResult> run_checks(std::size_t draws, std::uint64_t seed);

}  // namespace ivb
