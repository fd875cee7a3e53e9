#include "ivbounds/checks.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ivbounds/lse.hpp"

namespace ivb {

ResponseTypeLaw random_response_law(RandomStream& rng) {
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

namespace {

class Tally {
public:
    explicit Tally(std::string name) { result_.name = std::move(name); }

    void expect(bool ok, const std::string& what) {
        ++result_.cases;
        if (ok) return;
        ++result_.failures;
        result_.passed = false;
        if (result_.detail.empty()) result_.detail = what;
    }

    CheckResult done() { return std::move(result_); }

private:
    CheckResult result_;
};

std::string describe(const char* label, double got, double want) {
    std::ostringstream out;
    out.precision(17);
    out << label << ": got " << got << ", expected " << want;
    return out.str();
}

}  // namespace

std::vector<CheckResult> run_checks(std::size_t draws, std::uint64_t seed) {
    std::vector<CheckResult> results;

    {
        Tally lp("lp_tightness"), natural("natural_bounds"), swap("instrument_relabel"), flip("outcome_complement");
        RandomStream rng(seed, stream_id({tags::property_check, 100}));
        for (std::size_t d = 0; d < draws; ++d) {
            const ResponseTypeLaw law = random_response_law(rng);
            const PiVector pi = response_type_pi(law);
            const ThetaProfile prof = theta_profile(pi);
            const auto sharp = lp_sharp_bounds(pi);
            lp.expect(sharp.has_value(), "response-type law judged infeasible");
            if (sharp) {
                lp.expect(std::fabs(sharp->lower - prof.gamma_lower) <= 1e-8,
                          describe("lower", prof.gamma_lower, sharp->lower));
                lp.expect(std::fabs(sharp->upper - prof.gamma_upper) <= 1e-8,
                          describe("upper", prof.gamma_upper, sharp->upper));
            }
            const double ate = law.ate();
            lp.expect(prof.gamma_lower <= ate + 1e-12 && ate <= prof.gamma_upper + 1e-12,
                      describe("ate outside bounds", ate, prof.gamma_lower));

            const NaturalBounds nb = natural_bounds(pi);
            natural.expect(nb.lower == prof.lower[0] && nb.upper == prof.upper[0], "natural bounds differ from slot 0");
            natural.expect(nb.lower <= prof.gamma_lower && prof.gamma_lower <= prof.gamma_upper &&
                               prof.gamma_upper <= nb.upper,
                           "natural bounds do not contain the sharp bounds");

            const ThetaProfile swapped = theta_profile(pi.swapped_instrument());
            swap.expect(std::fabs(swapped.gamma_lower - prof.gamma_lower) <= 1e-14 &&
                            std::fabs(swapped.gamma_upper - prof.gamma_upper) <= 1e-14,
                        "relabeling the instrument changed the bounds");

            const ThetaVector lo_flip = theta_lower(pi.flipped_outcome());
            bool exact = true;
            for (std::size_t j = 0; j < 8; ++j) exact = exact && prof.upper[j] == -lo_flip[j];
            flip.expect(exact, "theta_u(pi) != -theta_l(flip(pi))");
        }
        results.push_back(lp.done());
        results.push_back(natural.done());
        results.push_back(swap.done());
        results.push_back(flip.done());
    }

    {
        Tally sandwich("lse_sandwich"), grad("lse_gradient"), hess("lse_hessian");
        RandomStream rng(seed, stream_id({tags::property_check, 101}));
        for (std::size_t d = 0; d < draws; ++d) {
            std::vector<double> v(8);
            for (double& e : v) e = rng.uniform(-1.0, 1.0);
            const double t = std::exp(rng.uniform(std::log(0.1), std::log(350.0)));
            const double top = *std::max_element(v.begin(), v.end());
            const double g = lse(v, t), excess = lse_excess(v, t);
            sandwich.expect(excess > 0.0 && excess <= std::log(8.0) / t && g >= top && g <= top + std::log(8.0) / t,
                            describe("sandwich", g, top));
            const double lo = lse_min(v, t), bottom = *std::min_element(v.begin(), v.end());
            sandwich.expect(lo <= bottom && lo >= bottom - std::log(8.0) / t, describe("min sandwich", lo, bottom));

            const double tg = std::exp(rng.uniform(std::log(0.5), std::log(20.0)));
            const auto p = lse_grad(v, tg);
            const auto h = lse_hess(v, tg);
            const double step = 1e-5;
            for (std::size_t j = 0; j < 8; ++j) {
                auto up = v, down = v;
                up[j] += step;
                down[j] -= step;
                const double fd = (lse(up, tg) - lse(down, tg)) / (2 * step);
                grad.expect(std::fabs(fd - p[j]) <= 1e-6, describe("gradient", p[j], fd));
                const auto pu = lse_grad(up, tg), pd = lse_grad(down, tg);
                double row = 0.0;
                for (std::size_t k = 0; k < 8; ++k) {
                    const double fdh = (pu[k] - pd[k]) / (2 * step);
                    hess.expect(std::fabs(fdh - h[k * 8 + j]) <= 1e-5, describe("hessian", h[k * 8 + j], fdh));
                    hess.expect(h[j * 8 + k] == h[k * 8 + j], "hessian not symmetric");
                    row += h[j * 8 + k];
                }
                hess.expect(std::fabs(row) <= 1e-12 * tg, describe("hessian row sum", row, 0.0));
            }
            // Positive semidefinite: u^T H u >= 0 for random directions.
            for (int trial = 0; trial < 4; ++trial) {
                std::vector<double> u(8);
                for (double& e : u) e = rng.normal();
                double quad = 0.0;
                for (std::size_t a = 0; a < 8; ++a)
                    for (std::size_t b = 0; b < 8; ++b) quad += u[a] * h[a * 8 + b] * u[b];
                hess.expect(quad >= -1e-12 * tg, describe("quadratic form", quad, 0.0));
            }
        }
        results.push_back(sandwich.done());
        results.push_back(grad.done());
        results.push_back(hess.done());
    }
    return results;
}

}  // namespace ivb
