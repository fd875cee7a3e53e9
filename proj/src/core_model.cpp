#include "ivbounds/core_model.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "ivbounds/error.hpp"

namespace ivb {

PiVector PiVector::uniform() noexcept {
    PiVector pi;
    pi.values.fill(0.25);
    return pi;
}

PiVector PiVector::from_arms(const std::array<double, 4>& arm0,
                             const std::array<double, 4>& arm1) noexcept {
    PiVector pi;
    for (int y = 0; y < 2; ++y) {
        for (int a = 0; a < 2; ++a) {
            pi(y, a, 0) = arm0[static_cast<std::size_t>(2 * y + a)];
            pi(y, a, 1) = arm1[static_cast<std::size_t>(2 * y + a)];
        }
    }
    return pi;
}

PiVector PiVector::swapped_instrument() const noexcept {
    PiVector out;
    for (int y = 0; y < 2; ++y)
        for (int a = 0; a < 2; ++a)
            for (int z = 0; z < 2; ++z) out(y, a, z) = (*this)(y, a, 1 - z);
    return out;
}

PiVector PiVector::flipped_outcome() const noexcept {
    PiVector out;
    for (int y = 0; y < 2; ++y)
        for (int a = 0; a < 2; ++a)
            for (int z = 0; z < 2; ++z) out(y, a, z) = (*this)(1 - y, a, z);
    return out;
}

double PiVector::simplex_violation() const noexcept {
    double worst = 0.0;
    for (int z = 0; z < 2; ++z) {
        const double total = (*this)(0, 0, z) + (*this)(0, 1, z) + (*this)(1, 0, z) + (*this)(1, 1, z);
        worst = std::max(worst, std::fabs(total - 1.0));
    }
    return worst;
}

void PiVector::require_finite() const {
    for (double v : values) {
        if (!std::isfinite(v)) throw Error(ErrorCode::non_finite_input, "PiVector has a non-finite entry");
    }
}

ThetaVector lower_terms(const std::array<double, 8>& p, double c) noexcept {
    const double p00_0 = p[0], p00_1 = p[1], p01_0 = p[2], p01_1 = p[3];
    const double p10_0 = p[4], p10_1 = p[5], p11_0 = p[6], p11_1 = p[7];
    return {
        p11_1 + p00_0 - c,
        p11_0 + p00_1 - c,
        -p01_1 - p10_1,
        -p01_0 - p10_0,
        p11_0 - p11_1 - p10_1 - p01_0 - p10_0,
        p11_1 - p11_0 - p10_0 - p01_1 - p10_1,
        p00_1 - p01_1 - p10_1 - p01_0 - p00_0,
        p00_0 - p01_0 - p10_0 - p01_1 - p00_1,
    };
}

ThetaVector upper_terms(const std::array<double, 8>& p, double c) noexcept {
    const double p00_0 = p[0], p00_1 = p[1], p01_0 = p[2], p01_1 = p[3];
    const double p10_0 = p[4], p10_1 = p[5], p11_0 = p[6], p11_1 = p[7];
    return {
        c - (p01_1 + p10_0),
        c - (p01_0 + p10_1),
        p11_1 + p00_1,
        p11_0 + p00_0,
        -p01_0 + p01_1 + p00_1 + p11_0 + p00_0,
        -p01_1 + p01_0 + p00_0 + p11_1 + p00_1,
        -p10_1 + p11_1 + p00_1 + p11_0 + p10_0,
        -p10_0 + p11_0 + p00_0 + p11_1 + p10_1,
    };
}

ThetaVector theta_lower(const PiVector& pi) {
    pi.require_finite();
    return lower_terms(pi.values, 1.0);
}

ThetaVector theta_upper(const PiVector& pi) {
    pi.require_finite();
    return upper_terms(pi.values, 1.0);
}

std::size_t argmax_first(const ThetaVector& v) noexcept {
    std::size_t best = 0;
    for (std::size_t j = 1; j < v.size(); ++j)
        if (v[j] > v[best]) best = j;
    return best;
}

std::size_t argmin_first(const ThetaVector& v) noexcept {
    std::size_t best = 0;
    for (std::size_t j = 1; j < v.size(); ++j)
        if (v[j] < v[best]) best = j;
    return best;
}

ThetaProfile theta_profile(const PiVector& pi) {
    ThetaProfile profile;
    profile.lower = theta_lower(pi);
    profile.upper = theta_upper(pi);
    profile.d_lower = argmax_first(profile.lower);
    profile.d_upper = argmin_first(profile.upper);
    profile.gamma_lower = profile.lower[profile.d_lower];
    profile.gamma_upper = profile.upper[profile.d_upper];
    return profile;
}

NaturalBounds natural_bounds(const PiVector& pi) {
    return {theta_lower(pi)[0], theta_upper(pi)[0]};
}

void ResponseTypeLaw::validate() const {
    double total = 0.0;
    for (double v : q) {
        if (!std::isfinite(v) || v < 0.0)
            throw Error(ErrorCode::invalid_argument, "response-type probabilities must be finite and nonnegative");
        total += v;
    }
    if (std::fabs(total - 1.0) > 1e-9)
        throw Error(ErrorCode::invalid_argument, "response-type probabilities must sum to 1");
}

double ResponseTypeLaw::ate() const noexcept {
    double effect = 0.0;
    for (std::size_t u = 0; u < q.size(); ++u) effect += q[u] * (outcome(u, 1) - outcome(u, 0));
    return effect;
}

PiVector response_type_pi(const ResponseTypeLaw& law) {
    law.validate();
    PiVector pi;
    for (std::size_t u = 0; u < law.q.size(); ++u) {
        for (int z = 0; z < 2; ++z) {
            const int a = ResponseTypeLaw::exposure(u, z);
            pi(ResponseTypeLaw::outcome(u, a), a, z) += law.q[u];
        }
    }
    return pi;
}

namespace {

constexpr std::size_t kTypes = 16;
constexpr std::size_t kRows = 9;  // eight (y, a, z) cells plus total mass
constexpr std::size_t kRank = 7;  // each arm's four cells sum to the total mass

using Row = std::array<double, kTypes>;

std::array<Row, kRows> constraint_matrix() {
    std::array<Row, kRows> m{};
    for (std::size_t u = 0; u < kTypes; ++u) {
        for (int z = 0; z < 2; ++z) {
            const int a = ResponseTypeLaw::exposure(u, z);
            m[PiVector::index(ResponseTypeLaw::outcome(u, a), a, z)][u] = 1.0;
        }
        m[8][u] = 1.0;
    }
    return m;
}

// Inverts a small dense matrix in place by Gauss-Jordan with partial pivoting.
bool invert(std::vector<double>& a, std::size_t n) {
    std::vector<double> inv(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) inv[i * n + i] = 1.0;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::fabs(a[r * n + col]) > std::fabs(a[pivot * n + col])) pivot = r;
        if (std::fabs(a[pivot * n + col]) < 1e-9) return false;
        if (pivot != col) {
            for (std::size_t k = 0; k < n; ++k) {
                std::swap(a[pivot * n + k], a[col * n + k]);
                std::swap(inv[pivot * n + k], inv[col * n + k]);
            }
        }
        const double scale = 1.0 / a[col * n + col];
        for (std::size_t k = 0; k < n; ++k) {
            a[col * n + k] *= scale;
            inv[col * n + k] *= scale;
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = a[r * n + col];
            if (f == 0.0) continue;
            for (std::size_t k = 0; k < n; ++k) {
                a[r * n + k] -= f * a[col * n + k];
                inv[r * n + k] -= f * inv[col * n + k];
            }
        }
    }
    a = std::move(inv);
    return true;
}

struct Basis {
    std::array<std::size_t, kRank> columns;
    std::array<double, kRank * kRank> inverse;
};

struct BasisTable {
    std::array<Row, kRows> matrix;
    std::array<std::size_t, kRank> rows;  // an independent subset of the constraints
    std::vector<Basis> bases;
};

BasisTable build_basis_table() {
    BasisTable table;
    table.matrix = constraint_matrix();

    // Greedy row selection: keep a row when it is independent of those kept.
    std::vector<Row> echelon;
    std::size_t kept = 0;
    for (std::size_t r = 0; r < kRows && kept < kRank; ++r) {
        Row candidate = table.matrix[r];
        for (const Row& e : echelon) {
            std::size_t lead = 0;
            while (lead < kTypes && std::fabs(e[lead]) < 1e-12) ++lead;
            const double f = candidate[lead] / e[lead];
            for (std::size_t k = 0; k < kTypes; ++k) candidate[k] -= f * e[k];
        }
        bool independent = false;
        for (double v : candidate) independent = independent || std::fabs(v) > 1e-9;
        if (independent) {
            echelon.push_back(candidate);
            table.rows[kept++] = r;
        }
    }
    if (kept != kRank) throw Error(ErrorCode::invalid_argument, "response-type constraint rank mismatch");

    std::array<std::size_t, kRank> cols{};
    for (std::size_t i = 0; i < kRank; ++i) cols[i] = i;
    for (;;) {
        std::vector<double> block(kRank * kRank);
        for (std::size_t i = 0; i < kRank; ++i)
            for (std::size_t j = 0; j < kRank; ++j) block[i * kRank + j] = table.matrix[table.rows[i]][cols[j]];
        if (invert(block, kRank)) {
            Basis basis;
            basis.columns = cols;
            std::copy(block.begin(), block.end(), basis.inverse.begin());
            table.bases.push_back(basis);
        }
        // next combination in lexicographic order
        std::size_t i = kRank;
        while (i > 0 && cols[i - 1] == kTypes - kRank + (i - 1)) --i;
        if (i == 0) break;
        ++cols[i - 1];
        for (std::size_t j = i; j < kRank; ++j) cols[j] = cols[j - 1] + 1;
    }
    return table;
}

const BasisTable& basis_table() {
    static const BasisTable table = build_basis_table();
    return table;
}

}  // namespace

std::optional<SharpBounds> lp_sharp_bounds(const PiVector& pi) {
    pi.require_finite();
    constexpr double kTolerance = 1e-7;
    const BasisTable& table = basis_table();

    std::array<double, kRows> rhs{};
    std::copy(pi.values.begin(), pi.values.end(), rhs.begin());
    rhs[8] = 1.0;

    std::array<double, kTypes> effect{};
    for (std::size_t u = 0; u < kTypes; ++u)
        effect[u] = ResponseTypeLaw::outcome(u, 1) - ResponseTypeLaw::outcome(u, 0);

    bool feasible = false;
    SharpBounds bounds{0.0, 0.0};
    for (const Basis& basis : table.bases) {
        std::array<double, kRank> x{};
        bool nonnegative = true;
        for (std::size_t i = 0; i < kRank && nonnegative; ++i) {
            double v = 0.0;
            for (std::size_t j = 0; j < kRank; ++j) v += basis.inverse[i * kRank + j] * rhs[table.rows[j]];
            if (v < -kTolerance) nonnegative = false;
            x[i] = std::max(v, 0.0);
        }
        if (!nonnegative) continue;

        std::array<double, kTypes> q{};
        for (std::size_t i = 0; i < kRank; ++i) q[basis.columns[i]] = x[i];
        bool matches = true;
        for (std::size_t r = 0; r < kRows && matches; ++r) {
            double lhs = 0.0;
            for (std::size_t u = 0; u < kTypes; ++u) lhs += table.matrix[r][u] * q[u];
            matches = std::fabs(lhs - rhs[r]) <= kTolerance;
        }
        if (!matches) continue;

        double objective = 0.0;
        for (std::size_t u = 0; u < kTypes; ++u) objective += effect[u] * q[u];
        if (!feasible) {
            bounds = {objective, objective};
            feasible = true;
        } else {
            bounds.lower = std::min(bounds.lower, objective);
            bounds.upper = std::max(bounds.upper, objective);
        }
    }
    if (!feasible) return std::nullopt;
    return bounds;
}

}  // namespace ivb
