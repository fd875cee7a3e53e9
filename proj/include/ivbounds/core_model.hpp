#pragma once

// Balke-Pearl bound algebra for a binary instrument, exposure and outcome.
//
// Conventions used throughout the library:
//   * PiVector stores pi_{ya.z} = P(Y=y, A=a | X, Z=z) at flat index 4y + 2a + z.
//   * ThetaVector slot j (0-based) holds theta_{j+1}; the eight slots follow the
//     textbook display order of the lower and upper bound terms, and every
//     argmax/argmin bookkeeping step (d_lower, d_upper) refers to these slots.

#include <array>
#include <cstddef>
#include <optional>
#include <utility>

namespace ivb {

struct PiVector {
    std::array<double, 8> values{};

    static constexpr std::size_t index(int y, int a, int z) noexcept {
        return static_cast<std::size_t>(4 * y + 2 * a + z);
    }
    double& operator()(int y, int a, int z) noexcept { return values[index(y, a, z)]; }
    double operator()(int y, int a, int z) const noexcept { return values[index(y, a, z)]; }

    static PiVector uniform() noexcept;
    /// Builds a PiVector from the two per-arm 4-simplices, each ordered
    /// (00, 01, 10, 11) in (y, a).
    static PiVector from_arms(const std::array<double, 4>& arm0,
                              const std::array<double, 4>& arm1) noexcept;

    /// Relabels the instrument (z <-> 1 - z).
    PiVector swapped_instrument() const noexcept;
    /// Complements the outcome (y <-> 1 - y).
    PiVector flipped_outcome() const noexcept;

    /// max_z |sum_{y,a} pi_{ya.z} - 1|
    double simplex_violation() const noexcept;
    /// Throws if any entry is non-finite.
    void require_finite() const;
};

using ThetaVector = std::array<double, 8>;

/// Lower-bound template: with constant = 1 these are theta_{l,1..8}; with
/// constant = 0 and psi values in place of pi they are the influence-function
/// contributions L_1..L_8.
ThetaVector lower_terms(const std::array<double, 8>& p, double constant) noexcept;
/// Upper-bound template (theta_u with constant = 1, U_j with constant = 0).
/// Written so that upper_terms(p, c)[j] == -lower_terms(flip_y(p), c)[j] holds
/// bit-for-bit, which keeps outcome complementation exact downstream.
ThetaVector upper_terms(const std::array<double, 8>& p, double constant) noexcept;

ThetaVector theta_lower(const PiVector& pi);
ThetaVector theta_upper(const PiVector& pi);

/// Smallest index attaining the maximum / minimum.
std::size_t argmax_first(const ThetaVector& v) noexcept;
std::size_t argmin_first(const ThetaVector& v) noexcept;

struct ThetaProfile {
    ThetaVector lower{};
    ThetaVector upper{};
    double gamma_lower = 0.0;
    double gamma_upper = 0.0;
    std::size_t d_lower = 0;  // 0-based slot of theta_lower attaining gamma_lower
    std::size_t d_upper = 0;  // 0-based slot of theta_upper attaining gamma_upper
};

ThetaProfile theta_profile(const PiVector& pi);

struct NaturalBounds {
    double lower;
    double upper;
};

/// Manski/Robins natural bounds; these coincide with slot 0 of each template.
NaturalBounds natural_bounds(const PiVector& pi);

/// Joint law of the 16 response types ((A(0), A(1)), (Y(0), Y(1))). Type u has
/// A(0) = bit 0, A(1) = bit 1, Y(0) = bit 2, Y(1) = bit 3.
struct ResponseTypeLaw {
    std::array<double, 16> q{};

    static constexpr int exposure(std::size_t type, int z) noexcept {
        return static_cast<int>((type >> (z == 0 ? 0 : 1)) & 1u);
    }
    static constexpr int outcome(std::size_t type, int a) noexcept {
        return static_cast<int>((type >> (a == 0 ? 2 : 3)) & 1u);
    }
    static constexpr std::size_t type_index(int a0, int a1, int y0, int y1) noexcept {
        return static_cast<std::size_t>(a0 | (a1 << 1) | (y0 << 2) | (y1 << 3));
    }

    /// Throws unless q is a probability vector (tolerance 1e-9 on the total).
    void validate() const;
    /// E[Y(1) - Y(0)] under this law.
    double ate() const noexcept;
};

/// Observed-data law implied by a response-type law (instrument independent of
/// types, exclusion restriction built in).
PiVector response_type_pi(const ResponseTypeLaw& law);

struct SharpBounds {
    double lower;
    double upper;
};

/// Minimizes and maximizes the ATE over all response-type laws reproducing `pi`
/// by enumerating the basic feasible solutions of the 16-variable equality
/// system. Returns nullopt when no law matches pi within 1e-7.
std::optional<SharpBounds> lp_sharp_bounds(const PiVector& pi);

}  // namespace ivb
