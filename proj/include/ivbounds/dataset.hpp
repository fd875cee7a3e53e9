#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace ivb {

enum class OutcomeKind { binary, bounded };

/// Observations (x, z, a, y, w) stored column-wise; covariates row-major.
struct Dataset {
    std::size_t dims = 0;
    std::vector<std::string> covariate_names;
    std::vector<double> x;
    std::vector<int> z;
    std::vector<int> a;
    std::vector<double> y;
    std::vector<double> w;
    OutcomeKind outcome_kind = OutcomeKind::binary;

    Dataset() = default;
    explicit Dataset(std::size_t covariate_dims, std::vector<std::string> names = {});

    std::size_t size() const noexcept { return z.size(); }
    bool empty() const noexcept { return z.empty(); }
    std::span<const double> row(std::size_t i) const noexcept {
        return {x.data() + i * dims, dims};
    }

    void add_row(std::span<const double> covariates, int instrument, int exposure, double outcome,
                 double weight = 1.0);
    void reserve(std::size_t n);

    /// Throws ivb::Error describing the first violated invariant.
    void validate() const;

    Dataset subset(std::span<const std::size_t> rows) const;
    /// Rows with the given instrument value.
    std::vector<std::size_t> arm_rows(int instrument) const;
    bool weighted() const noexcept;
    /// Weights rescaled to sum to one.
    std::vector<double> normalized_weights() const;
};

}  // namespace ivb
