#include "ivbounds/dataset.hpp"

#include <cmath>
#include <string>

#include "ivbounds/error.hpp"

namespace ivb {

Dataset::Dataset(std::size_t covariate_dims, std::vector<std::string> names)
    : dims(covariate_dims), covariate_names(std::move(names)) {
    if (covariate_names.empty()) {
        for (std::size_t j = 0; j < dims; ++j) covariate_names.push_back("X" + std::to_string(j + 1));
    }
    if (covariate_names.size() != dims)
        throw Error(ErrorCode::invalid_argument, "covariate name count does not match dimension");
}

void Dataset::add_row(std::span<const double> covariates, int instrument, int exposure,
                      double outcome, double weight) {
    if (covariates.size() != dims)
        throw Error(ErrorCode::invalid_argument, "covariate row has wrong dimension");
    x.insert(x.end(), covariates.begin(), covariates.end());
    z.push_back(instrument);
    a.push_back(exposure);
    y.push_back(outcome);
    w.push_back(weight);
}

void Dataset::reserve(std::size_t n) {
    x.reserve(n * dims);
    z.reserve(n);
    a.reserve(n);
    y.reserve(n);
    w.reserve(n);
}

void Dataset::validate() const {
    const std::size_t n = size();
    if (a.size() != n || y.size() != n || w.size() != n || x.size() != n * dims)
        throw Error(ErrorCode::invalid_argument, "dataset columns have inconsistent lengths");
    for (std::size_t i = 0; i < n; ++i) {
        const std::string where = " (row " + std::to_string(i + 1) + ")";
        for (double v : row(i))
            if (!std::isfinite(v)) throw Error(ErrorCode::non_finite_input, "non-finite covariate" + where);
        if (z[i] != 0 && z[i] != 1) throw Error(ErrorCode::non_binary_value, "instrument must be 0/1" + where);
        if (a[i] != 0 && a[i] != 1) throw Error(ErrorCode::non_binary_value, "exposure must be 0/1" + where);
        if (!std::isfinite(y[i])) throw Error(ErrorCode::non_finite_input, "non-finite outcome" + where);
        if (outcome_kind == OutcomeKind::binary && y[i] != 0.0 && y[i] != 1.0)
            throw Error(ErrorCode::non_binary_value, "binary outcome must be 0/1" + where);
        if (!(w[i] > 0.0) || !std::isfinite(w[i]))
            throw Error(ErrorCode::out_of_range, "weights must be strictly positive" + where);
    }
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
    Dataset out(dims, covariate_names);
    out.outcome_kind = outcome_kind;
    out.reserve(rows.size());
    for (std::size_t i : rows) out.add_row(row(i), z[i], a[i], y[i], w[i]);
    return out;
}

std::vector<std::size_t> Dataset::arm_rows(int instrument) const {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < size(); ++i)
        if (z[i] == instrument) rows.push_back(i);
    return rows;
}

bool Dataset::weighted() const noexcept {
    for (double v : w)
        if (v != 1.0) return true;
    return false;
}

std::vector<double> Dataset::normalized_weights() const {
    double total = 0.0;
    for (double v : w) total += v;
    std::vector<double> out(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) out[i] = w[i] / total;
    return out;
}

}  // namespace ivb
