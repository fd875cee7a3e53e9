#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ivbounds/dataset.hpp"

namespace ivb {

struct ColumnMapping {
    std::vector<std::string> covariates;  // empty: every column not mapped below
    std::string instrument = "Z";
    std::string exposure = "A";
    std::string outcome = "Y";
    std::optional<std::string> weight;
    OutcomeKind outcome_kind = OutcomeKind::binary;
};

/// Reads a comma-separated file with a header row. Data rows are numbered from
/// 1 (the header is not counted) in error messages. Empty fields and "NA" are
/// missing values and are rejected.
Dataset load_csv(const std::string& path, const ColumnMapping& mapping);
Dataset parse_csv(const std::string& text, const ColumnMapping& mapping);

/// Writes covariates, Z, A, Y and (when weighted) W with round-trip precision.
std::string to_csv(const Dataset& data);
void write_text(const std::string& path, const std::string& text);

}  // namespace ivb
