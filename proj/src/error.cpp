#include "ivbounds/error.hpp"

namespace ivb {

std::string_view error_code_name(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::invalid_argument: return "invalid_argument";
        case ErrorCode::non_finite_input: return "non_finite_input";
        case ErrorCode::empty_data: return "empty_data";
        case ErrorCode::malformed_numeric: return "malformed_numeric";
        case ErrorCode::non_binary_value: return "non_binary_value";
        case ErrorCode::missing_value: return "missing_value";
        case ErrorCode::missing_column: return "missing_column";
        case ErrorCode::empty_file: return "empty_file";
        case ErrorCode::io_failure: return "io_failure";
        case ErrorCode::fit_failure: return "fit_failure";
        case ErrorCode::fold_failure: return "fold_failure";
        case ErrorCode::out_of_range: return "out_of_range";
        case ErrorCode::mismatched_config: return "mismatched_config";
    }
    return "unknown";
}

}  // namespace ivb
