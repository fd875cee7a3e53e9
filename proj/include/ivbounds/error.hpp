#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ivb {

/// Machine-readable failure categories. The CLI maps these to exit codes and
/// echoes the name in its JSON error object.
enum class ErrorCode {
    invalid_argument = 2,
    non_finite_input = 3,
    empty_data = 4,
    malformed_numeric = 5,
    non_binary_value = 6,
    missing_value = 7,
    missing_column = 8,
    empty_file = 9,
    io_failure = 10,
    fit_failure = 11,
    fold_failure = 12,
    out_of_range = 13,
    mismatched_config = 14,
};

std::string_view error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace ivb
