#pragma once

#include <stdexcept>
#include <string>

namespace nlmvs {

enum class ErrorCategory {
    Config,
    Format,
    Io,
    Numeric,
};

inline const char* to_string(ErrorCategory c) {
    switch (c) {
        case ErrorCategory::Config: return "config";
        case ErrorCategory::Format: return "format";
        case ErrorCategory::Io: return "io";
        case ErrorCategory::Numeric: return "numeric";
    }
    return "unknown";
}

class Error : public std::runtime_error {
  public:
    Error(ErrorCategory cat, const std::string& msg)
        : std::runtime_error(std::string(to_string(cat)) + ": " + msg), category_(cat) {}

    ErrorCategory category() const { return category_; }

  private:
    ErrorCategory category_;
};

} // namespace nlmvs
