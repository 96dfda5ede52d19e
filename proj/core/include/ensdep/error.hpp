#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ensdep {

/// Coarse failure classes. The CLI prints the category name on failure and
/// maps each one to a distinct exit code.
enum class ErrorCategory {
  config,    // bad configuration values or unknown keys
  io,        // filesystem failures
  format,    // malformed or unsupported file contents
  data,      // inputs that violate an operation's preconditions
  training,  // numerical failure during optimisation
};

std::string_view to_string(ErrorCategory category);

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

}  // namespace ensdep
