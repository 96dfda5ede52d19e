#include "ensdep/error.hpp"

namespace ensdep {

std::string_view to_string(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::config: return "config";
    case ErrorCategory::io: return "io";
    case ErrorCategory::format: return "format";
    case ErrorCategory::data: return "data";
    case ErrorCategory::training: return "training";
  }
  return "unknown";
}

}  // namespace ensdep
