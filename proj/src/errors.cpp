#include "spdcmap/errors.hpp"

namespace spdcmap {
namespace {

std::string join(const std::vector<std::string>& issues) {
  std::string out;
  for (const auto& issue : issues) {
    if (!out.empty()) out += "; ";
    out += issue;
  }
  return out;
}

} // namespace

ValidationError::ValidationError(std::vector<std::string> issues)
    : std::invalid_argument(join(issues)), issues_(std::move(issues)) {}

} // namespace spdcmap
