#pragma once

#include <stdexcept>
#include <string>

namespace ope::detail {

/// Precondition check; throws std::invalid_argument with `message` when
/// `cond` is false. All public entry points funnel input validation
/// through this so misuse surfaces as one exception type.
inline void require(bool cond, const std::string& message) {
  if (!cond) throw std::invalid_argument(message);
}

}  // namespace ope::detail
