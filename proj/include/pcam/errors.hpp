#pragma once

#include <stdexcept>
#include <string>

namespace pcam {

// File/format problems: bad headers, truncated payloads, missing dirs.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// NaN/Inf surfaced from a computation that must stay finite.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace pcam
