#pragma once

#include <stdexcept>
#include <string>

namespace lexfly {

// Shape disagreement between operands (message names both shapes).
struct ShapeError : std::runtime_error {
  explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

// Out-of-range index (embedding ids, span positions, ...).
struct IndexError : std::runtime_error {
  explicit IndexError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input file; message carries the line number.
struct ParseError : std::runtime_error {
  explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

// Violated call contract (empty input where nonempty required, non-scalar
// loss, mismatched sequence lengths, ...).
struct ContractError : std::runtime_error {
  explicit ContractError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace lexfly
