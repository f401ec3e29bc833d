#pragma once

#include <stdexcept>
#include <string>

namespace amazonnet {

// Error taxonomy. Shape/contract/config violations are caller bugs; io and
// format errors come from the filesystem; numeric errors signal non-finite
// values escaping an operation.
struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ContractError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace amazonnet
