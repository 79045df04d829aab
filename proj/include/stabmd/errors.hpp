#pragma once

#include <stdexcept>

namespace stabmd {

// Invalid input, configuration, or file content. CLI exit code 2.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// NaN/Inf encountered during integration or training. CLI exit code 3.
// This is a numerical abort, not a stability event.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Neighbor-list overflow: more pairs within the cutoff than the capacity cap.
struct CapacityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Reweighting weights collapsed or the effective-sample-size floor was not
// met. CLI exit code 4.
struct DegenerateReweightError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace stabmd
