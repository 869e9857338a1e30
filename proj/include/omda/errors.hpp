#pragma once

#include <stdexcept>
#include <string>

namespace omda {

// Raised when an EM variance update would go nonpositive.  Clamping would
// silently leave the regime the estimator is defined on, so callers either
// handle the failure or abort the run.
class DegenerateVarianceError : public std::runtime_error {
 public:
  explicit DegenerateVarianceError(const std::string& what, int iteration = -1)
      : std::runtime_error(what), iteration_(iteration) {}

  // EM iteration at which the degeneracy occurred, or -1 if outside a run.
  int iteration() const { return iteration_; }

 private:
  int iteration_;
};

}  // namespace omda
