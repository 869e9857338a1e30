#pragma once

#include <string>
#include <vector>

namespace omda {

// One EM iterate: the norm of the location estimate, the variance estimate,
// and the KL divergence of the fitted mixture from N(0,I).
struct TraceEntry {
  int iteration;
  double theta_norm;
  double sigma_sq;
  double kl;
};

struct EmTrace {
  std::vector<TraceEntry> entries;
  std::string context;  // human-readable run descriptor
};

}  // namespace omda
