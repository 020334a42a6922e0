#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace nst {

// Finite-difference self-check of every backward path at desk scale, with
// seeded random weights and inputs, all in double precision.

struct GradcheckSettings {
  std::uint64_t seed = 1;
  double step = 1e-4;       // central-difference perturbation
  std::size_t pixels = 30;  // probed input pixels for the full objective
  std::size_t size = 16;    // full-objective input is 3 x size x size
  double tolerance = 1e-3;
};

struct GradcheckCase {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t probes = 0;
  bool passed = false;
};

struct GradcheckReport {
  std::vector<GradcheckCase> cases;
  bool passed() const;
};

GradcheckReport run_gradcheck(const GradcheckSettings& settings);

}  // namespace nst
