#pragma once

#include <string>
#include <vector>

namespace artauth::harness {

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

// Toy-scale property suite: kernel backend equivalence, gradient checks,
// window/shift round trips, mask correctness, a shifted-window oracle probe,
// parameter counts, the shape ladder, patch-grid geometry, resampling
// identities, container round trip and plan determinism.
std::vector<CheckResult> run_selfchecks();

}  // namespace artauth::harness
