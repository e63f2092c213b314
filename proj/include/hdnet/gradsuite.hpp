#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hdnet/gradcheck.hpp"

namespace hdnet {

struct GradSuiteEntry {
    std::string name;
    double max_rel_err = 0.0;
    bool pass = false;
};

// Finite-difference checks for every differentiable primitive plus a small
// end-to-end model composite. Deterministic for a fixed seed.
std::vector<GradSuiteEntry> run_gradient_suite(std::uint64_t seed);

bool gradient_suite_passed(const std::vector<GradSuiteEntry>& entries);

}  // namespace hdnet
