#pragma once

#include <functional>
#include <string>
#include <vector>

#include "hdnet/tape.hpp"
#include "hdnet/tensor.hpp"

namespace hdnet {

struct GradCheckResult {
    double max_rel_err = 0.0;
    bool pass = false;
    std::string worst;  // "leaf <i> coord <k>" of the worst coordinate
};

// Builds a scalar loss from the given leaves; must be deterministic.
using GraphBuilder = std::function<Tensor(Tape&, std::vector<Tensor>&)>;

// Central finite differences against the tape's analytic gradients.
// Relative error per coordinate: |analytic - numeric| / max(1, |numeric|).
// When max_coords_per_leaf > 0, only an evenly strided subset of each
// leaf's coordinates is probed numerically.
GradCheckResult gradient_check(const GraphBuilder& builder, std::vector<Tensor> point,
                               double step, double tolerance, int max_coords_per_leaf = -1);

}  // namespace hdnet
