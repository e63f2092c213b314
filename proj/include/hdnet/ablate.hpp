#pragma once

#include <map>
#include <string>
#include <vector>

#include "hdnet/config.hpp"

namespace hdnet {

struct AblateRow {
    std::string variant;
    std::uint64_t seed = 0;
    std::string hash;  // config hash of the trained run
    double val_rel_err = 0.0;
    double mrpe = 0.0;
    bool diverged = false;
};

struct AblateSummary {
    std::string variant;
    double mean_val_rel_err = 0.0, std_val_rel_err = 0.0;
    double mean_mrpe = 0.0, std_mrpe = 0.0;
    int diverged_runs = 0;
};

struct AblateResult {
    std::vector<AblateRow> rows;
    std::vector<AblateSummary> summaries;  // ordered as `variants`
};

// Trains base-config copies per (variant, seed), evaluates each, and writes
// ablation.csv (per-run rows) plus ablation_summary.csv (mean/std) under
// out_dir. A diverged run is recorded, not fatal.
AblateResult run_ablation(const ExperimentConfig& base, const std::vector<std::string>& variants,
                          const std::vector<std::uint64_t>& seeds, const std::string& out_dir);

}  // namespace hdnet
