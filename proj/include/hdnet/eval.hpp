#pragma once

#include <map>
#include <string>
#include <vector>

#include "hdnet/config.hpp"
#include "hdnet/metrics.hpp"
#include "hdnet/model.hpp"
#include "hdnet/synth.hpp"

namespace hdnet {

struct EvalOptions {
    int num_scenes = 64;
    std::uint64_t seed = 12345;
    std::vector<double> ap_thresholds_mm = {250.0, 200.0, 150.0, 100.0};
    // empty selects every metric family; otherwise a subset of
    // {"mrpe", "ap", "pck"}
    std::vector<std::string> metrics;
    MatchMode match_mode = MatchMode::greedy;
};

// Localization metrics over generated scenes. Boxes come from the ground
// truth (a detector stand-in) and each predicted 3-d pose is the predicted
// root plus the ground-truth root-relative pose, so the pose metrics isolate
// localization quality.
std::map<std::string, double> evaluate_scenes(Model& model, const ExperimentConfig& cfg,
                                              const std::vector<SceneSample>& scenes,
                                              const EvalOptions& opts);

// Generates opts.num_scenes scenes from opts.seed, evaluates, and optionally
// writes a one-row CSV.
std::map<std::string, double> evaluate_model(Model& model, const ExperimentConfig& cfg,
                                             const EvalOptions& opts,
                                             const std::string& csv_path = "");

void write_metrics_csv(const std::map<std::string, double>& metrics, const std::string& path);

}  // namespace hdnet
