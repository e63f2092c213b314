#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "hdnet/config.hpp"
#include "hdnet/model.hpp"

namespace hdnet {

// Optimizer and schedule state carried across a resume. Batch seeds are a
// pure function of (config seed, step), so step + moments reproduce the
// training trajectory bit for bit.
struct TrainState {
    int step = 0;
    double best_val = 0.0;
    bool has_best = false;
    std::map<std::string, std::vector<double>> adam_m, adam_v;
};

// Binary container: "HDNETCK1" magic, a length-prefixed JSON header (config,
// tensor directory), then the named float64 payloads in directory order.
void save_checkpoint(const std::string& path, const Model& model, const ExperimentConfig& cfg,
                     const TrainState* state = nullptr);

// Rebuilds the model from the embedded config, then overwrites parameters and
// buffers from the payload. `state` is filled when the file carries one.
std::unique_ptr<Model> load_checkpoint(const std::string& path, ExperimentConfig* out_cfg,
                                       TrainState* out_state = nullptr);

}  // namespace hdnet
