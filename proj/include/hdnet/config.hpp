#pragma once

#include <cstdint>
#include <string>

#include "hdnet/errors.hpp"
#include "hdnet/losses.hpp"
#include "hdnet/model.hpp"
#include "hdnet/synth.hpp"

namespace hdnet {

struct OptimConfig {
    double learning_rate = 1e-4;
    int batch_size = 16;
    int total_steps = 5000;
    double decay_factor = 0.8;
    int decay_interval = 500;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;

    void validate() const;
};

struct ExperimentConfig {
    ModelConfig model;
    GenConfig gen;
    LossWeights loss_weights;
    OptimConfig optimizer;
    std::uint64_t seed = 1;
    std::string out_dir = "runs/default";
    int train_scenes = 2000;  // fixed scene pool sampled during training
    int eval_scenes = 32;     // validation set size during training
    int log_interval = 50;

    void validate() const;
};

// Strict parsing: unknown keys raise an error naming the offending path, so
// typos in a config file fail loudly instead of training with defaults.
ExperimentConfig load_experiment_config(const std::string& path);
ExperimentConfig experiment_config_from_json(const std::string& json_text);
std::string experiment_config_to_json(const ExperimentConfig& cfg);

// FNV-1a hash of the canonical serialized form, hex-encoded.
std::string config_hash(const ExperimentConfig& cfg);

}  // namespace hdnet
