#pragma once

#include <string>
#include <vector>

#include "hdnet/checkpoint.hpp"
#include "hdnet/config.hpp"
#include "hdnet/model.hpp"
#include "hdnet/synth.hpp"

namespace hdnet {

// Deterministic per-sample seed; training batches are a pure function of
// (config seed, step, sample index), which makes resumes bit-exact.
std::uint64_t sample_seed(std::uint64_t cfg_seed, int step, int sample);

struct Batch {
    Tensor images;        // [B,3,P,P]
    Tensor hm_target;     // [B,J,h,h]
    Tensor pose_target;   // [B,J,2] heatmap cells
    Tensor bin_target;    // [B,N_B]
    Tensor b_target;      // [B,1] real-valued bin coordinate
    Tensor dhat_target;   // [B,1] normalized depth
    std::vector<BBox> boxes;  // heatmap cells
    std::vector<std::uint64_t> seeds;
};

Batch build_batch(const ExperimentConfig& cfg, int step);

struct StepStats {
    int step = 0;
    double lr = 0.0, total = 0.0, hm = 0.0, pose = 0.0, bins = 0.0, idx = 0.0;
    double val_rel_err = -1.0;  // median relative root-depth error; -1 when skipped
};

struct TrainResult {
    std::vector<StepStats> history;
    double final_val_rel_err = 0.0;
    std::string final_ckpt, best_ckpt;
};

// Runs the full schedule, logging to out_dir/train_log.csv and writing
// last/best/final checkpoints plus an SVG loss curve. A non-empty
// resume_path continues that checkpoint's trajectory. A non-negative
// stop_after pauses the run once that global step count is reached, saving
// last.ckpt so a later call can resume; the combined trajectory is bitwise
// identical to an uninterrupted run.
TrainResult train_model(const ExperimentConfig& cfg, const std::string& resume_path = "",
                        int stop_after = -1);

// Median relative root-depth error over a fixed validation set derived from
// the config seed.
double validation_rel_depth_err(Model& model, const ExperimentConfig& cfg);

void write_loss_plot_svg(const std::vector<StepStats>& history, const std::string& svg_path);

}  // namespace hdnet
