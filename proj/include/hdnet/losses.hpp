#pragma once

#include "hdnet/ops.hpp"

namespace hdnet {

struct LossWeights {
    double hm = 1000.0;
    double pose = 0.1;
    double bins = 1.0;
    double idx = 0.1;
};

// All losses are scalar tensors on the tape; batched inputs are averaged
// over the leading batch axis so single-sample values match the per-sample
// definitions.

// Mean squared error over every heatmap cell.
Tensor heatmap_mse(Tape& tape, const Tensor& pred, const Tensor& target);

// Mean over joints (and batch) of |u - u_hat| + |v - v_hat|; inputs [*,J,2].
Tensor pose_l1(Tape& tape, const Tensor& pred, const Tensor& target);

// -sum_i target_i * log(pred_i + eps), averaged over the batch; inputs [*,N_B].
Tensor bins_ce(Tape& tape, const Tensor& pred, const Tensor& target, double eps = 1e-12);

// |b_gt - b_hat| averaged over the batch; inputs [*] or [*,1].
Tensor idx_l1(Tape& tape, const Tensor& pred_b_hat, const Tensor& target_b);

Tensor total_loss(Tape& tape, const Tensor& l_hm, const Tensor& l_pose, const Tensor& l_bins,
                  const Tensor& l_idx, const LossWeights& w);

}  // namespace hdnet
