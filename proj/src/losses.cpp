#include "hdnet/losses.hpp"

namespace hdnet {

Tensor heatmap_mse(Tape& tape, const Tensor& pred, const Tensor& target) {
    if (pred.shape() != target.shape())
        throw std::invalid_argument("heatmap_mse: shape mismatch " + shape_str(pred.shape()) +
                                    " vs " + shape_str(target.shape()));
    Tensor diff = ops::sub(tape, pred, target);
    return ops::mean_all(tape, ops::mul(tape, diff, diff));
}

Tensor pose_l1(Tape& tape, const Tensor& pred, const Tensor& target) {
    if (pred.shape() != target.shape())
        throw std::invalid_argument("pose_l1: shape mismatch " + shape_str(pred.shape()) + " vs " +
                                    shape_str(target.shape()));
    if (pred.ndim() < 2 || pred.shape().back() != 2)
        throw std::invalid_argument("pose_l1: expected [...,J,2] coordinates, got " +
                                    shape_str(pred.shape()));
    const double joints_and_batch = static_cast<double>(pred.size()) / 2.0;
    Tensor l1 = ops::sum_all(tape, ops::abs(tape, ops::sub(tape, pred, target)));
    return ops::scale(tape, l1, 1.0 / joints_and_batch);
}

Tensor bins_ce(Tape& tape, const Tensor& pred, const Tensor& target, double eps) {
    if (pred.shape() != target.shape())
        throw std::invalid_argument("bins_ce: shape mismatch " + shape_str(pred.shape()) + " vs " +
                                    shape_str(target.shape()));
    const std::size_t batch = pred.ndim() > 1 ? pred.dim(0) : 1;
    Tensor weighted = ops::mul_const(tape, ops::log_eps(tape, pred, eps), target.values());
    return ops::scale(tape, ops::sum_all(tape, weighted), -1.0 / static_cast<double>(batch));
}

Tensor idx_l1(Tape& tape, const Tensor& pred_b_hat, const Tensor& target_b) {
    if (pred_b_hat.size() != target_b.size())
        throw std::invalid_argument("idx_l1: size mismatch");
    Tensor diff = ops::abs(tape, ops::sub(tape, pred_b_hat, target_b));
    return ops::mean_all(tape, diff);
}

Tensor total_loss(Tape& tape, const Tensor& l_hm, const Tensor& l_pose, const Tensor& l_bins,
                  const Tensor& l_idx, const LossWeights& w) {
    Tensor acc = ops::scale(tape, l_hm, w.hm);
    acc = ops::add(tape, acc, ops::scale(tape, l_pose, w.pose));
    acc = ops::add(tape, acc, ops::scale(tape, l_bins, w.bins));
    acc = ops::add(tape, acc, ops::scale(tape, l_idx, w.idx));
    return acc;
}

}  // namespace hdnet
