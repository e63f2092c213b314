#include "hdnet/gradcheck.hpp"

#include <cmath>

namespace hdnet {

namespace {

double eval_loss(const GraphBuilder& builder, std::vector<Tensor>& point) {
    Tape tape;
    Tensor loss = builder(tape, point);
    const double v = loss.item();
    tape.clear();
    return v;
}

}  // namespace

GradCheckResult gradient_check(const GraphBuilder& builder, std::vector<Tensor> point,
                               double step, double tolerance, int max_coords_per_leaf) {
    // analytic pass
    for (Tensor& t : point) t.zero_grad();
    Tape tape;
    Tensor loss = builder(tape, point);
    if (!std::isfinite(loss.item()))
        throw std::domain_error("gradient_check: non-finite forward value");
    tape.backward(loss);

    GradCheckResult result;
    for (std::size_t li = 0; li < point.size(); ++li) {
        Tensor& leaf = point[li];
        if (!leaf.requires_grad()) continue;
        const std::size_t n = leaf.size();
        std::size_t stride = 1;
        if (max_coords_per_leaf > 0 && n > static_cast<std::size_t>(max_coords_per_leaf))
            stride = n / static_cast<std::size_t>(max_coords_per_leaf);
        for (std::size_t k = 0; k < n; k += stride) {
            const double orig = leaf.data()[k];
            leaf.data()[k] = orig + step;
            const double fp = eval_loss(builder, point);
            leaf.data()[k] = orig - step;
            const double fm = eval_loss(builder, point);
            leaf.data()[k] = orig;
            if (!std::isfinite(fp) || !std::isfinite(fm))
                throw std::domain_error("gradient_check: non-finite value while probing leaf " +
                                        std::to_string(li) + " coord " + std::to_string(k));
            const double numeric = (fp - fm) / (2.0 * step);
            const double analytic = leaf.grad()[k];
            const double rel = std::fabs(analytic - numeric) / std::max(1.0, std::fabs(numeric));
            if (rel > result.max_rel_err) {
                result.max_rel_err = rel;
                result.worst = "leaf " + std::to_string(li) + " coord " + std::to_string(k);
            }
        }
    }
    result.pass = result.max_rel_err < tolerance;
    return result;
}

}  // namespace hdnet
