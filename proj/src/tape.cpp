#include "hdnet/tape.hpp"

namespace hdnet {

void Tape::record(std::function<void()> backward_fn) {
    consumed_ = false;
    entries_.push_back(std::move(backward_fn));
}

void Tape::backward(Tensor& loss) {
    if (loss.size() != 1)
        throw std::logic_error("backward requires a scalar loss, got " + shape_str(loss.shape()));
    if (consumed_)
        throw std::logic_error("backward called twice without re-recording the tape");
    if (!loss.requires_grad())
        throw std::logic_error("backward on a loss that is not connected to any gradient leaf");
    loss.grad_values().assign(1, 1.0);
    for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) (*it)();
    entries_.clear();
    consumed_ = true;
}

void Tape::clear() {
    entries_.clear();
    consumed_ = false;
}

}  // namespace hdnet
