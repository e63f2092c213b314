#pragma once

#include <functional>
#include <vector>

#include "hdnet/tensor.hpp"

namespace hdnet {

// Records forward operations and replays their adjoints in reverse order.
// Single-threaded per tape; independent tapes may run concurrently.
class Tape {
public:
    void record(std::function<void()> backward_fn);

    // Seeds grad(loss) = 1 and replays the tape in reverse recorded order.
    // The tape is cleared afterwards; a second call without re-recording throws.
    void backward(Tensor& loss);

    void clear();
    std::size_t size() const { return entries_.size(); }

private:
    std::vector<std::function<void()>> entries_;
    bool consumed_ = false;
};

}  // namespace hdnet
