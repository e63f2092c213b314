#include "hdnet/tensor.hpp"

#include <algorithm>
#include <sstream>

namespace hdnet {

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
    os << "]";
    return os.str();
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
    auto d = std::make_shared<TensorData>();
    const std::size_t n = numel(shape);
    d->shape = std::move(shape);
    d->v.assign(n, 0.0);
    d->requires_grad = requires_grad;
    if (requires_grad) d->g.assign(n, 0.0);
    return Tensor(std::move(d));
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
    if (numel(shape) != values.size())
        throw std::invalid_argument("Tensor::from: " + shape_str(shape) + " needs " +
                                    std::to_string(numel(shape)) + " values, got " +
                                    std::to_string(values.size()));
    auto d = std::make_shared<TensorData>();
    d->shape = std::move(shape);
    d->v = std::move(values);
    d->requires_grad = requires_grad;
    if (requires_grad) d->g.assign(d->v.size(), 0.0);
    return Tensor(std::move(d));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
    return Tensor::from({1}, {value}, requires_grad);
}

void Tensor::zero_grad() {
    if (d_->requires_grad) std::fill(d_->g.begin(), d_->g.end(), 0.0);
}

double Tensor::item() const {
    if (d_->v.size() != 1)
        throw std::logic_error("Tensor::item: expected a scalar, got " + shape_str(d_->shape));
    return d_->v[0];
}

Tensor Tensor::detach() const {
    return Tensor::from(d_->shape, d_->v, false);
}

}  // namespace hdnet
