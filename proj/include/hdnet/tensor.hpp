#pragma once

#include <cstddef>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace hdnet {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);

// Dense float64 buffer with an optional gradient of identical shape.
// Tensors are cheap handles; copies share the underlying storage.
struct TensorData {
    Shape shape;
    std::vector<double> v;
    std::vector<double> g;  // same length as v when requires_grad
    bool requires_grad = false;
};

class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);

    bool defined() const { return static_cast<bool>(d_); }
    const Shape& shape() const { return d_->shape; }
    std::size_t size() const { return d_->v.size(); }
    std::size_t dim(std::size_t i) const { return d_->shape.at(i); }
    std::size_t ndim() const { return d_->shape.size(); }

    double* data() { return d_->v.data(); }
    const double* data() const { return d_->v.data(); }
    std::vector<double>& values() { return d_->v; }
    const std::vector<double>& values() const { return d_->v; }

    bool requires_grad() const { return d_->requires_grad; }
    double* grad() { return d_->g.data(); }
    const double* grad() const { return d_->g.data(); }
    std::vector<double>& grad_values() { return d_->g; }
    void zero_grad();

    double item() const;

    // Value copy detached from any gradient bookkeeping.
    Tensor detach() const;

    bool same_storage(const Tensor& other) const { return d_ == other.d_; }

    std::shared_ptr<TensorData> node() const { return d_; }

private:
    explicit Tensor(std::shared_ptr<TensorData> d) : d_(std::move(d)) {}
    std::shared_ptr<TensorData> d_;
};

inline std::size_t numel(const Shape& shape) {
    std::size_t n = 1;
    for (std::size_t s : shape) n *= s;
    return n;
}

}  // namespace hdnet
