#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace finsent::ad {

// Dense row-major tensor. The library only needs ranks 0..2 (scalars live
// in shape {1}); no broadcasting, no views. 64-bit precision throughout --
// the gradient checks in the test suite rely on it.
class Tensor {
public:
    Tensor() = default;

    Tensor(std::vector<std::size_t> shape, std::vector<double> values)
        : shape_(std::move(shape)), data_(std::move(values)) {
        if (element_count(shape_) != data_.size()) {
            throw std::invalid_argument("Tensor: shape does not match value count");
        }
    }

    static Tensor zeros(std::vector<std::size_t> shape) {
        std::size_t n = element_count(shape);
        return Tensor(std::move(shape), std::vector<double>(n, 0.0));
    }

    static Tensor full(std::vector<std::size_t> shape, double value) {
        std::size_t n = element_count(shape);
        return Tensor(std::move(shape), std::vector<double>(n, value));
    }

    static Tensor scalar(double value) { return Tensor({1}, {value}); }

    static Tensor vector(std::vector<double> values) {
        std::size_t n = values.size();
        return Tensor({n}, std::move(values));
    }

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t size() const { return data_.size(); }

    std::size_t rows() const { return shape_.empty() ? 0 : shape_[0]; }
    std::size_t cols() const { return shape_.size() < 2 ? 1 : shape_[1]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    double& at(std::size_t i, std::size_t j) { return data_[i * cols() + j]; }
    double at(std::size_t i, std::size_t j) const { return data_[i * cols() + j]; }

    // scalar convenience; valid only for single-element tensors
    double item() const {
        if (data_.size() != 1) {
            throw std::logic_error("Tensor::item on tensor of size " +
                                   std::to_string(data_.size()));
        }
        return data_[0];
    }

    void fill(double v) {
        for (auto& x : data_) x = v;
    }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    bool all_finite() const;

    std::string shape_string() const;

    static std::size_t element_count(const std::vector<std::size_t>& shape) {
        std::size_t n = 1;
        for (std::size_t e : shape) n *= e;
        return shape.empty() ? 0 : n;
    }

private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

}  // namespace finsent::ad
