#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "wase/errors.hpp"
#include "wase/rng.hpp"

namespace wase {

// Dense row-major tensor of 64-bit floats.
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<std::size_t> shape)
        : shape_(std::move(shape)), values_(checked_numel(shape_), 0.0) {}

    Tensor(std::vector<std::size_t> shape, std::vector<double> values)
        : shape_(std::move(shape)), values_(std::move(values)) {
        if (values_.size() != checked_numel(shape_)) {
            throw ShapeError("tensor values length " + std::to_string(values_.size()) +
                             " does not match shape " + shape_string(shape_));
        }
    }

    static Tensor scalar(double v) { return Tensor({1}, {v}); }

    static Tensor zeros_like(const Tensor& t) { return Tensor(t.shape_); }

    static Tensor random_uniform(std::vector<std::size_t> shape, Rng& rng, double scale) {
        Tensor t(std::move(shape));
        for (double& v : t.values_) v = rng.uniform(-scale, scale);
        return t;
    }

    static Tensor random_normal(std::vector<std::size_t> shape, Rng& rng, double stddev) {
        Tensor t(std::move(shape));
        for (double& v : t.values_) v = stddev * rng.normal();
        return t;
    }

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t numel() const { return values_.size(); }
    std::size_t extent(std::size_t d) const { return shape_[d]; }
    bool empty() const { return values_.empty(); }

    double* data() { return values_.data(); }
    const double* data() const { return values_.data(); }
    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }

    double& operator[](std::size_t i) { return values_[i]; }
    double operator[](std::size_t i) const { return values_[i]; }

    // rank-2 accessors
    double& at(std::size_t r, std::size_t c) { return values_[r * shape_[1] + c]; }
    double at(std::size_t r, std::size_t c) const { return values_[r * shape_[1] + c]; }

    // rank-3 accessors
    double& at(std::size_t i, std::size_t j, std::size_t k) {
        return values_[(i * shape_[1] + j) * shape_[2] + k];
    }
    double at(std::size_t i, std::size_t j, std::size_t k) const {
        return values_[(i * shape_[1] + j) * shape_[2] + k];
    }

    double scalar_value() const {
        if (numel() != 1) {
            throw ShapeError("expected scalar, got shape " + shape_string(shape_));
        }
        return values_[0];
    }

    bool all_finite() const {
        for (double v : values_) {
            if (!std::isfinite(v)) return false;
        }
        return true;
    }

    void fill(double v) { std::fill(values_.begin(), values_.end(), v); }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

    std::string shape_string() const { return shape_string(shape_); }

    static std::string shape_string(const std::vector<std::size_t>& s) {
        std::ostringstream os;
        os << "[";
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (i) os << " x ";
            os << s[i];
        }
        os << "]";
        return os.str();
    }

private:
    static std::size_t checked_numel(const std::vector<std::size_t>& shape) {
        std::size_t n = 1;
        for (std::size_t e : shape) {
            if (e == 0) throw ShapeError("zero extent in shape " + shape_string(shape));
            n *= e;
        }
        return shape.empty() ? 1 : n;
    }

    std::vector<std::size_t> shape_;
    std::vector<double> values_;
};

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (!a.same_shape(b)) {
        throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_string() + " vs " +
                         b.shape_string());
    }
}

inline void require_finite(const Tensor& t, const char* op) {
    if (!t.all_finite()) {
        throw Error(std::string(op) + " produced a non-finite value");
    }
}

}  // namespace wase
