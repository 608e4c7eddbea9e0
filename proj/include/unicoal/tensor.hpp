#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "unicoal/common.hpp"
#include "unicoal/rng.hpp"

namespace unicoal {

// Dense row-major double tensor with shared storage. Ops treat tensors as
// values: they allocate fresh outputs and never mutate inputs, so sharing
// the buffer across copies is safe.
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<int64_t> shape)
        : shape_(std::move(shape)),
          data_(std::make_shared<std::vector<double>>(size_t(numel_of(shape_)), 0.0)) {}

    Tensor(std::vector<int64_t> shape, std::vector<double> values)
        : shape_(std::move(shape)),
          data_(std::make_shared<std::vector<double>>(std::move(values))) {
        check(int64_t(data_->size()) == numel_of(shape_), "Tensor: value count does not match shape");
    }

    static Tensor scalar(double v) { return Tensor({1}, {v}); }

    static Tensor full(std::vector<int64_t> shape, double v) {
        Tensor t(std::move(shape));
        std::fill(t.begin(), t.end(), v);
        return t;
    }

    static Tensor randn(std::vector<int64_t> shape, RandomStream& rng, double stddev = 1.0) {
        Tensor t(std::move(shape));
        for (double& x : t) x = stddev * rng.gaussian();
        return t;
    }

    static Tensor uniform(std::vector<int64_t> shape, RandomStream& rng, double lo, double hi) {
        Tensor t(std::move(shape));
        for (double& x : t) x = rng.uniform(lo, hi);
        return t;
    }

    bool defined() const { return data_ != nullptr; }
    const std::vector<int64_t>& shape() const { return shape_; }
    int64_t dim(size_t i) const { return shape_.at(i); }
    size_t ndim() const { return shape_.size(); }
    int64_t numel() const { return numel_of(shape_); }

    double* data() { return data_->data(); }
    const double* data() const { return data_->data(); }
    double* begin() { return data(); }
    double* end() { return data() + numel(); }
    const double* begin() const { return data(); }
    const double* end() const { return data() + numel(); }

    double& operator[](int64_t i) { return (*data_)[size_t(i)]; }
    double operator[](int64_t i) const { return (*data_)[size_t(i)]; }

    double& at4(int64_t n, int64_t c, int64_t h, int64_t w) {
        return (*data_)[size_t(index4(n, c, h, w))];
    }
    double at4(int64_t n, int64_t c, int64_t h, int64_t w) const {
        return (*data_)[size_t(index4(n, c, h, w))];
    }

    int64_t index4(int64_t n, int64_t c, int64_t h, int64_t w) const {
        const auto& s = shape_;
        check(s.size() == 4, "index4 requires a 4-d tensor");
        return ((n * s[1] + c) * s[2] + h) * s[3] + w;
    }

    Tensor clone() const {
        Tensor t;
        t.shape_ = shape_;
        t.data_ = std::make_shared<std::vector<double>>(*data_);
        return t;
    }

    Tensor reshaped(std::vector<int64_t> shape) const {
        check(numel_of(shape) == numel(), "reshape: element count mismatch");
        Tensor t;
        t.shape_ = std::move(shape);
        t.data_ = data_;
        return t;
    }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

    bool all_finite() const {
        for (double v : *data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    double min() const { return *std::min_element(begin(), end()); }
    double max() const { return *std::max_element(begin(), end()); }

    double sum() const {
        double s = 0.0;
        for (double v : *data_) s += v;
        return s;
    }

    double mean() const { return numel() ? sum() / double(numel()) : 0.0; }

    std::string shape_str() const {
        std::ostringstream os;
        os << "[";
        for (size_t i = 0; i < shape_.size(); ++i) os << (i ? "," : "") << shape_[i];
        os << "]";
        return os.str();
    }

    static int64_t numel_of(const std::vector<int64_t>& shape) {
        int64_t n = 1;
        for (int64_t d : shape) {
            check(d >= 0, "Tensor: negative dimension");
            n *= d;
        }
        return n;
    }

private:
    std::vector<int64_t> shape_;
    std::shared_ptr<std::vector<double>> data_;
};

} // namespace unicoal
