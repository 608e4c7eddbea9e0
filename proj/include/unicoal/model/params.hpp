#pragma once

#include <map>
#include <string>
#include <vector>

#include "unicoal/ad/autodiff.hpp"
#include "unicoal/rng.hpp"
#include "unicoal/tensor.hpp"

namespace unicoal {

// Ordered registry of learnable tensors. Vars are graph leaves whose buffers
// the optimizer mutates in place between graph builds; iteration order is the
// lexicographic key order, which keeps optimizer and checkpoint traversals
// deterministic.
class ParamStore {
public:
    ad::Var create(const std::string& name, std::vector<int64_t> shape, RandomStream& rng,
                   double stddev) {
        check(params_.find(name) == params_.end(), "duplicate parameter: " + name);
        ad::Var v = ad::Var::leaf(Tensor::randn(std::move(shape), rng, stddev), true);
        params_.emplace(name, v);
        return v;
    }

    ad::Var create_filled(const std::string& name, std::vector<int64_t> shape, double fill) {
        check(params_.find(name) == params_.end(), "duplicate parameter: " + name);
        ad::Var v = ad::Var::leaf(Tensor::full(std::move(shape), fill), true);
        params_.emplace(name, v);
        return v;
    }

    const ad::Var& at(const std::string& name) const {
        auto it = params_.find(name);
        check(it != params_.end(), "unknown parameter: " + name);
        return it->second;
    }

    bool contains(const std::string& name) const { return params_.count(name) > 0; }

    size_t size() const { return params_.size(); }

    int64_t total_elements() const {
        int64_t n = 0;
        for (const auto& [k, v] : params_) n += v.numel();
        return n;
    }

    std::vector<std::string> names() const {
        std::vector<std::string> out;
        out.reserve(params_.size());
        for (const auto& [k, v] : params_) out.push_back(k);
        return out;
    }

    std::vector<ad::Var> vars() const {
        std::vector<ad::Var> out;
        out.reserve(params_.size());
        for (const auto& [k, v] : params_) out.push_back(v);
        return out;
    }

    const std::map<std::string, ad::Var>& items() const { return params_; }

    // Overwrites parameter values in place (checkpoint load).
    void load_values(const std::map<std::string, Tensor>& values) {
        for (const auto& [name, t] : values) {
            auto it = params_.find(name);
            check(it != params_.end(), "checkpoint has unknown parameter: " + name);
            check(it->second.val().same_shape(t), "checkpoint shape mismatch for: " + name);
            std::copy(t.begin(), t.end(), it->second.mutable_val().data());
        }
        check(values.size() == params_.size(), "checkpoint parameter count mismatch");
    }

    std::map<std::string, Tensor> snapshot() const {
        std::map<std::string, Tensor> out;
        for (const auto& [k, v] : params_) out.emplace(k, v.val().clone());
        return out;
    }

private:
    std::map<std::string, ad::Var> params_;
};

} // namespace unicoal
