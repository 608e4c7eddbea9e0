#pragma once

#include <functional>
#include <memory>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "unicoal/common.hpp"
#include "unicoal/tensor.hpp"

namespace unicoal::ad {

class Var;
using VjpFn = std::function<std::vector<Var>(const Var& gy)>;

struct Node {
    Tensor value;
    bool needs_grad = false;
    bool grad_leaf = false;
    std::vector<std::shared_ptr<Node>> parents;
    VjpFn vjp; // cotangents for parents; empty on leaves
};

// Handle to a node of the dynamically built computation graph. Backward
// functions are themselves expressed through graph ops, so gradients can be
// differentiated again (the R1 penalty needs a second backward pass).
class Var {
public:
    Var() = default;
    explicit Var(std::shared_ptr<Node> n) : n_(std::move(n)) {}

    static Var leaf(Tensor t, bool requires_grad = false) {
        auto n = std::make_shared<Node>();
        n->value = std::move(t);
        n->needs_grad = requires_grad;
        n->grad_leaf = requires_grad;
        return Var(n);
    }

    static Var constant(Tensor t) { return leaf(std::move(t), false); }
    static Var scalar(double v) { return constant(Tensor::scalar(v)); }

    bool defined() const { return n_ != nullptr; }
    const Tensor& val() const { return n_->value; }
    // In-place access for optimizer updates on leaves, between graph builds.
    Tensor& mutable_val() const { return n_->value; }
    bool needs_grad() const { return n_ && n_->needs_grad; }
    const std::shared_ptr<Node>& node() const { return n_; }

    const std::vector<int64_t>& shape() const { return val().shape(); }
    int64_t dim(size_t i) const { return val().dim(i); }
    int64_t numel() const { return val().numel(); }
    double item() const {
        check(numel() == 1, "item() on non-scalar");
        return val()[0];
    }

    // Cuts the graph: same tensor, no gradient history.
    Var detach() const { return leaf(n_->value, false); }

private:
    std::shared_ptr<Node> n_;
};

inline Var make_op(Tensor out, std::vector<Var> parents, VjpFn vjp) {
    auto n = std::make_shared<Node>();
    n->value = std::move(out);
    bool ng = false;
    for (const auto& p : parents) ng = ng || p.needs_grad();
    n->needs_grad = ng;
    if (ng) {
        n->parents.reserve(parents.size());
        for (const auto& p : parents) n->parents.push_back(p.node());
        n->vjp = std::move(vjp);
    }
    return Var(n);
}

Var add(const Var& a, const Var& b); // defined in ops.hpp

// Reverse-mode gradient of a scalar output. Returned vars are aligned with
// `wrt`; a zero constant is produced for parameters the output does not
// reach. The gradient graph is differentiable again by construction.
inline std::vector<Var> grad(const Var& output, const std::vector<Var>& wrt) {
    check(output.numel() == 1, "grad: output must be scalar");

    // Forward-topological order (dependencies first) over grad-needing nodes.
    std::vector<Node*> order;
    std::unordered_map<Node*, std::shared_ptr<Node>> keep;
    {
        std::unordered_set<Node*> visited;
        std::vector<std::pair<std::shared_ptr<Node>, size_t>> stack;
        if (output.needs_grad()) stack.push_back({output.node(), 0});
        while (!stack.empty()) {
            auto& [n, idx] = stack.back();
            if (idx == 0 && visited.count(n.get())) {
                stack.pop_back();
                continue;
            }
            visited.insert(n.get());
            if (idx < n->parents.size()) {
                auto p = n->parents[idx];
                ++idx;
                if (p->needs_grad && !visited.count(p.get())) stack.push_back({p, 0});
            } else {
                order.push_back(n.get());
                keep.emplace(n.get(), n);
                stack.pop_back();
            }
        }
    }

    std::unordered_map<Node*, Var> grads;
    if (output.needs_grad())
        grads.emplace(output.node().get(), Var::constant(Tensor::full({1}, 1.0)));

    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        auto g_it = grads.find(n);
        if (g_it == grads.end() || !n->vjp) continue;
        std::vector<Var> pg = n->vjp(g_it->second);
        check(pg.size() == n->parents.size(), "grad: vjp arity mismatch");
        for (size_t i = 0; i < pg.size(); ++i) {
            Node* p = n->parents[i].get();
            if (!p->needs_grad || !pg[i].defined()) continue;
            auto acc = grads.find(p);
            if (acc == grads.end())
                grads.emplace(p, pg[i]);
            else
                acc->second = add(acc->second, pg[i]);
        }
    }

    std::vector<Var> out;
    out.reserve(wrt.size());
    for (const auto& w : wrt) {
        auto it = grads.find(w.node().get());
        if (it != grads.end())
            out.push_back(it->second);
        else
            out.push_back(Var::constant(Tensor(w.shape())));
    }
    return out;
}

} // namespace unicoal::ad
