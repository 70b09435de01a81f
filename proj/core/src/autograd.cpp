#include "wnetgan/autograd.hpp"

#include <algorithm>
#include <unordered_set>

#include "wnetgan/errors.hpp"

namespace wnetgan::nn {

Var constant(Tensor value, std::string name) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->requires_grad = false;
    n->name = std::move(name);
    return n;
}

Var leaf(Tensor value, bool requires_grad, std::string name) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->requires_grad = requires_grad;
    n->name = std::move(name);
    return n;
}

Var make_node(Tensor value, std::vector<Var> parents,
              std::function<void(Node&)> backward_fn) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->requires_grad =
        std::any_of(parents.begin(), parents.end(),
                    [](const Var& p) { return p && p->requires_grad; });
    if (n->requires_grad) {
        n->parents = std::move(parents);
        n->backward_fn = std::move(backward_fn);
    }
    return n;
}

Var detach(const Var& x) {
    return constant(x->value, x->name.empty() ? "" : x->name + ".detached");
}

void backward(const Var& root) {
    if (!root) throw InternalError("backward on null node");
    if (root->value.numel() != 1)
        throw InternalError("backward expects a scalar root, got " +
                            root->value.shape().str());
    if (!root->requires_grad) return;

    // Iterative post-order DFS over grad-requiring nodes.
    std::vector<Node*> topo;
    std::unordered_set<Node*> visited;
    struct Frame {
        Node* node;
        std::size_t next_parent;
    };
    std::vector<Frame> stack;
    stack.push_back({root.get(), 0});
    visited.insert(root.get());
    while (!stack.empty()) {
        Frame& f = stack.back();
        if (f.next_parent < f.node->parents.size()) {
            Node* p = f.node->parents[f.next_parent++].get();
            if (p && p->requires_grad && !visited.count(p)) {
                visited.insert(p);
                stack.push_back({p, 0});
            }
        } else {
            topo.push_back(f.node);
            stack.pop_back();
        }
    }

    root->ensure_grad().data()[0] = 1.0f;
    for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
        Node* n = *it;
        if (n->backward_fn && n->grad_allocated) n->backward_fn(*n);
    }
}

}  // namespace wnetgan::nn
