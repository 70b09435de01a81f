#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "wnetgan/tensor.hpp"

namespace wnetgan::nn {

struct Node;
using Var = std::shared_ptr<Node>;

// One value in the computation graph. Nodes are created per forward pass;
// parameters are long-lived leaves whose grads persist until zeroed.
struct Node {
    Tensor value;
    Tensor grad;  // allocated lazily by ensure_grad()
    bool requires_grad = false;
    bool grad_allocated = false;
    std::vector<Var> parents;
    // Reads this->grad, accumulates into parents' grads.
    std::function<void(Node&)> backward_fn;
    std::string name;

    Tensor& ensure_grad() {
        if (!grad_allocated) {
            grad = Tensor(value.shape(), 0.0f);
            grad_allocated = true;
        }
        return grad;
    }

    void zero_grad() {
        grad = Tensor();
        grad_allocated = false;
    }
};

// Leaf with no gradient tracking.
Var constant(Tensor value, std::string name = {});

// Leaf, typically a trainable parameter when requires_grad is true.
Var leaf(Tensor value, bool requires_grad, std::string name = {});

// Interior node; requires_grad is inherited from parents.
Var make_node(Tensor value, std::vector<Var> parents,
              std::function<void(Node&)> backward_fn);

// Copy of x's value, severed from the graph.
Var detach(const Var& x);

// Reverse-mode sweep from a scalar root (root.grad is seeded with 1).
void backward(const Var& root);

}  // namespace wnetgan::nn
