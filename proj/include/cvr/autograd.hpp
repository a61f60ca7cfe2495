#ifndef CVR_AUTOGRAD_HPP_
#define CVR_AUTOGRAD_HPP_

#include <functional>
#include <memory>
#include <vector>

#include "cvr/tensor.hpp"

namespace cvr {

// Reverse-mode tape node. Graphs are rebuilt per forward pass; parameters
// enter as leaves and their gradients are read off after backward().
struct Var {
    Tensor value;
    Tensor grad;  // allocated on first accumulation
    bool requires_grad = false;
    std::vector<std::shared_ptr<Var>> parents;
    // Reads this->grad and accumulates into parents' grads.
    std::function<void(Var&)> backward_op;

    void accumulate(const Tensor& g);
    Tensor& ensure_grad();
};

using VarPtr = std::shared_ptr<Var>;

VarPtr make_leaf(Tensor value, bool requires_grad = false);
VarPtr make_result(Tensor value, std::vector<VarPtr> parents,
                   std::function<void(Var&)> backward_op);

// Backpropagates from a scalar root (seeds d(root)/d(root) = 1).
void backward(const VarPtr& root);

}  // namespace cvr

#endif  // CVR_AUTOGRAD_HPP_
