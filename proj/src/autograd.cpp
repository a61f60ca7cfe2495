#include "cvr/autograd.hpp"

#include <unordered_set>

namespace cvr {

Tensor& Var::ensure_grad() {
    if (grad.empty()) grad = Tensor::zeros(value.shape());
    return grad;
}

void Var::accumulate(const Tensor& g) {
    Tensor& dst = ensure_grad();
    check_state(dst.size() == g.size(), "gradient shape mismatch");
    double* d = dst.data();
    const double* s = g.data();
    for (std::int64_t i = 0; i < g.size(); ++i) d[i] += s[i];
}

VarPtr make_leaf(Tensor value, bool requires_grad) {
    auto v = std::make_shared<Var>();
    v->value = std::move(value);
    v->requires_grad = requires_grad;
    return v;
}

VarPtr make_result(Tensor value, std::vector<VarPtr> parents,
                   std::function<void(Var&)> backward_op) {
    auto v = std::make_shared<Var>();
    v->value = std::move(value);
    for (const auto& p : parents)
        if (p && p->requires_grad) v->requires_grad = true;
    if (v->requires_grad) {
        v->parents = std::move(parents);
        v->backward_op = std::move(backward_op);
    }
    return v;
}

namespace {

void topo_visit(const VarPtr& v, std::unordered_set<Var*>& seen,
                std::vector<VarPtr>& order) {
    if (!v || seen.count(v.get())) return;
    seen.insert(v.get());
    for (const auto& p : v->parents) topo_visit(p, seen, order);
    order.push_back(v);
}

}  // namespace

void backward(const VarPtr& root) {
    check_arg(root != nullptr, "backward: null root");
    check_arg(root->value.size() == 1, "backward: root must be scalar");
    std::unordered_set<Var*> seen;
    std::vector<VarPtr> order;
    topo_visit(root, seen, order);
    root->ensure_grad()[0] = 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Var& v = **it;
        if (v.backward_op && !v.grad.empty()) v.backward_op(v);
    }
}

}  // namespace cvr
