#pragma once

#include <functional>
#include <memory>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "lexfly/errors.hpp"
#include "lexfly/tensor.hpp"

namespace lexfly {

struct Node;
using NodePtr = std::shared_ptr<Node>;

// One vertex of the (acyclic, per-step) computation graph. `backprop`
// receives d(loss)/d(value) for this node and accumulates the parents'
// shares into `sinks` (one tensor per parent, same shape as the parent's
// value). Leaves have no backprop.
struct Node {
  Tensor value;
  Tensor grad;  // accumulated across backward() calls, zero-initialized
  const char* op = "leaf";
  std::vector<NodePtr> parents;
  std::function<void(Node& self, const Tensor& upstream,
                     const std::vector<Tensor*>& sinks)>
      backprop;
};

inline NodePtr make_node(Tensor value, const char* op,
                         std::vector<NodePtr> parents,
                         std::function<void(Node&, const Tensor&,
                                            const std::vector<Tensor*>&)>
                             backprop = nullptr) {
  auto n = std::make_shared<Node>();
  n->grad = Tensor::zeros(value.shape());
  n->value = std::move(value);
  n->op = op;
  n->parents = std::move(parents);
  n->backprop = std::move(backprop);
  return n;
}

inline NodePtr leaf(Tensor value) { return make_node(std::move(value), "leaf", {}); }

// Reverse topological order of everything reachable from `root` through
// parent edges. Iterative so that deep LSTM chains cannot overflow the stack.
inline std::vector<Node*> topo_order(Node* root) {
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(root, 0);
  visited.insert(root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* p = node->parents[next++].get();
      if (visited.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  return order;  // parents before children; reverse for backprop
}

// Reverse-mode sweep from a scalar loss. Each call computes a fresh
// d(loss)/d(node) for every reachable node and *adds* it into node->grad, so
// two sweeps without zeroing double every grad.
inline void backward(const NodePtr& loss) {
  if (!loss) throw ContractError("backward: null loss node");
  if (loss->value.size() != 1)
    throw ContractError("backward: loss must be scalar, got shape " +
                        shape_str(loss->value.shape()));

  std::vector<Node*> order = topo_order(loss.get());
  std::unordered_map<Node*, Tensor> pass;
  pass.reserve(order.size() * 2);
  pass.emplace(loss.get(), Tensor::full(loss->value.shape(), 1.0));

  std::vector<Tensor*> sinks;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    auto found = pass.find(node);
    if (found == pass.end())
      found = pass.emplace(node, Tensor::zeros(node->value.shape())).first;
    Tensor* upstream = &found->second;  // element addresses survive rehashing
    if (!node->backprop) continue;
    sinks.clear();
    for (const auto& p : node->parents) {
      auto pit = pass.find(p.get());
      if (pit == pass.end())
        pit = pass.emplace(p.get(), Tensor::zeros(p->value.shape())).first;
      sinks.push_back(&pit->second);
    }
    node->backprop(*node, *upstream, sinks);
  }

  for (Node* node : order) node->grad += pass.at(node);
}

// Cuts parent links of everything reachable from `root`, so the graph frees
// iteratively no matter how deep the chains are. Values and grads survive.
inline void release_graph(const NodePtr& root) {
  if (!root) return;
  std::vector<Node*> order = topo_order(root.get());
  std::vector<std::vector<NodePtr>> keep_alive;
  keep_alive.reserve(order.size());
  for (Node* node : order) {
    keep_alive.push_back(std::move(node->parents));
    node->parents.clear();
    node->backprop = nullptr;
  }
}

}  // namespace lexfly
