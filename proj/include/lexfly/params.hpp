#pragma once

#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "lexfly/checkpoint.hpp"
#include "lexfly/lstm.hpp"
#include "lexfly/node.hpp"
#include "lexfly/rng.hpp"

namespace lexfly {

// Ordered collection of named trainable leaves. Insertion order is the
// serialization and optimizer order, so runs are reproducible.
class ParamStore {
 public:
  NodePtr add(const std::string& name, Tensor init) {
    if (index_.count(name))
      throw ContractError("ParamStore: duplicate parameter " + name);
    NodePtr n = leaf(std::move(init));
    index_[name] = items_.size();
    items_.emplace_back(name, n);
    return n;
  }

  NodePtr add_uniform(const std::string& name, Shape shape, Rng& rng,
                      double lo = -0.1, double hi = 0.1) {
    return add(name, Tensor::uniform(std::move(shape), rng, lo, hi));
  }

  bool has(const std::string& name) const { return index_.count(name) > 0; }

  NodePtr get(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end())
      throw ContractError("ParamStore: unknown parameter " + name);
    return items_[it->second].second;
  }

  const std::vector<std::pair<std::string, NodePtr>>& items() const {
    return items_;
  }

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& [name, node] : items_) n += node->value.size();
    return n;
  }

  void zero_grads() {
    for (auto& [name, node] : items_) node->grad.fill(0.0);
  }

  // Deep value copy (grads not copied), preserving names and order.
  std::vector<std::pair<std::string, Tensor>> snapshot() const {
    std::vector<std::pair<std::string, Tensor>> out;
    out.reserve(items_.size());
    for (const auto& [name, node] : items_) out.emplace_back(name, node->value);
    return out;
  }

  void restore(const std::vector<std::pair<std::string, Tensor>>& snap) {
    for (const auto& [name, value] : snap) {
      NodePtr n = get(name);
      if (!n->value.same_shape(value))
        throw ShapeError("ParamStore::restore: shape mismatch for " + name);
      n->value = value;
    }
  }

 private:
  std::vector<std::pair<std::string, NodePtr>> items_;
  std::unordered_map<std::string, std::size_t> index_;
};

inline void save_params(const ParamStore& store, const std::string& path) {
  save_tensors(path, store.snapshot());
}

inline void load_params(ParamStore& store, const std::string& path) {
  for (const auto& [name, value] : load_tensors(path)) {
    NodePtr n = store.get(name);
    if (!n->value.same_shape(value))
      throw ShapeError("load_params: shape mismatch for " + name + ": " +
                       shape_str(n->value.shape()) + " vs " +
                       shape_str(value.shape()));
    n->value = value;
  }
}

// Uniform [-0.1, 0.1] weights, forget-gate bias slice set to 1.0.
inline LSTMParams make_lstm_params(ParamStore& store, const std::string& prefix,
                                   int d_in, int d, Rng& rng) {
  LSTMParams p;
  p.d_in = d_in;
  p.d = d;
  p.wx = store.add_uniform(prefix + ".wx", {d_in, 4 * d}, rng);
  p.wh = store.add_uniform(prefix + ".wh", {d, 4 * d}, rng);
  Tensor b({1, 4 * d});
  for (int j = d; j < 2 * d; ++j) b.at(0, j) = 1.0;
  p.b = store.add(prefix + ".b", std::move(b));
  return p;
}

inline BiLSTMParams make_bilstm_params(ParamStore& store,
                                       const std::string& prefix, int d_in,
                                       int d, Rng& rng) {
  return {make_lstm_params(store, prefix + ".fwd", d_in, d, rng),
          make_lstm_params(store, prefix + ".bwd", d_in, d, rng)};
}

}  // namespace lexfly
