#pragma once

#include <cstdint>
#include <cstring>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "lexfly/adam.hpp"
#include "lexfly/checkpoint.hpp"
#include "lexfly/node.hpp"
#include "lexfly/params.hpp"
#include "lexfly/rng.hpp"

namespace lexfly {

struct TrainOptions {
  int max_epochs = 10;
  int patience = 3;  // stop once this many consecutive epochs fail to improve
  AdamConfig adam;
  std::uint64_t seed = 1;
  bool maximize = false;  // direction of the dev metric
  bool shuffle = true;    // off for stateful stream chunks (LM)
  std::string state_path;  // when set, a resumable state is kept here
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double dev_metric = 0.0;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  double best_metric = 0.0;
  int best_epoch = 0;
  std::vector<std::pair<std::string, Tensor>> best_params;
};

// Optimizer + early-stopping bookkeeping; serializing and restoring it
// resumes the trajectory bit-for-bit on identical data order.
struct TrainState {
  int epoch = 0;
  int stall = 0;  // consecutive epochs without improvement
  double best_metric = 0.0;
  int best_epoch = 0;
  bool has_best = false;
  Rng rng;
  std::vector<std::pair<std::string, Tensor>> best_params;

  void save(const std::string& path, const ParamStore& store, Adam& adam) const {
    std::vector<std::pair<std::string, Tensor>> tensors;
    for (const auto& [name, node] : store.items())
      tensors.emplace_back("param/" + name, node->value);
    const auto& items = store.items();
    for (std::size_t k = 0; k < items.size(); ++k) {
      tensors.emplace_back("adam/m/" + items[k].first, adam.first_moments()[k]);
      tensors.emplace_back("adam/v/" + items[k].first, adam.second_moments()[k]);
    }
    for (const auto& [name, value] : best_params)
      tensors.emplace_back("best/" + name, value);
    Tensor scalars({6});
    scalars[0] = epoch;
    scalars[1] = stall;
    scalars[2] = best_metric;
    scalars[3] = best_epoch;
    scalars[4] = has_best ? 1.0 : 0.0;
    scalars[5] = static_cast<double>(adam.steps());
    tensors.emplace_back("state/scalars", scalars);
    Tensor rng_bits({4});
    const auto st = rng.state();
    for (int i = 0; i < 4; ++i) std::memcpy(&rng_bits[i], &st[i], 8);
    tensors.emplace_back("state/rng", rng_bits);
    save_tensors(path, tensors);
  }

  void load(const std::string& path, ParamStore& store, Adam& adam) {
    best_params.clear();
    auto& m = adam.first_moments();
    auto& v = adam.second_moments();
    for (const auto& [key, value] : load_tensors(path)) {
      if (key.rfind("param/", 0) == 0) {
        store.get(key.substr(6))->value = value;
      } else if (key.rfind("adam/m/", 0) == 0) {
        m[index_of(store, key.substr(7))] = value;
      } else if (key.rfind("adam/v/", 0) == 0) {
        v[index_of(store, key.substr(7))] = value;
      } else if (key.rfind("best/", 0) == 0) {
        best_params.emplace_back(key.substr(5), value);
      } else if (key == "state/scalars") {
        epoch = static_cast<int>(value[0]);
        stall = static_cast<int>(value[1]);
        best_metric = value[2];
        best_epoch = static_cast<int>(value[3]);
        has_best = value[4] != 0.0;
        adam.set_steps(static_cast<long long>(value[5]));
      } else if (key == "state/rng") {
        std::array<std::uint64_t, 4> st{};
        for (int i = 0; i < 4; ++i) {
          const double bits = value[i];
          std::memcpy(&st[i], &bits, 8);
        }
        rng.set_state(st);
      }
    }
  }

 private:
  static std::size_t index_of(const ParamStore& store, const std::string& name) {
    const auto& items = store.items();
    for (std::size_t k = 0; k < items.size(); ++k)
      if (items[k].first == name) return k;
    throw ContractError("TrainState: unknown parameter " + name);
  }
};

// Minibatch loop with per-epoch dev evaluation, best-checkpoint tracking and
// patience-based early stopping. `build_loss(batch_index)` constructs the
// loss graph for one (already shuffled) batch; `evaluate()` returns the dev
// metric. Both must be deterministic given the parameter values.
inline TrainResult train_loop(ParamStore& store, const TrainOptions& opt,
                              int batches_per_epoch,
                              const std::function<NodePtr(int)>& build_loss,
                              const std::function<double()>& evaluate) {
  if (batches_per_epoch < 1) throw ContractError("train_loop: no batches");
  Adam adam(opt.adam, store);
  TrainState st;
  st.rng.reseed(opt.seed);
  if (!opt.state_path.empty()) {
    std::ifstream probe(opt.state_path);
    if (probe.good()) st.load(opt.state_path, store, adam);
  }

  TrainResult result;
  std::vector<int> order(batches_per_epoch);

  for (int epoch = st.epoch + 1; epoch <= opt.max_epochs; ++epoch) {
    // identity before every shuffle, so a resumed run sees the same order
    for (int i = 0; i < batches_per_epoch; ++i) order[i] = i;
    if (opt.shuffle) st.rng.shuffle(order);
    double loss_sum = 0.0;
    for (int bi : order) {
      store.zero_grads();
      NodePtr loss = build_loss(bi);
      if (!loss->value.all_finite())
        throw ContractError("train_loop: non-finite loss in epoch " +
                            std::to_string(epoch) + " batch " +
                            std::to_string(bi));
      backward(loss);
      Adam::clip_gradients(store, opt.adam.clip_norm);
      adam.step(store);
      loss_sum += loss->value[0];
      release_graph(loss);
    }
    const double dev = evaluate();
    result.history.push_back({epoch, loss_sum / batches_per_epoch, dev});

    const bool improved =
        !st.has_best || (opt.maximize ? dev > st.best_metric : dev < st.best_metric);
    if (improved) {
      st.best_metric = dev;
      st.best_epoch = epoch;
      st.has_best = true;
      st.best_params = store.snapshot();
      st.stall = 0;
    } else {
      ++st.stall;
    }
    st.epoch = epoch;
    if (!opt.state_path.empty()) st.save(opt.state_path, store, adam);
    if (st.stall >= opt.patience) break;
  }

  result.best_metric = st.best_metric;
  result.best_epoch = st.best_epoch;
  result.best_params = std::move(st.best_params);
  return result;
}

inline void write_history_csv(const std::string& path,
                              const std::vector<EpochRecord>& history) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ParseError("cannot open " + path + " for writing");
  os << "epoch,train_loss,dev_metric\n";
  char buf[96];
  for (const auto& r : history) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g\n", r.epoch, r.train_loss,
                  r.dev_metric);
    os << buf;
  }
}

}  // namespace lexfly
