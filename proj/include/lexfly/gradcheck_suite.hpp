#pragma once

#include <functional>
#include <string>
#include <vector>

#include "lexfly/gradcheck.hpp"
#include "lexfly/models/esim.hpp"
#include "lexfly/models/lm.hpp"
#include "lexfly/models/qa.hpp"

// End-to-end finite-difference checks: every primitive plus each full model
// (with dict+spelling readers) on tiny instances, gradients taken with
// respect to every parameter scalar.

namespace lexfly {

struct SuiteOutcome {
  int checked = 0;
  int failed = 0;
  double worst = 0.0;
  std::vector<std::string> failures;

  void absorb(const std::string& label, const GradCheck& res, double tol) {
    ++checked;
    worst = std::max(worst, res.max_rel_err);
    if (!res.pass(tol)) {
      ++failed;
      failures.push_back(label + " rel_err=" + std::to_string(res.max_rel_err));
    }
  }
};

namespace gradsuite {

// A micro world shared by the model checks: 12-word vocabulary, 3 rare words
// with definitions.
struct TinyWorld {
  Dictionary dict;
  Vocabulary v_train;
  Vocabulary v_char;
  std::vector<std::string> sentence{"rx", "b", "c", "ry"};

  TinyWorld() {
    dict.add("rx", {"b", "c"});
    dict.add("ry", {"a"});
    dict.add("rz", {"c"});
    std::vector<std::string> corpus{"a", "b", "c", "d", "e", "f"};
    v_train = Vocabulary(corpus);
    v_char = build_char_vocab({"rx", "ry", "rz", "a", "b", "c", "d", "e", "f"}, 32);
  }

  AuxSpec aux() const {
    AuxSpec s;
    s.source = AuxSource::DictSpelling;
    s.dict_reader = ReaderKind::MPL;
    s.combiner = CombineMode::TransformSum;
    s.share_embeddings = true;
    return s;
  }
};

inline GradCheck check_model(ParamStore& store,
                             const std::function<NodePtr()>& build_loss) {
  std::vector<NodePtr> inputs;
  for (const auto& [name, node] : store.items()) inputs.push_back(node);
  return gradcheck(inputs, build_loss);
}

}  // namespace gradsuite

inline SuiteOutcome gradcheck_ops(std::uint64_t seed, double tol = 1e-4,
                                  int cases = 20) {
  SuiteOutcome out;
  for (int cs = 0; cs < cases; ++cs) {
    Rng rng(seed * 1000 + cs);
    const int n = 1 + static_cast<int>(rng.below(3));
    const int m = 1 + static_cast<int>(rng.below(4));
    const int k = 1 + static_cast<int>(rng.below(3));
    auto a = leaf(Tensor::uniform({n, m}, rng, -2, 2));
    auto b = leaf(Tensor::uniform({n, m}, rng, -2, 2));
    auto w = leaf(Tensor::uniform({m, k}, rng, -2, 2));
    auto bias = leaf(Tensor::uniform({1, m}, rng, -2, 2));
    auto col = leaf(Tensor::uniform({n, 1}, rng, -2, 2));
    Tensor mask({n, m});
    for (auto& v : mask.data()) v = rng.uniform() < 0.7 ? 1.0 : 0.0;
    std::vector<int> targets;
    for (int i = 0; i < n; ++i) targets.push_back(static_cast<int>(rng.below(m)));
    // all loss weights drawn up front: the builders below must be pure
    // functions of the checked inputs
    Tensor weights = Tensor::uniform({n, m}, rng, -1, 1);
    Tensor weights_k = Tensor::uniform({n, k}, rng, -1, 1);
    Tensor weights_t = Tensor::uniform({m, n}, rng, -1, 1);
    Tensor weights_row = Tensor::uniform({1, m}, rng, -1, 1);
    Tensor weights_emb = Tensor::uniform({4, m}, rng, -1, 1);
    Tensor weights_sc = Tensor::uniform({3, m}, rng, -1, 1);
    Tensor weights_h = Tensor::uniform({1, k}, rng, -1, 1);

    auto wsum = [&](const NodePtr& x, const Tensor& ww) {
      return sum_all(mul(x, leaf(ww)));
    };
    auto check = [&](const char* label, std::vector<NodePtr> inputs,
                     const std::function<NodePtr()>& f) {
      out.absorb(label, gradcheck(inputs, f), tol);
    };

    check("add", {a, b}, [&] { return wsum(add(a, b), weights); });
    check("sub", {a, b}, [&] { return wsum(sub(a, b), weights); });
    check("mul", {a, b}, [&] { return wsum(mul(a, b), weights); });
    check("scale", {a}, [&] { return wsum(scale(a, 2.5), weights); });
    check("sigmoid", {a}, [&] { return wsum(sigmoid(a), weights); });
    check("tanh", {a}, [&] { return wsum(tanh_op(a), weights); });
    check("matmul", {a, w}, [&] { return wsum(matmul(a, w), weights_k); });
    check("transpose", {a}, [&] { return wsum(transpose(a), weights_t); });
    check("add_rows", {a, bias}, [&] { return wsum(add_rows(a, bias), weights); });
    check("mul_rows", {a, col}, [&] { return wsum(mul_rows(a, col), weights); });
    check("mean_axis0", {a}, [&] { return wsum(mean_axis(a, 0), weights_row); });
    check("sum_all", {a}, [&] { return sum_all(a); });
    check("softmax_rows", {a}, [&] { return wsum(softmax_rows(a), weights); });
    check("log_softmax_rows", {a},
          [&] { return wsum(log_softmax_rows(a), weights); });
    check("masked_softmax_rows", {a},
          [&] { return wsum(masked_softmax_rows(a, mask), weights); });
    check("cross_entropy", {a},
          [&] { return cross_entropy_with_logits(a, targets); });
    {
      auto table = leaf(Tensor::uniform({4, m}, rng, -2, 2));
      std::vector<int> ids{0, 3, 3, 1};
      check("embedding_lookup", {table},
            [&] { return wsum(embedding_lookup(table, ids), weights_emb); });
      std::vector<std::vector<int>> groups{{0, 1}, {}, {2, 2, 3}};
      check("scatter_mean_rows", {table},
            [&] { return wsum(scatter_mean_rows(table, groups), weights_sc); });
    }
    {
      ParamStore store;
      Rng lrng(seed * 77 + cs);
      LSTMParams p = make_lstm_params(store, "cell", m, k, lrng);
      auto x = leaf(Tensor::uniform({1, m}, lrng, -1, 1));
      auto h = leaf(Tensor::uniform({1, k}, lrng, -1, 1));
      auto c = leaf(Tensor::uniform({1, k}, lrng, -1, 1));
      check("lstm_step", {p.wx, p.wh, p.b, x, h, c}, [&] {
        auto st = lstm_step(x, h, c, p);
        return wsum(st.h, weights_h);
      });
    }
  }
  return out;
}

inline SuiteOutcome gradcheck_models(std::uint64_t seed, double tol = 1e-4,
                                     int cases = 20) {
  using namespace gradsuite;
  SuiteOutcome out;
  TinyWorld world;
  for (int cs = 0; cs < cases; ++cs) {
    const std::uint64_t s = seed * 31 + cs;
    {
      LMConfig cfg;
      cfg.d_emb = 4;
      cfg.d_hidden = 4;
      cfg.aux = world.aux();
      cfg.aux.combiner = CombineMode::ReplaceOov;
      cfg.aux.d_out = 4;
      LMModel model(cfg, world.v_train, world.v_train, nullptr, &world.v_char,
                    &world.dict, s);
      out.absorb("lm", check_model(model.params(), [&] {
                   return model.forward_loss(world.sentence);
                 }),
                 tol);
    }
    {
      ESIMConfig cfg;
      cfg.d = 4;
      cfg.aux = world.aux();
      ESIMModel model(cfg, world.v_train, nullptr, &world.v_char, &world.dict, s);
      out.absorb("esim", check_model(model.params(), [&] {
                   return model.loss({"a", "rx"}, {"b", "ry", "c"}, 1);
                 }),
                 tol);
    }
    {
      QAConfig cfg;
      cfg.d = 4;
      cfg.aux = world.aux();
      QAModel model(cfg, world.v_train, nullptr, &world.v_char, &world.dict, s);
      out.absorb("qa", check_model(model.params(), [&] {
                   return model.loss({"a", "rx", "b"}, {"c", "ry"}, 1, 2);
                 }),
                 tol);
    }
  }
  return out;
}

}  // namespace lexfly
