#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "lexfly/ops.hpp"
#include "lexfly/params.hpp"

namespace lexfly {

enum class CombineMode {
  TransformSum,    // e + e_d . W
  Sum,             // e + e_d
  ReplaceOov,      // e in vocab, else e_d (falls back to e when e_d is zero)
  Baseline,        // e only
  FixedRandomOov,  // e in vocab, else a per-word fixed random vector
};

inline const char* combine_mode_name(CombineMode m) {
  switch (m) {
    case CombineMode::TransformSum: return "transform_sum";
    case CombineMode::Sum: return "sum";
    case CombineMode::ReplaceOov: return "replace_oov";
    case CombineMode::Baseline: return "baseline";
    case CombineMode::FixedRandomOov: return "fixed_random_oov";
  }
  return "?";
}

struct CombinerConfig {
  CombineMode mode = CombineMode::Baseline;
  int d = 0;      // width of e
  int d_out = 0;  // width of e_d
  std::uint64_t seed = 0;  // fixed_random_oov generator seed

  void validate() const {
    if (d <= 0) throw ContractError("CombinerConfig: d must be positive");
    if ((mode == CombineMode::Sum || mode == CombineMode::ReplaceOov) &&
        d != d_out)
      throw ContractError(std::string("CombinerConfig: ") +
                          combine_mode_name(mode) + " requires d == d_out");
  }
};

// Merges the trainable embedding e(w) with the definition embedding e_d(w).
// Holds the optional transform W and the per-run cache of fixed random OOV
// vectors.
class Combiner {
 public:
  Combiner(CombinerConfig cfg, NodePtr transform = nullptr)
      : cfg_(cfg), transform_(std::move(transform)) {
    cfg_.validate();
    if (cfg_.mode == CombineMode::TransformSum) {
      if (!transform_)
        throw ContractError("Combiner: transform_sum requires W");
      if (transform_->value.rows() != cfg_.d_out ||
          transform_->value.cols() != cfg_.d)
        throw ShapeError("Combiner: W must be [" + std::to_string(cfg_.d_out) +
                         "x" + std::to_string(cfg_.d) + "], got " +
                         shape_str(transform_->value.shape()));
    }
  }

  static Combiner make(CombinerConfig cfg, ParamStore& store,
                       const std::string& prefix, Rng& rng) {
    NodePtr w;
    if (cfg.mode == CombineMode::TransformSum)
      w = store.add_uniform(prefix + ".w", {cfg.d_out, cfg.d}, rng);
    return Combiner(cfg, w);
  }

  const CombinerConfig& config() const { return cfg_; }
  NodePtr transform() const { return transform_; }

  // e [1 x d], e_d [1 x d_out] -> e_c [1 x d]
  NodePtr combine(const std::string& word, const NodePtr& e, const NodePtr& e_d,
                  bool in_vocab) {
    check_widths(e, e_d);
    switch (cfg_.mode) {
      case CombineMode::TransformSum:
        return add(e, matmul(e_d, transform_));
      case CombineMode::Sum:
        return add(e, e_d);
      case CombineMode::ReplaceOov:
        if (in_vocab) return e;
        // an all-zero e_d means "no definition"; keep the UNK path then
        return e_d->value.all_zero() ? e : e_d;
      case CombineMode::Baseline:
        return e;
      case CombineMode::FixedRandomOov:
        return in_vocab ? e : leaf(fixed_vector(word));
    }
    throw ContractError("Combiner: bad mode");
  }

  // Vectorized form over an occurrence batch: e_rows [n x d], ed_rows
  // [n x d_out], per-row vocab flags. Row i equals
  // combine(words[i], e_rows[i], ed_rows[i], in_vocab[i]).
  NodePtr combine_rows(const std::vector<std::string>& words,
                       const NodePtr& e_rows, const NodePtr& ed_rows,
                       const std::vector<bool>& in_vocab) {
    const int n = e_rows->value.rows();
    if (static_cast<int>(words.size()) != n ||
        static_cast<int>(in_vocab.size()) != n ||
        ed_rows->value.rows() != n)
      throw ContractError("combine_rows: row counts disagree");
    check_widths(e_rows, ed_rows);
    switch (cfg_.mode) {
      case CombineMode::TransformSum:
        return add(e_rows, matmul(ed_rows, transform_));
      case CombineMode::Sum:
        return add(e_rows, ed_rows);
      case CombineMode::ReplaceOov: {
        Tensor keep_e({n, 1}), keep_d({n, 1});
        for (int i = 0; i < n; ++i) {
          bool use_def = !in_vocab[i] && !row_all_zero(ed_rows->value, i);
          keep_e.at(i, 0) = use_def ? 0.0 : 1.0;
          keep_d.at(i, 0) = use_def ? 1.0 : 0.0;
        }
        return add(mul_rows(e_rows, leaf(keep_e)), mul_rows(ed_rows, leaf(keep_d)));
      }
      case CombineMode::Baseline:
        return e_rows;
      case CombineMode::FixedRandomOov: {
        Tensor keep_e({n, 1});
        Tensor random({n, cfg_.d});
        for (int i = 0; i < n; ++i) {
          keep_e.at(i, 0) = in_vocab[i] ? 1.0 : 0.0;
          if (!in_vocab[i]) {
            const Tensor& v = fixed_vector(words[i]);
            for (int j = 0; j < cfg_.d; ++j) random.at(i, j) = v.at(0, j);
          }
        }
        return add(mul_rows(e_rows, leaf(keep_e)), leaf(random));
      }
    }
    throw ContractError("Combiner: bad mode");
  }

  // Seed-deterministic vector for one OOV word, cached for the run.
  const Tensor& fixed_vector(const std::string& word) {
    auto it = cache_.find(word);
    if (it == cache_.end()) {
      Rng rng(cfg_.seed ^ fnv1a64(word));
      it = cache_.emplace(word, Tensor::uniform({1, cfg_.d}, rng)).first;
    }
    return it->second;
  }

 private:
  static bool row_all_zero(const Tensor& t, int row) {
    for (int j = 0; j < t.cols(); ++j)
      if (t.at(row, j) != 0.0) return false;
    return true;
  }

  void check_widths(const NodePtr& e, const NodePtr& e_d) const {
    if (e->value.cols() != cfg_.d)
      throw ShapeError("combine: e width " + shape_str(e->value.shape()) +
                       " != d " + std::to_string(cfg_.d));
    if (cfg_.mode != CombineMode::Baseline &&
        cfg_.mode != CombineMode::FixedRandomOov &&
        e_d->value.cols() != cfg_.d_out)
      throw ShapeError("combine: e_d width " + shape_str(e_d->value.shape()) +
                       " != d_out " + std::to_string(cfg_.d_out));
  }

  CombinerConfig cfg_;
  NodePtr transform_;
  std::unordered_map<std::string, Tensor> cache_;
};

}  // namespace lexfly
