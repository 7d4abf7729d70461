#pragma once

#include <memory>
#include <string>
#include <vector>

#include "lexfly/embedder.hpp"
#include "lexfly/lstm.hpp"

namespace lexfly {

// ESIM-style entailment classifier over a biLSTM (no tree composition).
// Hypothesis H [n x d] and premise P [m x d] share one encoder; alignment
// matrices come from row softmaxes of the affinity H.P^T; joint features
// [X, A.Y, X - A.Y, X * A.Y] are width 4d; a shared composition biLSTM's
// final states feed a single-hidden-layer Tanh MLP with 3 outputs.
struct ESIMConfig {
  int d = 32;  // encoder output width (each direction d/2)
  AuxSpec aux;
};

struct ESIMResult {
  NodePtr logits;       // [1 x 3]
  int feature_width = 0;
  Tensor align_h;       // A_H [n x m]
  Tensor align_p;       // A_P [m x n]
};

class ESIMModel {
 public:
  static constexpr int kClasses = 3;

  ESIMModel(const ESIMConfig& cfg, const Vocabulary& v_train,
            const Vocabulary* v_dict, const Vocabulary* v_char,
            const Dictionary* dict, std::uint64_t seed)
      : cfg_(cfg), rng_(seed) {
    if (cfg_.d % 2 != 0) throw ContractError("ESIMModel: d must be even");
    const int d = cfg_.d;
    emb_ = store_.add_uniform("emb", {v_train.size(), d}, rng_);
    embedder_ = std::make_unique<AuxEmbedder>(cfg_.aux, d, v_train, v_dict,
                                              v_char, dict, emb_, store_,
                                              "aux", rng_);
    enc_ = make_bilstm_params(store_, "enc", d, d / 2, rng_);
    comp_ = make_bilstm_params(store_, "comp", 4 * d, d / 2, rng_);
    mlp_w1_ = store_.add_uniform("head.w1", {2 * d, d}, rng_);
    mlp_b1_ = store_.add_uniform("head.b1", {1, d}, rng_);
    mlp_w2_ = store_.add_uniform("head.w2", {d, kClasses}, rng_);
    mlp_b2_ = store_.add_uniform("head.b2", {1, kClasses}, rng_);
  }

  ParamStore& params() { return store_; }
  AuxEmbedder& embedder() { return *embedder_; }
  const ESIMConfig& config() const { return cfg_; }

  ESIMResult forward(const std::vector<std::string>& premise,
                     const std::vector<std::string>& hypothesis) {
    if (premise.empty() || hypothesis.empty())
      throw ContractError("esim_forward: premise and hypothesis must be nonempty");
    NodePtr h_mat = bilstm_encode(split_rows(embedder_->embed(hypothesis)), enc_).states;
    NodePtr p_mat = bilstm_encode(split_rows(embedder_->embed(premise)), enc_).states;

    NodePtr affinity = matmul(h_mat, transpose(p_mat));  // [n x m]
    NodePtr a_h = softmax_rows(affinity);                // over premise positions
    NodePtr a_p = softmax_rows(transpose(affinity));     // over hypothesis positions

    NodePtr feats_h = joint_features(h_mat, matmul(a_h, p_mat));  // [n x 4d]
    NodePtr feats_p = joint_features(p_mat, matmul(a_p, h_mat));  // [m x 4d]

    BiLSTMOut comp_h = bilstm_encode(split_rows(feats_h), comp_);
    BiLSTMOut comp_p = bilstm_encode(split_rows(feats_p), comp_);
    NodePtr summary = concat_cols(
        {comp_h.fwd_last, comp_h.bwd_last, comp_p.fwd_last, comp_p.bwd_last});

    NodePtr hidden = tanh_op(add_rows(matmul(summary, mlp_w1_), mlp_b1_));
    ESIMResult res;
    res.logits = add_rows(matmul(hidden, mlp_w2_), mlp_b2_);
    res.feature_width = feats_h->value.cols();
    res.align_h = a_h->value;
    res.align_p = a_p->value;
    return res;
  }

  NodePtr loss(const std::vector<std::string>& premise,
               const std::vector<std::string>& hypothesis, int label) {
    if (label < 0 || label >= kClasses)
      throw ContractError("esim loss: label " + std::to_string(label) +
                          " outside [0, 3)");
    return cross_entropy_with_logits(forward(premise, hypothesis).logits, {label});
  }

  static int predict(const ESIMResult& res) {
    int best = 0;
    for (int j = 1; j < kClasses; ++j)
      if (res.logits->value.at(0, j) > res.logits->value.at(0, best)) best = j;
    return best;
  }

 private:
  static NodePtr joint_features(const NodePtr& x, const NodePtr& aligned) {
    return concat_cols({x, aligned, sub(x, aligned), mul(x, aligned)});
  }

  ESIMConfig cfg_;
  Rng rng_;
  ParamStore store_;
  NodePtr emb_;
  std::unique_ptr<AuxEmbedder> embedder_;
  BiLSTMParams enc_, comp_;
  NodePtr mlp_w1_, mlp_b1_, mlp_w2_, mlp_b2_;
};

}  // namespace lexfly
