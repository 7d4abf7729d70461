#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lexfly/embedder.hpp"
#include "lexfly/lstm.hpp"

namespace lexfly {

// Parameter sharing between the text LSTM and the dictionary reader:
//   Dict1  one LSTM reads both the text and the definitions
//   Dict2  separate reader LSTM, word embeddings still shared
enum class LMVariant { Dict1, Dict2 };

// Next-token model with a restricted softmax: the output layer only scores
// V_out; rarer targets collapse to UNK for the loss. Input-side embeddings
// come from the aux embedder (OOV words fall back to definitions/spelling
// when configured).
struct LMConfig {
  int d_emb = 32;
  int d_hidden = 64;
  LMVariant variant = LMVariant::Dict2;
  AuxSpec aux;
};

class LMModel {
 public:
  LMModel(const LMConfig& cfg, const Vocabulary& v_in, const Vocabulary& v_out,
          const Vocabulary* v_dict, const Vocabulary* v_char,
          const Dictionary* dict, std::uint64_t seed)
      : cfg_(cfg), rng_(seed), v_in_(&v_in), v_out_(&v_out) {
    emb_ = store_.add_uniform("emb", {v_in.size(), cfg_.d_emb}, rng_);
    rnn_ = make_lstm_params(store_, "rnn", cfg_.d_emb, cfg_.d_hidden, rng_);
    const bool dict1 = cfg_.variant == LMVariant::Dict1 &&
                       (cfg_.aux.source == AuxSource::Dict ||
                        cfg_.aux.source == AuxSource::DictSpelling);
    AuxSpec aux = cfg_.aux;
    if (dict1) {
      if (aux.dict_reader != ReaderKind::LSTM)
        throw ContractError("LMModel: dict1 shares the text LSTM, reader must be lstm");
      aux.d_out = cfg_.d_hidden;
      if (aux.combiner == CombineMode::Sum ||
          aux.combiner == CombineMode::ReplaceOov) {
        if (cfg_.d_emb != cfg_.d_hidden)
          throw ContractError(
              "LMModel: dict1 with sum/replace combiner needs d_emb == d_hidden");
      }
    }
    embedder_ = std::make_unique<AuxEmbedder>(
        aux, cfg_.d_emb, v_in, v_dict, v_char, dict, emb_, store_, "aux", rng_,
        dict1 ? &rnn_ : nullptr);
    out_w_ = store_.add_uniform("out.w", {cfg_.d_hidden, v_out.size()}, rng_);
    out_b_ = store_.add_uniform("out.b", {1, v_out.size()}, rng_);
  }

  ParamStore& params() { return store_; }
  AuxEmbedder& embedder() { return *embedder_; }
  const LMConfig& config() const { return cfg_; }
  const Vocabulary& v_in() const { return *v_in_; }
  const Vocabulary& v_out() const { return *v_out_; }

  // Per-position log-probability rows for one stream: row t scores the
  // distribution of tokens[t+1]. [T-1 x |V_out|]
  NodePtr forward_logprobs(const std::vector<std::string>& tokens) {
    if (tokens.size() < 2)
      throw ContractError("lm_forward: need at least 2 tokens, got " +
                          std::to_string(tokens.size()));
    std::vector<std::string> inputs(tokens.begin(), tokens.end() - 1);
    NodePtr e = embedder_->embed(inputs);  // [T-1 x d_emb]
    std::vector<NodePtr> hs = lstm_run(split_rows(e), rnn_);
    NodePtr logits = add_rows(matmul(stack_rows(hs), out_w_), out_b_);
    return log_softmax_rows(logits);
  }

  NodePtr forward_loss(const std::vector<std::string>& tokens) {
    if (tokens.size() < 2)
      throw ContractError("lm loss: need at least 2 tokens");
    std::vector<std::string> inputs(tokens.begin(), tokens.end() - 1);
    NodePtr e = embedder_->embed(inputs);
    std::vector<NodePtr> hs = lstm_run(split_rows(e), rnn_);
    NodePtr logits = add_rows(matmul(stack_rows(hs), out_w_), out_b_);
    std::vector<int> targets;
    for (std::size_t t = 1; t < tokens.size(); ++t)
      targets.push_back(v_out_->id(tokens[t]));
    return cross_entropy_with_logits(logits, targets);
  }

  // Truncated-BPTT chunk over B parallel streams. `inputs` and `targets` are
  // t-major (step t occupies indices [t*B, (t+1)*B)); state carries across
  // chunks detached.
  NodePtr chunk_loss(const std::vector<std::string>& inputs,
                     const std::vector<int>& target_ids, int batch, int steps,
                     LSTMState* state) {
    if (batch < 1 || steps < 1 ||
        inputs.size() != static_cast<std::size_t>(batch) * steps ||
        target_ids.size() != inputs.size())
      throw ContractError("lm chunk_loss: inconsistent chunk layout");
    NodePtr e = embedder_->embed(inputs);  // [B*L x d_emb]
    LSTMState st = state && state->h ? *state
                                     : lstm_zero_state(batch, cfg_.d_hidden);
    NodePtr total;
    for (int t = 0; t < steps; ++t) {
      std::vector<int> rows(batch);
      for (int b = 0; b < batch; ++b) rows[b] = t * batch + b;
      NodePtr x = embedding_lookup(e, rows);
      st = lstm_step(x, st.h, st.c, rnn_);
      NodePtr logits = add_rows(matmul(st.h, out_w_), out_b_);
      std::vector<int> tgt(target_ids.begin() + t * batch,
                           target_ids.begin() + (t + 1) * batch);
      NodePtr ce = cross_entropy_with_logits(logits, tgt);
      total = total ? add(total, ce) : ce;
    }
    if (state) {
      state->h = leaf(st.h->value);  // detach across chunks
      state->c = leaf(st.c->value);
    }
    return steps > 1 ? scale(total, 1.0 / steps) : total;
  }

  // Forward-only scoring of a token stream in bounded chunks. Returns one
  // log-probability per scored position (targets tokens[1..]) plus the
  // in-vocabulary flag of each scored position's *input* token, which is
  // what the after-OOV perplexity filters on.
  struct StreamScores {
    std::vector<double> logprobs;
    std::vector<bool> prev_in_vocab;
  };

  StreamScores score_stream(const std::vector<std::string>& tokens,
                            int chunk_len = 64) {
    if (tokens.size() < 2)
      throw ContractError("lm score_stream: need at least 2 tokens");
    StreamScores out;
    LSTMState st = lstm_zero_state(1, cfg_.d_hidden);
    const std::size_t positions = tokens.size() - 1;
    for (std::size_t base = 0; base < positions; base += chunk_len) {
      const std::size_t len = std::min<std::size_t>(chunk_len, positions - base);
      std::vector<std::string> inputs(tokens.begin() + base,
                                      tokens.begin() + base + len);
      NodePtr e = embedder_->embed(inputs);
      for (std::size_t t = 0; t < len; ++t) {
        NodePtr x = embedding_lookup(e, {static_cast<int>(t)});
        st = lstm_step(x, st.h, st.c, rnn_);
        NodePtr lp = log_softmax_rows(add_rows(matmul(st.h, out_w_), out_b_));
        const int tgt = v_out_->id(tokens[base + t + 1]);
        out.logprobs.push_back(lp->value.at(0, tgt));
        out.prev_in_vocab.push_back(v_in_->contains(tokens[base + t]));
      }
      NodePtr anchor = st.h;
      st = {leaf(st.h->value), leaf(st.c->value)};
      release_graph(anchor);  // keep memory bounded on long streams
    }
    return out;
  }

 private:
  LMConfig cfg_;
  Rng rng_;
  ParamStore store_;
  const Vocabulary* v_in_;
  const Vocabulary* v_out_;
  NodePtr emb_;
  std::unique_ptr<AuxEmbedder> embedder_;
  LSTMParams rnn_;
  NodePtr out_w_, out_b_;
};

}  // namespace lexfly
