#pragma once

#include <map>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "lexfly/dictionary.hpp"
#include "lexfly/lstm.hpp"
#include "lexfly/params.hpp"
#include "lexfly/vocab.hpp"

namespace lexfly {

enum class ReaderKind { MP, MPL, LSTM };

inline const char* reader_kind_name(ReaderKind k) {
  switch (k) {
    case ReaderKind::MP: return "mp";
    case ReaderKind::MPL: return "mpl";
    case ReaderKind::LSTM: return "lstm";
  }
  return "?";
}

struct ReaderConfig {
  ReaderKind kind = ReaderKind::MP;
  int d_emb = 0;
  int d_out = 0;
  bool share_embeddings = true;  // e' = e
  bool no_backprop = false;      // sever gradients through the reader
  const Vocabulary* vocab = nullptr;  // V_dict

  void validate() const {
    if (!vocab) throw ContractError("ReaderConfig: missing V_dict");
    if (d_emb <= 0 || d_out <= 0)
      throw ContractError("ReaderConfig: widths must be positive");
    if (kind == ReaderKind::MP && d_emb != d_out)
      throw ContractError("ReaderConfig: MP requires d_out == d_emb");
  }
};

// Trainable pieces of one reader. `table` may alias the task model's own
// embedding table (share_embeddings) or be reader-private.
struct ReaderParams {
  NodePtr table;        // e' [V_dict x d_emb]
  NodePtr transform;    // MP-L matrix [d_emb x d_out], row convention
  LSTMParams lstm;      // LSTM reader cell
};

inline ReaderParams make_reader_params(const ReaderConfig& cfg, ParamStore& store,
                                       const std::string& prefix, Rng& rng,
                                       NodePtr shared_table = nullptr,
                                       const LSTMParams* shared_lstm = nullptr) {
  cfg.validate();
  ReaderParams p;
  if (shared_table) {
    if (shared_table->value.cols() != cfg.d_emb)
      throw ShapeError("reader: shared table width " +
                       shape_str(shared_table->value.shape()) +
                       " != d_emb " + std::to_string(cfg.d_emb));
    p.table = shared_table;
  } else {
    p.table = store.add_uniform(prefix + ".emb", {cfg.vocab->size(), cfg.d_emb}, rng);
  }
  if (cfg.kind == ReaderKind::MPL)
    p.transform = store.add_uniform(prefix + ".v", {cfg.d_emb, cfg.d_out}, rng);
  if (cfg.kind == ReaderKind::LSTM) {
    if (shared_lstm) {
      if (shared_lstm->d_in != cfg.d_emb || shared_lstm->d != cfg.d_out)
        throw ShapeError("reader: shared LSTM dims do not match reader config");
      p.lstm = *shared_lstm;
    } else {
      p.lstm = make_lstm_params(store, prefix + ".lstm", cfg.d_emb, cfg.d_out, rng);
    }
  }
  return p;
}

inline std::vector<int> def_ids(const Definition& def, const Vocabulary& vocab) {
  std::vector<int> ids;
  ids.reserve(def.size());
  for (const auto& tok : def) ids.push_back(vocab.id(tok));
  return ids;
}

// e_d for a single definition:
//   MP    mean of token embeddings
//   MP-L  transform times that mean
//   LSTM  last hidden state after reading the tokens in order
inline NodePtr encode_definition(const Definition& def, const ReaderConfig& cfg,
                                 const ReaderParams& params) {
  cfg.validate();
  if (def.empty()) throw ContractError("encode_definition: empty definition");
  const std::vector<int> ids = def_ids(def, *cfg.vocab);
  NodePtr emb = embedding_lookup(params.table, ids);  // [k x d_emb]
  switch (cfg.kind) {
    case ReaderKind::MP:
      return mean_axis(emb, 0);
    case ReaderKind::MPL:
      return matmul(mean_axis(emb, 0), params.transform);
    case ReaderKind::LSTM: {
      LSTMState st = lstm_zero_state(1, cfg.d_out);
      for (std::size_t t = 0; t < ids.size(); ++t) {
        NodePtr x = embedding_lookup(params.table, {ids[t]});
        st = lstm_step(x, st.h, st.c, params.lstm);
      }
      return st.h;
    }
  }
  throw ContractError("encode_definition: bad reader kind");
}

// Mean of encode_definition over all definitions; no definitions -> zero
// vector.
inline NodePtr pool_definitions(const std::vector<Definition>& defs,
                                const ReaderConfig& cfg,
                                const ReaderParams& params) {
  if (defs.empty()) return leaf(Tensor::zeros({1, cfg.d_out}));
  NodePtr acc = encode_definition(defs[0], cfg, params);
  for (std::size_t i = 1; i < defs.size(); ++i)
    acc = add(acc, encode_definition(defs[i], cfg, params));
  NodePtr pooled = defs.size() > 1 ? scale(acc, 1.0 / defs.size()) : acc;
  return cfg.no_backprop ? detach(pooled) : pooled;
}

// Deduplicated padded batch of every definition needed for a word sequence,
// with a scatter map from word occurrences back to their definitions.
struct DefinitionBatch {
  std::vector<std::vector<int>> unique_ids;     // per unique def, token ids
  std::vector<int> lengths;                     // per unique def
  std::vector<std::vector<int>> scatter;        // occurrence -> unique indices
  std::vector<std::string> words;               // occurrence -> source word
  int lmax = 0;

  int unique_count() const { return static_cast<int>(unique_ids.size()); }
  int occurrence_count() const { return static_cast<int>(scatter.size()); }
};

enum class DefSource { Dict, Spelling, LemmaSpelling };

// Collects definitions for every occurrence, deduplicating identical token
// sequences across the whole batch. `dict` may be null for spelling-only
// sources. `collect`, when given, marks occurrences whose definitions are
// wanted; the rest get empty scatter lists (replace-OOV models skip in-vocab
// words this way). Deterministic: unique indices are assigned in
// first-encounter order.
inline DefinitionBatch build_definition_batch(
    const std::vector<std::string>& words, const Dictionary* dict,
    DefSource source, const Vocabulary& vocab,
    const LemmaRuleTable& lemmas = LemmaRuleTable::english(),
    int max_def_tokens = 32, const std::vector<bool>* collect = nullptr) {
  if (collect && collect->size() != words.size())
    throw ContractError("build_definition_batch: collect mask length mismatch");
  DefinitionBatch batch;
  batch.words = words;
  std::map<Definition, int> seen;
  std::unordered_map<std::string, std::vector<int>> word_cache;
  for (std::size_t wi = 0; wi < words.size(); ++wi) {
    const std::string& word = words[wi];
    if (collect && !(*collect)[wi]) {
      batch.scatter.emplace_back();
      continue;
    }
    auto cached = word_cache.find(word);
    if (cached != word_cache.end()) {
      batch.scatter.push_back(cached->second);
      continue;
    }
    std::vector<Definition> defs;
    switch (source) {
      case DefSource::Dict:
        if (dict) defs = lookup_definitions(*dict, word, lemmas);
        break;
      case DefSource::Spelling:
        if (!word.empty()) defs.push_back(spelling_definition(word));
        break;
      case DefSource::LemmaSpelling:
        if (!word.empty()) {
          // spelling of the lemmatized, lowercased form; falls back to the
          // lowercased word when no lemma rule applies
          const auto cands = lemmas.candidates(word);
          defs.push_back(spelling_definition(cands.size() > 1 ? cands[1] : cands[0]));
        }
        break;
    }
    std::vector<int> indices;
    for (auto& def : defs) {
      if (static_cast<int>(def.size()) > max_def_tokens)
        def.resize(max_def_tokens);
      auto [it, fresh] = seen.try_emplace(def, batch.unique_count());
      if (fresh) {
        batch.unique_ids.push_back(def_ids(def, vocab));
        batch.lengths.push_back(static_cast<int>(def.size()));
        batch.lmax = std::max(batch.lmax, static_cast<int>(def.size()));
      }
      indices.push_back(it->second);
    }
    word_cache.emplace(word, indices);
    batch.scatter.push_back(std::move(indices));
  }
  return batch;
}

// Encodes each unique definition once (masked over padding), then mean-pools
// each occurrence's definitions; empty scatter lists yield zero rows.
// Matches the sequential per-word path to within rounding.
inline NodePtr encode_batch(const DefinitionBatch& batch, const ReaderConfig& cfg,
                            const ReaderParams& params) {
  cfg.validate();
  const int occ = batch.occurrence_count();
  if (occ == 0) throw ContractError("encode_batch: empty batch");
  const int u = batch.unique_count();
  if (u == 0) return leaf(Tensor::zeros({occ, cfg.d_out}));

  // padded id matrix, pad id = UNK; mask guarantees pads contribute nothing
  std::vector<std::vector<int>> step_ids(batch.lmax, std::vector<int>(u, 0));
  std::vector<Tensor> step_mask(batch.lmax, Tensor({u, 1}));
  for (int r = 0; r < u; ++r)
    for (int t = 0; t < batch.lengths[r]; ++t) {
      step_ids[t][r] = batch.unique_ids[r][t];
      step_mask[t].at(r, 0) = 1.0;
    }

  NodePtr encoded;  // [u x d_out]
  if (cfg.kind == ReaderKind::MP || cfg.kind == ReaderKind::MPL) {
    NodePtr acc = leaf(Tensor::zeros({u, cfg.d_emb}));
    for (int t = 0; t < batch.lmax; ++t) {
      NodePtr emb = embedding_lookup(params.table, step_ids[t]);
      acc = add(acc, mul_rows(emb, leaf(step_mask[t])));
    }
    Tensor inv_len({u, 1});
    for (int r = 0; r < u; ++r) inv_len.at(r, 0) = 1.0 / batch.lengths[r];
    NodePtr mean = mul_rows(acc, leaf(inv_len));
    encoded = cfg.kind == ReaderKind::MP ? mean : matmul(mean, params.transform);
  } else {
    LSTMState st = lstm_zero_state(u, cfg.d_out);
    for (int t = 0; t < batch.lmax; ++t) {
      NodePtr x = embedding_lookup(params.table, step_ids[t]);
      LSTMState next = lstm_step(x, st.h, st.c, params.lstm);
      NodePtr m = leaf(step_mask[t]);
      Tensor inv_mask = step_mask[t];
      for (auto& v : inv_mask.data()) v = 1.0 - v;
      NodePtr im = leaf(inv_mask);
      // rows past their length keep the previous state exactly
      st.h = add(mul_rows(next.h, m), mul_rows(st.h, im));
      st.c = add(mul_rows(next.c, m), mul_rows(st.c, im));
    }
    encoded = st.h;
  }

  NodePtr pooled = scatter_mean_rows(encoded, batch.scatter);
  return cfg.no_backprop ? detach(pooled) : pooled;
}

}  // namespace lexfly
