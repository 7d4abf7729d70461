#pragma once

#include <string>
#include <vector>

#include "lexfly/combiner.hpp"
#include "lexfly/defreader.hpp"
#include "lexfly/dictionary.hpp"
#include "lexfly/params.hpp"
#include "lexfly/vocab.hpp"

namespace lexfly {

enum class AuxSource { None, Dict, Spelling, DictSpelling, LemmaLowercase, FixedRandom };

inline const char* aux_source_name(AuxSource s) {
  switch (s) {
    case AuxSource::None: return "none";
    case AuxSource::Dict: return "dict";
    case AuxSource::Spelling: return "spelling";
    case AuxSource::DictSpelling: return "dict+spelling";
    case AuxSource::LemmaLowercase: return "lemma+lowercase";
    case AuxSource::FixedRandom: return "fixed-random";
  }
  return "?";
}

// How auxiliary data feeds a task model: which sources, which reader for the
// dictionary, how e and e_d are merged.
struct AuxSpec {
  AuxSource source = AuxSource::None;
  ReaderKind dict_reader = ReaderKind::MP;
  CombineMode combiner = CombineMode::Baseline;
  bool share_embeddings = true;  // dict reader e' = task e
  bool no_backprop = false;      // sever gradients through the readers (D1)
  bool restricted = false;       // use aux only for words with a dict entry
  int d_out = 0;                 // reader output width; 0 -> d_emb
  std::uint64_t fixed_seed = 1;  // fixed-random OOV vectors
};

// Turns token sequences into combined embedding rows e_c(w). Owns the
// definition readers and the combiner; the base table e may be shared with
// the caller. When both dictionary and spelling are enabled, an LSTM reads
// the spelling and the configured reader reads the dictionary, and their
// outputs are summed before combination.
class AuxEmbedder {
 public:
  AuxEmbedder(const AuxSpec& spec, int d_emb, const Vocabulary& v_train,
              const Vocabulary* v_dict, const Vocabulary* v_char,
              const Dictionary* dict, NodePtr e_table, ParamStore& store,
              const std::string& prefix, Rng& rng,
              const LSTMParams* shared_dict_lstm = nullptr,
              int max_def_tokens = 32)
      : spec_(spec),
        d_emb_(d_emb),
        v_train_(&v_train),
        dict_(dict),
        e_table_(std::move(e_table)),
        max_def_tokens_(max_def_tokens) {
    const int d_out = spec_.d_out > 0 ? spec_.d_out : d_emb;
    if (uses_dict()) {
      if (!dict_) throw ContractError("AuxEmbedder: aux source needs a dictionary");
      dict_cfg_.kind = spec_.dict_reader;
      dict_cfg_.d_emb = d_emb;
      dict_cfg_.d_out = d_out;
      dict_cfg_.share_embeddings = spec_.share_embeddings;
      dict_cfg_.no_backprop = spec_.no_backprop;
      dict_cfg_.vocab = spec_.share_embeddings ? v_train_ : v_dict;
      if (!dict_cfg_.vocab)
        throw ContractError("AuxEmbedder: separate reader embeddings need a V_dict");
      dict_reader_ = make_reader_params(
          dict_cfg_, store, prefix + ".dict_reader", rng,
          spec_.share_embeddings ? e_table_ : nullptr, shared_dict_lstm);
    }
    if (uses_spelling()) {
      if (!v_char) throw ContractError("AuxEmbedder: spelling needs a character vocabulary");
      spell_cfg_.kind = ReaderKind::LSTM;
      spell_cfg_.d_emb = d_emb;
      spell_cfg_.d_out = d_out;
      spell_cfg_.share_embeddings = false;  // characters have their own table
      spell_cfg_.no_backprop = spec_.no_backprop;
      spell_cfg_.vocab = v_char;
      spell_reader_ =
          make_reader_params(spell_cfg_, store, prefix + ".spell_reader", rng);
    }
    CombinerConfig ccfg;
    ccfg.mode = spec_.combiner;
    ccfg.d = d_emb;
    ccfg.d_out = d_out;
    ccfg.seed = spec_.fixed_seed;
    combiner_ = Combiner::make(ccfg, store, prefix + ".combine", rng);
  }

  bool uses_dict() const {
    return spec_.source == AuxSource::Dict || spec_.source == AuxSource::DictSpelling;
  }
  bool uses_spelling() const {
    return spec_.source == AuxSource::Spelling ||
           spec_.source == AuxSource::DictSpelling ||
           spec_.source == AuxSource::LemmaLowercase;
  }

  Combiner& combiner() { return combiner_; }
  const ReaderConfig& dict_reader_config() const { return dict_cfg_; }
  const ReaderParams& dict_reader_params() const { return dict_reader_; }

  // Combined embeddings for a word sequence, [n x d_emb].
  NodePtr embed(const std::vector<std::string>& words) {
    if (words.empty()) throw ContractError("AuxEmbedder::embed: no words");
    const int n = static_cast<int>(words.size());
    std::vector<int> ids(words.size());
    std::vector<bool> in_vocab(words.size());
    for (std::size_t i = 0; i < words.size(); ++i) {
      ids[i] = v_train_->id(words[i]);
      in_vocab[i] = v_train_->contains(words[i]);
    }
    NodePtr base = embedding_lookup(e_table_, ids);

    NodePtr e_d = aux_rows(words);
    if (spec_.restricted && e_d) {
      // keep aux only where a dictionary entry exists
      Tensor keep({n, 1});
      for (int i = 0; i < n; ++i)
        keep.at(i, 0) = has_dict_entry(words[i]) ? 1.0 : 0.0;
      e_d = mul_rows(e_d, leaf(keep));
    }
    if (!e_d)
      e_d = leaf(Tensor::zeros({n, combiner_.config().d_out > 0
                                       ? combiner_.config().d_out
                                       : d_emb_}));
    return combiner_.combine_rows(words, base, e_d, in_vocab);
  }

  // Definition embedding rows only (what cmd_export writes), zero rows when
  // no source covers a word.
  NodePtr aux_rows(const std::vector<std::string>& words) {
    NodePtr e_d;
    const bool oov_only = spec_.combiner == CombineMode::ReplaceOov;
    std::vector<bool> collect(words.size(), true);
    if (oov_only)
      for (std::size_t i = 0; i < words.size(); ++i)
        collect[i] = !v_train_->contains(words[i]);
    if (uses_dict()) {
      DefinitionBatch b = build_definition_batch(
          words, dict_, DefSource::Dict, *dict_cfg_.vocab,
          LemmaRuleTable::english(), max_def_tokens_, &collect);
      e_d = encode_batch(b, dict_cfg_, dict_reader_);
    }
    if (uses_spelling()) {
      const DefSource src = spec_.source == AuxSource::LemmaLowercase
                                ? DefSource::LemmaSpelling
                                : DefSource::Spelling;
      DefinitionBatch b = build_definition_batch(
          words, nullptr, src, *spell_cfg_.vocab, LemmaRuleTable::english(),
          max_def_tokens_, &collect);
      NodePtr spell = encode_batch(b, spell_cfg_, spell_reader_);
      e_d = e_d ? add(e_d, spell) : spell;
    }
    return e_d;  // null when no aux source is active
  }

  bool has_dict_entry(const std::string& word) const {
    return dict_ && !lookup_definitions(*dict_, word).empty();
  }

 private:
  AuxSpec spec_;
  int d_emb_;
  const Vocabulary* v_train_;
  const Dictionary* dict_;
  NodePtr e_table_;
  int max_def_tokens_;
  ReaderConfig dict_cfg_, spell_cfg_;
  ReaderParams dict_reader_, spell_reader_;
  Combiner combiner_{CombinerConfig{CombineMode::Baseline, 1, 1, 0}, nullptr};
};

// Character vocabulary for spelling readers: code points of the corpus
// tokens, frequency-ranked.
inline Vocabulary build_char_vocab(const std::vector<std::string>& corpus,
                                   int size = 128) {
  std::vector<std::string> chars;
  for (const auto& tok : corpus)
    for (auto& c : utf8_chars(tok)) chars.push_back(std::move(c));
  return build_train_vocab(chars, size);
}

}  // namespace lexfly
