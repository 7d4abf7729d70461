#pragma once

#include <fstream>
#include <map>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "lexfly/errors.hpp"
#include "lexfly/rng.hpp"

// Deterministic desk-scale corpus generators. The shared mechanism: a pool
// of frequent tokens with learnable successor structure, plus a pool of rare
// tokens that never make it into V_train. Every rare token has a frequent
// synonym and a dictionary entry mapping it to that synonym, so a model that
// reads definitions can recover exactly the signal the baseline loses to
// UNK.

namespace lexfly::datagen {

struct SyntheticSpec {
  std::uint64_t seed = 1;
  int n_frequent = 199;  // frequent pool size
  int n_rare = 100;      // rare pool size, each with a synonym definition
  // lm sizes (tokens per split)
  int lm_train_tokens = 50000;
  int lm_dev_tokens = 5000;
  int lm_test_tokens = 5000;
  double rare_rate = 0.08;    // chance of inserting a rare word per position
  double chain_rate = 0.85;   // chance of following the successor chain
  // nli / qa sizes (examples per split)
  int n_train = 2000;
  int n_dev = 600;
  int n_test = 600;
  double rare_example_rate = 0.5;  // dev/test examples built around a rare word
  // "synonym": each rare word is defined by its frequent synonym.
  // "code": definitions are two-word codes over definition-only words, so
  // reading them usefully requires training the reader embeddings.
  std::string def_style = "synonym";

  void validate() const {
    if (def_style != "synonym" && def_style != "code")
      throw ContractError("SyntheticSpec: def_style must be synonym or code");
    if (n_frequent < 8 || n_rare < 1)
      throw ContractError("SyntheticSpec: pools too small");
    if (rare_rate < 0.0 || rare_rate >= 1.0)
      throw ContractError("SyntheticSpec: rare_rate out of range");
  }
};

inline std::string frequent_token(int i) { return "w" + std::to_string(i); }
inline std::string rare_token(int i) { return "zq" + std::to_string(i); }
inline std::string def_word(int i) { return "dw" + std::to_string(i); }

// rare i -> frequent synonym. Injective and seed-deterministic: each rare
// word stands for a distinct frequent "concept", which keeps the label
// posterior given only the frequent side exactly uniform in the NLI and QA
// generators (no shortcut for a model that cannot read definitions).
inline std::vector<int> synonym_map(const SyntheticSpec& spec) {
  if (spec.n_rare > spec.n_frequent)
    throw ContractError("synonym_map: more rare words than frequent synonyms");
  Rng rng(spec.seed ^ 0x5e5e5e5eULL);
  std::vector<int> pool(spec.n_frequent);
  for (int i = 0; i < spec.n_frequent; ++i) pool[i] = i;
  rng.shuffle(pool);
  return std::vector<int>(pool.begin(), pool.begin() + spec.n_rare);
}

// fixed-point-free permutation of [0, n)
inline std::vector<int> derangement(int n, Rng& rng) {
  std::vector<int> p(n);
  for (int i = 0; i < n; ++i) p[i] = i;
  if (n < 2) return p;
  while (true) {
    rng.shuffle(p);
    bool ok = true;
    for (int i = 0; i < n; ++i) ok &= (p[i] != i);
    if (ok) return p;
  }
}

// Two-word codes over a small definition-only alphabet, one distinct
// (ordered) pair per rare word. Pairs share components, so mean-pooled codes
// from an untrained table are confusable; a trained reader separates them.
inline std::vector<std::pair<int, int>> code_definitions(const SyntheticSpec& spec) {
  int alphabet = 2;
  while (alphabet * (alphabet - 1) < spec.n_rare) ++alphabet;
  std::vector<std::pair<int, int>> pairs;
  for (int a = 0; a < alphabet; ++a)
    for (int b = 0; b < alphabet; ++b)
      if (a != b) pairs.emplace_back(a, b);
  Rng rng(spec.seed ^ 0xc0deULL);
  rng.shuffle(pairs);
  pairs.resize(spec.n_rare);
  return pairs;
}

inline void write_dictionary_tsv(const std::string& path,
                                 const SyntheticSpec& spec) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ParseError("cannot open " + path + " for writing");
  if (spec.def_style == "code") {
    os << "# synthetic dictionary: rare word -> definition-word code\n";
    const auto codes = code_definitions(spec);
    for (int i = 0; i < spec.n_rare; ++i)
      os << rare_token(i) << '\t' << def_word(codes[i].first) << ' '
         << def_word(codes[i].second) << '\n';
  } else {
    os << "# synthetic dictionary: rare word -> frequent synonym\n";
    const auto syn = synonym_map(spec);
    for (int i = 0; i < spec.n_rare; ++i)
      os << rare_token(i) << '\t' << frequent_token(syn[i]) << '\n';
  }
}

// ------------------------------------------------------------------------ lm

struct LMCorpus {
  std::vector<std::string> train, dev, test;
};

// Token streams where every frequent token has a fixed successor and the
// token after a rare word is the successor of its *synonym*. Definitions
// therefore carry exactly the predictive signal the baseline cannot see.
inline LMCorpus gen_lm_corpus(const SyntheticSpec& spec) {
  spec.validate();
  const auto syn = synonym_map(spec);
  // fixed successor permutation over the frequent pool
  std::vector<int> succ(spec.n_frequent);
  {
    Rng rng(spec.seed ^ 0xabcdULL);
    for (int i = 0; i < spec.n_frequent; ++i) succ[i] = i;
    rng.shuffle(succ);
  }

  auto gen_split = [&](std::uint64_t salt, int tokens) {
    Rng rng(spec.seed ^ salt);
    std::vector<std::string> out;
    out.reserve(tokens);
    int cur = static_cast<int>(rng.below(spec.n_frequent));
    out.push_back(frequent_token(cur));
    while (static_cast<int>(out.size()) < tokens) {
      if (rng.uniform() < spec.rare_rate) {
        const int r = static_cast<int>(rng.below(spec.n_rare));
        out.push_back(rare_token(r));
        cur = succ[syn[r]];  // the payoff position: predictable via the synonym
        out.push_back(frequent_token(cur));
      } else {
        cur = rng.uniform() < spec.chain_rate
                  ? succ[cur]
                  : static_cast<int>(rng.below(spec.n_frequent));
        out.push_back(frequent_token(cur));
      }
    }
    out.resize(tokens);
    return out;
  };

  LMCorpus corpus;
  corpus.train = gen_split(0x11, spec.lm_train_tokens);
  corpus.dev = gen_split(0x22, spec.lm_dev_tokens);
  corpus.test = gen_split(0x33, spec.lm_test_tokens);

  // constructive guarantee: every rare token stays far below the frequent
  // counts, so it cannot enter V_train at |frequent|+1
  std::unordered_map<std::string, int> counts;
  for (const auto& t : corpus.train) ++counts[t];
  int min_freq = spec.lm_train_tokens, max_rare = 0;
  for (int i = 0; i < spec.n_frequent; ++i)
    min_freq = std::min(min_freq, counts[frequent_token(i)]);
  for (int i = 0; i < spec.n_rare; ++i)
    max_rare = std::max(max_rare, counts[rare_token(i)]);
  if (max_rare >= min_freq)
    throw ContractError("gen_lm_corpus: rare tokens too frequent (" +
                        std::to_string(max_rare) + " >= " +
                        std::to_string(min_freq) + "); enlarge the corpus");
  return corpus;
}

inline void write_tokens(const std::string& path,
                         const std::vector<std::string>& tokens,
                         int per_line = 20) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ParseError("cannot open " + path + " for writing");
  for (std::size_t i = 0; i < tokens.size(); ++i)
    os << tokens[i] << ((i + 1) % per_line == 0 ? '\n' : ' ');
  os << '\n';
}

// ----------------------------------------------------------------------- nli

struct NLIExample {
  std::vector<std::string> premise;
  std::vector<std::string> hypothesis;
  int label = 0;  // 0 entailment, 1 contradiction, 2 neutral
  bool has_rare = false;
};

inline const char* nli_label_name(int label) {
  switch (label) {
    case 0: return "entailment";
    case 1: return "contradiction";
    case 2: return "neutral";
  }
  throw ContractError("nli label outside [0, 3)");
}

struct NLICorpus {
  std::vector<NLIExample> train, dev, test;
};

// Premise and hypothesis each name one concept-bearing subject. The
// label depends only on the relation between the premise concept and the
// hypothesis word: the concept itself entails, its designated opposite
// contradicts, anything else is neutral. Rare-bearing examples name the
// premise concept through its rare synonym; because the synonym map and the
// opposite map are bijections over the concept set, the hypothesis word
// alone carries zero label signal for those examples. Labels are exactly
// balanced by round-robin.
inline NLICorpus gen_nli_corpus(const SyntheticSpec& spec) {
  spec.validate();
  const auto syn = synonym_map(spec);  // concepts = image of the rare pool
  const int nc = spec.n_rare;
  std::vector<int> opp_of;  // concept index -> concept index
  {
    Rng rng(spec.seed ^ 0x77aaULL);
    opp_of = derangement(nc, rng);
  }

  auto gen_split = [&](std::uint64_t salt, int count, double rare_rate) {
    Rng rng(spec.seed ^ salt);
    std::vector<NLIExample> out;
    out.reserve(count);
    for (int i = 0; i < count; ++i) {
      NLIExample ex;
      ex.label = i % 3;  // exact balance
      const int c = static_cast<int>(rng.below(nc));
      std::string subject = frequent_token(syn[c]);
      if (rng.uniform() < rare_rate) {
        subject = rare_token(c);
        ex.has_rare = true;
      }
      int b;
      switch (ex.label) {
        case 0: b = c; break;
        case 1: b = opp_of[c]; break;
        default:
          do b = static_cast<int>(rng.below(nc));
          while (b == c || b == opp_of[c]);
      }
      ex.premise = {"the", subject, "is", "here"};
      ex.hypothesis = {"the", frequent_token(syn[b]), "is", "here"};
      out.push_back(std::move(ex));
    }
    return out;
  };

  NLICorpus corpus;
  corpus.train = gen_split(0x44, spec.n_train, 0.25);
  corpus.dev = gen_split(0x55, spec.n_dev, spec.rare_example_rate);
  corpus.test = gen_split(0x66, spec.n_test, spec.rare_example_rate);
  return corpus;
}

// ------------------------------------------------------------------------ qa

struct QAExample {
  std::vector<std::string> context;
  std::vector<std::string> question;
  std::vector<std::pair<int, int>> answers;  // gold spans, inclusive
  bool has_rare = false;
};

struct QACorpus {
  std::vector<QAExample> train, dev, test;
};

// Contexts list entity/property statements ("e3 has w7 ."); the question
// asks for a property, naming it either directly or through its rare
// synonym, and the answer span is the matching property token in the
// context. Properties are drawn from the concept set so every one of them
// has a rare name.
inline QACorpus gen_qa_corpus(const SyntheticSpec& spec) {
  spec.validate();
  const auto syn = synonym_map(spec);
  const int nc = spec.n_rare;
  const int slots = 4;
  if (nc < slots) throw ContractError("gen_qa_corpus: need at least 4 rare words");

  auto gen_split = [&](std::uint64_t salt, int count, double rare_rate) {
    Rng rng(spec.seed ^ salt);
    std::vector<QAExample> out;
    out.reserve(count);
    for (int i = 0; i < count; ++i) {
      QAExample ex;
      // distinct concept-properties for the slots
      std::vector<int> props;
      while (static_cast<int>(props.size()) < slots) {
        const int p = static_cast<int>(rng.below(nc));
        bool dup = false;
        for (int q : props) dup |= (q == p);
        if (!dup) props.push_back(p);
      }
      std::vector<int> prop_pos(slots);
      for (int s = 0; s < slots; ++s) {
        ex.context.push_back("e" + std::to_string(s));
        ex.context.push_back("has");
        prop_pos[s] = static_cast<int>(ex.context.size());
        ex.context.push_back(frequent_token(syn[props[s]]));
        ex.context.push_back(".");
      }
      const int target = static_cast<int>(rng.below(slots));
      std::string asked = frequent_token(syn[props[target]]);
      if (rng.uniform() < rare_rate) {
        asked = rare_token(props[target]);
        ex.has_rare = true;
      }
      ex.question = {"which", asked};
      ex.answers = {{prop_pos[target], prop_pos[target]}};
      out.push_back(std::move(ex));
    }
    return out;
  };

  QACorpus corpus;
  corpus.train = gen_split(0x88, spec.n_train, 0.35);
  corpus.dev = gen_split(0x99, spec.n_dev, spec.rare_example_rate);
  corpus.test = gen_split(0xaa, spec.n_test, spec.rare_example_rate);
  return corpus;
}

}  // namespace lexfly::datagen
