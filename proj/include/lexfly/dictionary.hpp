#pragma once

#include <algorithm>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "lexfly/errors.hpp"
#include "lexfly/vocab.hpp"

namespace lexfly {

using Definition = std::vector<std::string>;

inline std::string ascii_lower(const std::string& s) {
  std::string out = s;
  for (char& c : out)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return out;
}

// Splits a UTF-8 string into code-point tokens (used for spelling
// definitions, where accented characters must stay single tokens).
inline std::vector<std::string> utf8_chars(const std::string& s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const unsigned char c = static_cast<unsigned char>(s[i]);
    std::size_t len = 1;
    if ((c & 0x80) == 0x00) len = 1;
    else if ((c & 0xe0) == 0xc0) len = 2;
    else if ((c & 0xf0) == 0xe0) len = 3;
    else if ((c & 0xf8) == 0xf0) len = 4;
    if (i + len > s.size()) len = 1;  // tolerate stray bytes
    out.push_back(s.substr(i, len));
    i += len;
  }
  return out;
}

// One definition whose tokens are the word's characters, case preserved.
inline Definition spelling_definition(const std::string& word) {
  if (word.empty())
    throw ContractError("spelling_definition: empty word");
  return utf8_chars(word);
}

// ----------------------------------------------------------------- lemmatizer

// Ordered suffix rewrites plus an irregular-form map. A rule fires when the
// suffix matches and the stem keeps at least two characters; the -ing rule
// also undoubles a trailing doubled consonant (running -> run). This is a
// deterministic stand-in for a full morphological analyzer: candidates are
// only probes for dictionary lookup, so an occasional wrong stem is harmless.
class LemmaRuleTable {
 public:
  struct Rule {
    std::string suffix;
    std::string replacement;
    bool undouble = false;
  };

  LemmaRuleTable(std::vector<Rule> rules,
                 std::unordered_map<std::string, std::string> exceptions)
      : rules_(std::move(rules)), exceptions_(std::move(exceptions)) {}

  static const LemmaRuleTable& english() {
    static const LemmaRuleTable table(
        {
            {"ies", "y", false},
            {"es", "", false},
            {"s", "", false},
            {"ing", "", true},
            {"ed", "", false},
            {"ed", "e", false},
            {"er", "", false},
        },
        {
            {"geese", "goose"},   {"mice", "mouse"},   {"men", "man"},
            {"women", "woman"},   {"children", "child"}, {"feet", "foot"},
            {"teeth", "tooth"},   {"people", "person"}, {"ran", "run"},
            {"went", "go"},       {"gone", "go"},      {"was", "be"},
            {"were", "be"},       {"is", "be"},        {"are", "be"},
            {"been", "be"},       {"has", "have"},     {"had", "have"},
            {"did", "do"},        {"done", "do"},      {"said", "say"},
            {"made", "make"},     {"took", "take"},    {"taken", "take"},
            {"came", "come"},     {"saw", "see"},      {"seen", "see"},
            {"gave", "give"},     {"given", "give"},   {"got", "get"},
            {"better", "good"},   {"best", "good"},    {"worse", "bad"},
            {"worst", "bad"},     {"wrote", "write"},  {"written", "write"},
            {"knew", "know"},     {"known", "know"},   {"threw", "throw"},
            {"thrown", "throw"},  {"flew", "fly"},     {"flown", "fly"},
            {"drew", "draw"},     {"drawn", "draw"},   {"ate", "eat"},
            {"eaten", "eat"},     {"fell", "fall"},    {"fallen", "fall"},
            {"felt", "feel"},     {"found", "find"},   {"heard", "hear"},
            {"held", "hold"},     {"kept", "keep"},    {"left", "leave"},
            {"lost", "lose"},     {"meant", "mean"},   {"met", "meet"},
            {"paid", "pay"},      {"sold", "sell"},    {"sent", "send"},
            {"sat", "sit"},       {"spoke", "speak"},  {"spoken", "speak"},
            {"stood", "stand"},   {"told", "tell"},    {"thought", "think"},
            {"wore", "wear"},     {"worn", "wear"},    {"won", "win"},
        });
    return table;
  }

  // Lowercased word first, then the exception hit if any, then each matching
  // suffix-rule result. Deduplicated, deterministic.
  std::vector<std::string> candidates(const std::string& word) const {
    const std::string low = ascii_lower(word);
    std::vector<std::string> out{low};
    auto push_unique = [&out](const std::string& c) {
      if (std::find(out.begin(), out.end(), c) == out.end()) out.push_back(c);
    };
    auto ex = exceptions_.find(low);
    if (ex != exceptions_.end()) push_unique(ex->second);
    for (const Rule& r : rules_) {
      if (low.size() <= r.suffix.size()) continue;
      if (low.compare(low.size() - r.suffix.size(), r.suffix.size(), r.suffix) != 0)
        continue;
      std::string stem = low.substr(0, low.size() - r.suffix.size()) + r.replacement;
      if (stem.size() < 2) continue;
      if (r.undouble && stem.size() >= 3 && stem[stem.size() - 1] == stem[stem.size() - 2] &&
          !is_vowel(stem.back()))
        stem.pop_back();
      push_unique(stem);
    }
    return out;
  }

 private:
  static bool is_vowel(char c) {
    return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u';
  }

  std::vector<Rule> rules_;
  std::unordered_map<std::string, std::string> exceptions_;
};

inline std::vector<std::string> candidate_lemmas(const std::string& word) {
  return LemmaRuleTable::english().candidates(word);
}

// ----------------------------------------------------------------- dictionary

// headword -> ordered definitions, file order preserved. Headwords are
// lowercased single tokens; definitions are token lists.
class Dictionary {
 public:
  struct Entry {
    std::string headword;
    std::vector<Definition> definitions;
  };

  void add(const std::string& headword, Definition def) {
    const std::string low = ascii_lower(headword);
    auto it = index_.find(low);
    if (it == index_.end()) {
      index_[low] = entries_.size();
      entries_.push_back({low, {std::move(def)}});
    } else {
      entries_[it->second].definitions.push_back(std::move(def));
    }
  }

  const std::vector<Definition>* find(const std::string& lower_head) const {
    auto it = index_.find(lower_head);
    return it == index_.end() ? nullptr : &entries_[it->second].definitions;
  }

  const std::vector<Entry>& entries() const { return entries_; }

  std::size_t entry_count() const { return entries_.size(); }

  std::size_t definition_count() const {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.definitions.size();
    return n;
  }

  std::size_t skipped = 0;  // multi-word or empty-definition lines at load

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

// TSV loader: "headword<TAB>space-separated-definition-tokens" per line,
// '#'-prefixed comment lines skipped. Multi-word headwords are skipped with
// a warning count; a line without exactly one TAB is a parse error.
// Definitions are truncated to max_def_tokens.
inline Dictionary load_dictionary(const std::string& path,
                                  int max_def_tokens = 32) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ParseError("cannot open dictionary " + path);
  Dictionary dict;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos)
      throw ParseError(path + ":" + std::to_string(lineno) +
                       ": expected exactly 2 tab-separated fields");
    const std::string head = line.substr(0, tab);
    if (head.empty() || head.find(' ') != std::string::npos) {
      ++dict.skipped;
      continue;
    }
    Definition def;
    std::istringstream ds(line.substr(tab + 1));
    std::string tok;
    while (ds >> tok) {
      if (static_cast<int>(def.size()) < max_def_tokens) def.push_back(tok);
    }
    if (def.empty()) {
      ++dict.skipped;
      continue;
    }
    dict.add(head, std::move(def));
  }
  return dict;
}

// All definitions of all headwords matching the word's lemma candidates,
// concatenated in candidate order. Empty when nothing matches.
inline std::vector<Definition> lookup_definitions(
    const Dictionary& dict, const std::string& word,
    const LemmaRuleTable& lemmas = LemmaRuleTable::english()) {
  std::vector<Definition> out;
  for (const std::string& cand : lemmas.candidates(word)) {
    if (const auto* defs = dict.find(cand))
      out.insert(out.end(), defs->begin(), defs->end());
  }
  return out;
}

// V_dict construction: each token scores the training frequency of the
// headword once per occurrence in that headword's definitions; top (size-1)
// scores plus UNK, ties by first encounter during the scoring sweep.
inline Vocabulary build_dict_vocab(
    const Dictionary& dict,
    const std::unordered_map<std::string, long long>& headword_freq,
    int size) {
  if (size < 1) throw ContractError("build_dict_vocab: size must be >= 1");
  struct Stat {
    long long score = 0;
    std::size_t first = 0;
  };
  std::unordered_map<std::string, Stat> stats;
  std::vector<const std::string*> order;
  std::size_t counter = 0;
  for (const auto& entry : dict.entries()) {
    auto fit = headword_freq.find(entry.headword);
    const long long freq = fit == headword_freq.end() ? 0 : fit->second;
    for (const auto& def : entry.definitions) {
      for (const auto& tok : def) {
        if (tok == kUnkToken) continue;
        auto [it, fresh] = stats.try_emplace(tok);
        if (fresh) {
          it->second.first = counter;
          order.push_back(&it->first);
        }
        ++counter;
        it->second.score += freq;
      }
    }
  }
  std::sort(order.begin(), order.end(),
            [&](const std::string* a, const std::string* b) {
              const Stat& sa = stats.at(*a);
              const Stat& sb = stats.at(*b);
              if (sa.score != sb.score) return sa.score > sb.score;
              return sa.first < sb.first;
            });
  std::vector<std::string> kept;
  for (std::size_t i = 0; i + 1 < static_cast<std::size_t>(size) && i < order.size(); ++i)
    kept.push_back(*order[i]);
  return Vocabulary(kept);
}

}  // namespace lexfly
