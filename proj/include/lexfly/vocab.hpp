#pragma once

#include <algorithm>
#include <fstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "lexfly/errors.hpp"

namespace lexfly {

inline constexpr const char* kUnkToken = "<unk>";

// Ordered token <-> id map with UNK pinned at id 0.
class Vocabulary {
 public:
  Vocabulary() { push(kUnkToken); }

  explicit Vocabulary(const std::vector<std::string>& tokens) {
    push(kUnkToken);
    for (const auto& t : tokens)
      if (!lookup_.count(t)) push(t);
  }

  int id(const std::string& token) const {
    auto it = lookup_.find(token);
    return it == lookup_.end() ? 0 : it->second;
  }

  bool contains(const std::string& token) const { return lookup_.count(token) > 0; }

  const std::string& token(int id) const {
    if (id < 0 || id >= static_cast<int>(tokens_.size()))
      throw IndexError("Vocabulary: id " + std::to_string(id) +
                       " outside [0, " + std::to_string(tokens_.size()) + ")");
    return tokens_[id];
  }

  int size() const { return static_cast<int>(tokens_.size()); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  void save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ParseError("cannot open " + path + " for writing");
    for (const auto& t : tokens_) os << t << '\n';
  }

  static Vocabulary load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ParseError("cannot open " + path);
    std::vector<std::string> tokens;
    std::string line;
    while (std::getline(is, line)) tokens.push_back(line);
    if (tokens.empty() || tokens[0] != kUnkToken)
      throw ParseError(path + ": line 0 must be " + std::string(kUnkToken));
    Vocabulary v;
    for (std::size_t i = 1; i < tokens.size(); ++i) {
      if (v.lookup_.count(tokens[i]))
        throw ParseError(path + ":" + std::to_string(i + 1) +
                         ": duplicate token " + tokens[i]);
      v.push(tokens[i]);
    }
    return v;
  }

 private:
  void push(const std::string& t) {
    lookup_[t] = static_cast<int>(tokens_.size());
    tokens_.push_back(t);
  }

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> lookup_;
};

// UNK plus the (size-1) most frequent corpus tokens; ties broken by first
// occurrence.
inline Vocabulary build_train_vocab(const std::vector<std::string>& corpus,
                                    int size) {
  if (size < 1) throw ContractError("build_train_vocab: size must be >= 1");
  struct Stat {
    long long count = 0;
    std::size_t first = 0;
  };
  std::unordered_map<std::string, Stat> stats;
  std::vector<const std::string*> order;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const std::string& t = corpus[i];
    if (t == kUnkToken) continue;
    auto [it, fresh] = stats.try_emplace(t);
    if (fresh) {
      it->second.first = i;
      order.push_back(&it->first);
    }
    ++it->second.count;
  }
  std::sort(order.begin(), order.end(),
            [&](const std::string* a, const std::string* b) {
              const Stat& sa = stats.at(*a);
              const Stat& sb = stats.at(*b);
              if (sa.count != sb.count) return sa.count > sb.count;
              return sa.first < sb.first;
            });
  std::vector<std::string> kept;
  for (std::size_t i = 0; i + 1 < static_cast<std::size_t>(size) && i < order.size(); ++i)
    kept.push_back(*order[i]);
  return Vocabulary(kept);
}

}  // namespace lexfly
