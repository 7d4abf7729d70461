#pragma once

#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "lexfly/errors.hpp"

namespace lexfly {

// exp of the mean negative log-probability.
inline double perplexity(const std::vector<double>& logprobs) {
  if (logprobs.empty()) throw ContractError("perplexity: no log-probabilities");
  double total = 0.0;
  for (double lp : logprobs) total += lp;
  return std::exp(-total / static_cast<double>(logprobs.size()));
}

// Perplexity restricted to positions whose *preceding input token* was OOV:
// logprobs[t] scores the word following input t, and flags[t] says whether
// that input token was in the model vocabulary. Absent when no position
// qualifies.
inline std::optional<double> ppl_after_oov(const std::vector<double>& logprobs,
                                           const std::vector<bool>& prev_in_vocab) {
  if (logprobs.size() != prev_in_vocab.size())
    throw ContractError("ppl_after_oov: " + std::to_string(logprobs.size()) +
                        " log-probabilities vs " +
                        std::to_string(prev_in_vocab.size()) + " flags");
  std::vector<double> kept;
  for (std::size_t t = 0; t < logprobs.size(); ++t)
    if (!prev_in_vocab[t]) kept.push_back(logprobs[t]);
  if (kept.empty()) return std::nullopt;
  return perplexity(kept);
}

using Span = std::pair<int, int>;

// 1 iff the predicted span equals any gold span.
inline int exact_match(const Span& pred, const std::vector<Span>& golds) {
  auto check = [](const Span& s) {
    if (s.first < 0 || s.second < s.first)
      throw ContractError("exact_match: invalid span (" +
                          std::to_string(s.first) + ", " +
                          std::to_string(s.second) + ")");
  };
  check(pred);
  for (const Span& g : golds) {
    check(g);
    if (g == pred) return 1;
  }
  return 0;
}

}  // namespace lexfly
