#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "lexfly/data.hpp"
#include "lexfly/datagen.hpp"
#include "lexfly/dictionary.hpp"

using namespace lexfly;
using namespace lexfly::datagen;

namespace fs = std::filesystem;

namespace {

SyntheticSpec small_spec() {
  SyntheticSpec spec;
  spec.seed = 12;
  spec.n_frequent = 40;
  spec.n_rare = 30;
  spec.lm_train_tokens = 8000;
  spec.lm_dev_tokens = 1000;
  spec.lm_test_tokens = 1000;
  spec.n_train = 300;
  spec.n_dev = 120;
  spec.n_test = 120;
  return spec;
}

}  // namespace

TEST_CASE("generators are deterministic in the seed") {
  SyntheticSpec spec = small_spec();
  CHECK(gen_lm_corpus(spec).train == gen_lm_corpus(spec).train);
  auto nli_a = gen_nli_corpus(spec), nli_b = gen_nli_corpus(spec);
  REQUIRE(nli_a.train.size() == nli_b.train.size());
  for (std::size_t i = 0; i < nli_a.train.size(); ++i) {
    CHECK(nli_a.train[i].premise == nli_b.train[i].premise);
    CHECK(nli_a.train[i].label == nli_b.train[i].label);
  }
  auto qa_a = gen_qa_corpus(spec), qa_b = gen_qa_corpus(spec);
  REQUIRE(qa_a.dev.size() == qa_b.dev.size());
  for (std::size_t i = 0; i < qa_a.dev.size(); ++i) {
    CHECK(qa_a.dev[i].context == qa_b.dev[i].context);
    CHECK(qa_a.dev[i].answers == qa_b.dev[i].answers);
  }

  SyntheticSpec other = spec;
  other.seed = 13;
  CHECK(gen_lm_corpus(other).train != gen_lm_corpus(spec).train);
}

TEST_CASE("synonym map is injective; code pairs are distinct") {
  SyntheticSpec spec = small_spec();
  auto syn = synonym_map(spec);
  std::set<int> distinct(syn.begin(), syn.end());
  CHECK(distinct.size() == syn.size());
  for (int s : syn) CHECK(s < spec.n_frequent);

  auto codes = code_definitions(spec);
  std::set<std::pair<int, int>> unique_codes(codes.begin(), codes.end());
  CHECK(unique_codes.size() == codes.size());
  for (auto [a, b] : codes) CHECK(a != b);
}

TEST_CASE("every rare dev token is covered by the emitted dictionary") {
  SyntheticSpec spec = small_spec();
  const std::string path = (fs::temp_directory_path() / "lexfly_gen_dict.tsv").string();
  write_dictionary_tsv(path, spec);
  Dictionary dict = load_dictionary(path);

  LMCorpus corpus = gen_lm_corpus(spec);
  for (const auto& tok : corpus.dev)
    if (tok.rfind("zq", 0) == 0)
      CHECK_FALSE(lookup_definitions(dict, tok).empty());
  std::remove(path.c_str());
}

TEST_CASE("rare lm tokens stay far below frequent counts") {
  SyntheticSpec spec = small_spec();
  LMCorpus corpus = gen_lm_corpus(spec);  // would throw if violated
  std::unordered_map<std::string, int> counts;
  for (const auto& t : corpus.train) ++counts[t];
  int min_freq = 1 << 30, max_rare = 0;
  for (int i = 0; i < spec.n_frequent; ++i)
    min_freq = std::min(min_freq, counts[frequent_token(i)]);
  for (int i = 0; i < spec.n_rare; ++i)
    max_rare = std::max(max_rare, counts[rare_token(i)]);
  CHECK(max_rare < min_freq);
}

TEST_CASE("bigram oracle: synonym substitution predicts dev strictly better") {
  SyntheticSpec spec = small_spec();
  LMCorpus corpus = gen_lm_corpus(spec);
  const auto syn = synonym_map(spec);

  // map rare -> synonym (substituted) or rare -> a single UNK bucket
  auto resolve = [&](const std::string& tok, bool substitute) -> std::string {
    if (tok.rfind("zq", 0) != 0) return tok;
    if (!substitute) return "<unk>";
    const int idx = std::stoi(tok.substr(2));
    return frequent_token(syn[idx]);
  };

  auto bigram_ppl = [&](bool substitute) {
    std::unordered_map<std::string, std::unordered_map<std::string, int>> counts;
    std::unordered_map<std::string, int> totals;
    std::unordered_set<std::string> vocab;
    for (std::size_t i = 0; i + 1 < corpus.train.size(); ++i) {
      const std::string a = resolve(corpus.train[i], substitute);
      const std::string b = resolve(corpus.train[i + 1], substitute);
      ++counts[a][b];
      ++totals[a];
      vocab.insert(a);
      vocab.insert(b);
    }
    const double v = static_cast<double>(vocab.size());
    double loglik = 0;
    int n = 0;
    for (std::size_t i = 0; i + 1 < corpus.dev.size(); ++i) {
      const std::string a = resolve(corpus.dev[i], substitute);
      const std::string b = resolve(corpus.dev[i + 1], substitute);
      const double num = counts[a][b] + 1.0;  // add-one smoothing
      const double den = totals[a] + v;
      loglik += std::log(num / den);
      ++n;
    }
    return std::exp(-loglik / n);
  };

  const double with_syn = bigram_ppl(true);
  const double with_unk = bigram_ppl(false);
  INFO("substituted " << with_syn << " vs unk " << with_unk);
  CHECK(with_syn < with_unk);
}

TEST_CASE("nli labels are balanced and examples well-formed") {
  SyntheticSpec spec = small_spec();
  NLICorpus corpus = gen_nli_corpus(spec);
  int tally[3] = {0, 0, 0};
  for (const auto& ex : corpus.train) {
    ++tally[ex.label];
    REQUIRE_FALSE(ex.premise.empty());
    REQUIRE_FALSE(ex.hypothesis.empty());
    // has_rare iff the premise mentions a rare token
    bool rare = false;
    for (const auto& t : ex.premise) rare |= t.rfind("zq", 0) == 0;
    CHECK(ex.has_rare == rare);
  }
  const double total = corpus.train.size();
  for (int k = 0; k < 3; ++k)
    CHECK(std::fabs(tally[k] / total - 1.0 / 3) < 0.05);
}

TEST_CASE("nli label rule matches the synonym/opposite construction") {
  SyntheticSpec spec = small_spec();
  NLICorpus corpus = gen_nli_corpus(spec);
  // entailment examples built around a rare word must pair it with its
  // synonym's token
  const auto syn = synonym_map(spec);
  const std::string dict_path =
      (fs::temp_directory_path() / "lexfly_nli_dict.tsv").string();
  write_dictionary_tsv(dict_path, spec);
  Dictionary dict = load_dictionary(dict_path);
  int checked = 0;
  for (const auto& ex : corpus.dev) {
    if (!ex.has_rare || ex.label != 0) continue;
    const std::string& rare = ex.premise[1];
    const std::string& hyp_word = ex.hypothesis[1];
    auto defs = lookup_definitions(dict, rare);
    REQUIRE(defs.size() == 1);
    CHECK(defs[0][0] == hyp_word);
    ++checked;
  }
  CHECK(checked > 5);
  std::remove(dict_path.c_str());
}

TEST_CASE("qa spans point at the asked property") {
  SyntheticSpec spec = small_spec();
  QACorpus corpus = gen_qa_corpus(spec);
  const auto syn = synonym_map(spec);
  for (const auto& ex : corpus.train) {
    REQUIRE(ex.answers.size() == 1);
    const auto [s, e] = ex.answers[0];
    REQUIRE(s == e);
    REQUIRE(s >= 0);
    REQUIRE(e < static_cast<int>(ex.context.size()));
    const std::string& asked = ex.question[1];
    if (ex.has_rare) {
      const int idx = std::stoi(asked.substr(2));
      CHECK(ex.context[s] == frequent_token(syn[idx]));
    } else {
      CHECK(ex.context[s] == asked);
    }
  }
}

TEST_CASE("generated files load back through the standard loaders") {
  SyntheticSpec spec = small_spec();
  const fs::path dir = fs::temp_directory_path() / "lexfly_gen_files";
  fs::create_directories(dir);

  write_tokens((dir / "train.txt").string(), gen_lm_corpus(spec).train);
  CHECK(load_tokens((dir / "train.txt").string()).size() ==
        static_cast<std::size_t>(spec.lm_train_tokens));

  save_nli_jsonl((dir / "nli.jsonl").string(), gen_nli_corpus(spec).dev);
  auto nli = load_nli_jsonl((dir / "nli.jsonl").string());
  CHECK(nli.size() == static_cast<std::size_t>(spec.n_dev));

  save_qa_jsonl((dir / "qa.jsonl").string(), gen_qa_corpus(spec).dev);
  auto qa = load_qa_jsonl((dir / "qa.jsonl").string());
  CHECK(qa.size() == static_cast<std::size_t>(spec.n_dev));
  fs::remove_all(dir);
}

TEST_CASE("invalid specs are rejected") {
  SyntheticSpec bad = small_spec();
  bad.n_rare = bad.n_frequent + 1;
  REQUIRE_THROWS_AS(synonym_map(bad), ContractError);
  SyntheticSpec tiny;
  tiny.n_frequent = 2;
  REQUIRE_THROWS_AS(gen_lm_corpus(tiny), ContractError);
  SyntheticSpec style = small_spec();
  style.def_style = "prose";
  REQUIRE_THROWS_AS(style.validate(), ContractError);
}
