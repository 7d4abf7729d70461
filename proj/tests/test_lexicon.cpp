#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "lexfly/dictionary.hpp"
#include "lexfly/vocab.hpp"

using namespace lexfly;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
  const std::string path =
      (std::filesystem::temp_directory_path() / name).string();
  std::ofstream os(path, std::ios::binary);
  os << content;
  return path;
}

}  // namespace

TEST_CASE("load_dictionary parses the TSV format") {
  const std::string path = write_temp("lexfly_dict1.tsv",
                                      "# comment line\n"
                                      "actress\ta female actor\n"
                                      "bank\tside of a river\n"
                                      "bank\ta financial institution\n"
                                      "san francisco\ta city\n");
  Dictionary dict = load_dictionary(path);
  REQUIRE(dict.entry_count() == 2);
  REQUIRE(dict.definition_count() == 3);
  CHECK(dict.skipped == 1);  // multi-word headword dropped

  const auto* actress = dict.find("actress");
  REQUIRE(actress != nullptr);
  REQUIRE(actress->size() == 1);
  CHECK((*actress)[0] == Definition{"a", "female", "actor"});

  // same headword twice -> both definitions, file order
  const auto* bank = dict.find("bank");
  REQUIRE(bank->size() == 2);
  CHECK((*bank)[0][0] == "side");
  CHECK((*bank)[1][0] == "a");
  std::remove(path.c_str());
}

TEST_CASE("load_dictionary reports malformed lines with their number") {
  const std::string path = write_temp("lexfly_dict2.tsv",
                                      "good\ta definition\n"
                                      "bad line without tab\n");
  REQUIRE_THROWS_MATCHES(load_dictionary(path), ParseError,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring(":2")));
  std::remove(path.c_str());
}

TEST_CASE("load_dictionary lowercases headwords and truncates definitions") {
  const std::string path = write_temp("lexfly_dict3.tsv",
                                      "Actress\ta b c d e f\nempty\t \n");
  Dictionary dict = load_dictionary(path, 3);
  REQUIRE(dict.find("actress") != nullptr);
  CHECK((*dict.find("actress"))[0].size() == 3);
  CHECK(dict.skipped == 1);  // the empty definition
  std::remove(path.c_str());
}

TEST_CASE("candidate_lemmas applies rules and exceptions in order") {
  CHECK(candidate_lemmas("Running") ==
        std::vector<std::string>{"running", "run"});
  CHECK(candidate_lemmas("cat") == std::vector<std::string>{"cat"});
  CHECK(candidate_lemmas("Geese") == std::vector<std::string>{"geese", "goose"});
  // -ies rule
  CHECK(candidate_lemmas("babies")[1] == "baby");
  // lowercased input always first
  for (const char* w : {"Walking", "BOXES", "cats", "Better", "xyzzy"}) {
    auto c = candidate_lemmas(w);
    REQUIRE_FALSE(c.empty());
    CHECK(c[0] == ascii_lower(w));
    // no duplicates
    for (std::size_t i = 0; i < c.size(); ++i)
      for (std::size_t j = i + 1; j < c.size(); ++j) CHECK(c[i] != c[j]);
  }
}

TEST_CASE("lookup_definitions follows lemma candidates") {
  Dictionary dict;
  dict.add("actress", {"a", "female", "actor"});
  auto defs = lookup_definitions(dict, "Actresses");
  REQUIRE(defs.size() == 1);
  CHECK(defs[0] == Definition{"a", "female", "actor"});

  CHECK(lookup_definitions(dict, "nonexistent").empty());

  // two matching lemmas: 1 + 2 definitions, lemma order preserved
  Dictionary multi;
  multi.add("walking", {"w1"});
  multi.add("walk", {"w2"});
  multi.add("walk", {"w3"});
  auto all = lookup_definitions(multi, "Walking");
  REQUIRE(all.size() == 3);
  CHECK(all[0] == Definition{"w1"});
  CHECK(all[1] == Definition{"w2"});
  CHECK(all[2] == Definition{"w3"});
}

TEST_CASE("lookup_definitions is invariant to entry order for distinct headwords") {
  Dictionary ab, ba;
  ab.add("walk", {"a"});
  ab.add("walking", {"b"});
  ba.add("walking", {"b"});
  ba.add("walk", {"a"});
  CHECK(lookup_definitions(ab, "walking") == lookup_definitions(ba, "walking"));
}

TEST_CASE("spelling_definition splits code points, case preserved") {
  CHECK(spelling_definition("Word") == Definition{"W", "o", "r", "d"});
  CHECK(spelling_definition("a") == Definition{"a"});
  CHECK(spelling_definition("naïve") ==
        Definition{"n", "a", "ï", "v", "e"});
  REQUIRE_THROWS_AS(spelling_definition(""), ContractError);
}

TEST_CASE("build_train_vocab ranks by frequency with first-occurrence ties") {
  Vocabulary v = build_train_vocab({"a", "a", "b"}, 2);
  REQUIRE(v.size() == 2);
  CHECK(v.token(0) == "<unk>");
  CHECK(v.token(1) == "a");

  Vocabulary tie = build_train_vocab({"a", "b"}, 2);
  CHECK(tie.token(1) == "a");

  // hand-tallied: d x4, b x3, a x2 (first seen), c x2, e..h x1
  std::vector<std::string> corpus{"a", "b", "c", "d", "d", "b", "c", "d",
                                  "b", "d", "a", "e", "f", "g", "h"};
  Vocabulary top = build_train_vocab(corpus, 5);
  CHECK(top.tokens() == std::vector<std::string>{"<unk>", "d", "b", "a", "c"});

  Vocabulary empty = build_train_vocab({}, 4);
  CHECK(empty.size() == 1);

  REQUIRE_THROWS_AS(build_train_vocab({"a"}, 0), ContractError);
}

TEST_CASE("build_train_vocab keeps everything when size is large enough") {
  std::vector<std::string> corpus{"x", "y", "z", "y"};
  Vocabulary v = build_train_vocab(corpus, 10);
  for (const auto& t : corpus) CHECK(v.contains(t));
  // round trip
  for (int id = 0; id < v.size(); ++id) CHECK(v.id(v.token(id)) == id);
}

TEST_CASE("build_dict_vocab weights tokens by headword frequency") {
  Dictionary d1;
  d1.add("x", {"p", "q"});
  Vocabulary v1 = build_dict_vocab(d1, {{"x", 3}}, 3);
  CHECK(v1.tokens() == std::vector<std::string>{"<unk>", "p", "q"});

  // p scores 2 (from x) + 1 (from y) = 3 > q's 1
  Dictionary d2;
  d2.add("x", {"p"});
  d2.add("y", {"p", "q"});
  Vocabulary v2 = build_dict_vocab(d2, {{"x", 2}, {"y", 1}}, 2);
  CHECK(v2.tokens() == std::vector<std::string>{"<unk>", "p"});

  // all-zero frequencies: first-scored order breaks the ties
  Vocabulary v3 = build_dict_vocab(d2, {}, 3);
  CHECK(v3.tokens() == std::vector<std::string>{"<unk>", "p", "q"});
}

TEST_CASE("vocabulary file round-trips with <unk> at line 0") {
  Vocabulary v = build_train_vocab({"alpha", "beta", "alpha"}, 3);
  const std::string path =
      (std::filesystem::temp_directory_path() / "lexfly_vocab.txt").string();
  v.save(path);
  {
    std::ifstream is(path);
    std::string first;
    std::getline(is, first);
    CHECK(first == "<unk>");
  }
  Vocabulary loaded = Vocabulary::load(path);
  CHECK(loaded.tokens() == v.tokens());
  std::remove(path.c_str());
}
