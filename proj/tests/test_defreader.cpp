#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "lexfly/defreader.hpp"

using namespace lexfly;

namespace {

struct Fixture {
  Vocabulary vocab{std::vector<std::string>{"a", "b", "c", "d", "e"}};
  ParamStore store;
  Rng rng{17};

  ReaderConfig config(ReaderKind kind, int d_emb = 2, int d_out = -1) {
    ReaderConfig cfg;
    cfg.kind = kind;
    cfg.d_emb = d_emb;
    cfg.d_out = d_out < 0 ? d_emb : d_out;
    cfg.vocab = &vocab;
    return cfg;
  }
};

// plain-double mean of token embedding rows, the brute-force MP oracle
std::vector<double> brute_mean(const Tensor& table, const std::vector<int>& ids) {
  std::vector<double> out(table.cols(), 0.0);
  for (int id : ids)
    for (int j = 0; j < table.cols(); ++j) out[j] += table.at(id, j);
  for (auto& v : out) v /= ids.size();
  return out;
}

}  // namespace

TEST_CASE("MP reader is the arithmetic mean of token embeddings") {
  Fixture f;
  ReaderConfig cfg = f.config(ReaderKind::MP);
  ReaderParams p;
  // rows: unk, a, b, c, d, e -- e'(a) = [1,2], e'(b) = [3,4]
  p.table = leaf(Tensor({6, 2}, {9, 8, 1, 2, 3, 4, 5, 6, 0, 0, 7, 7}));
  NodePtr out = encode_definition({"a", "b"}, cfg, p);
  CHECK(out->value.data() == std::vector<double>{2, 3});

  // tokens outside V_dict read e'(UNK), row 0
  NodePtr unk = encode_definition({"zzz"}, cfg, p);
  CHECK(unk->value.data() == std::vector<double>{9, 8});
}

TEST_CASE("MP-L reader is a linear transform of the mean") {
  Fixture f;
  ReaderConfig cfg = f.config(ReaderKind::MPL);
  ReaderParams p;
  p.table = leaf(Tensor({6, 2}, {9, 8, 1, 2, 3, 4, 5, 6, 0, 0, 7, 7}));
  p.transform = leaf(Tensor({2, 2}, {2, 0, 0, 2}));  // 2I
  NodePtr out = encode_definition({"a", "b"}, cfg, p);
  CHECK(out->value.data() == std::vector<double>{4, 6});
}

TEST_CASE("MP-L equals transform times MP for random inputs") {
  Fixture f;
  ReaderConfig mp = f.config(ReaderKind::MP, 3, 3);
  ReaderConfig mpl = f.config(ReaderKind::MPL, 3, 4);
  ReaderParams p;
  p.table = leaf(Tensor::uniform({6, 3}, f.rng, -2, 2));
  p.transform = leaf(Tensor::uniform({3, 4}, f.rng, -2, 2));
  for (int trial = 0; trial < 10; ++trial) {
    Definition def;
    const int len = 1 + static_cast<int>(f.rng.below(6));
    for (int i = 0; i < len; ++i)
      def.push_back(f.vocab.token(static_cast<int>(f.rng.below(6))));
    NodePtr lhs = encode_definition(def, mpl, p);
    NodePtr rhs = matmul(encode_definition(def, mp, p), p.transform);
    for (std::size_t i = 0; i < lhs->value.size(); ++i)
      CHECK(lhs->value[i] == Catch::Approx(rhs->value[i]).margin(1e-12));
  }
}

TEST_CASE("LSTM reader with zero parameters yields the zero vector") {
  Fixture f;
  ReaderConfig cfg = f.config(ReaderKind::LSTM, 2, 3);
  ReaderParams p;
  p.table = leaf(Tensor::uniform({6, 2}, f.rng, -1, 1));
  p.lstm = {leaf(Tensor({2, 12})), leaf(Tensor({3, 12})), leaf(Tensor({1, 12})), 2, 3};
  NodePtr out = encode_definition({"a", "c", "b"}, cfg, p);
  for (double v : out->value.data()) CHECK(v == 0.0);
}

TEST_CASE("MP is token-order invariant, LSTM is not") {
  Fixture f;
  ReaderConfig mp = f.config(ReaderKind::MP, 3, 3);
  ReaderConfig lstm = f.config(ReaderKind::LSTM, 3, 3);
  ReaderParams p = make_reader_params(lstm, f.store, "r", f.rng);
  Definition fwd{"a", "b", "c", "d"};
  Definition rev{"d", "c", "b", "a"};

  NodePtr mp_f = encode_definition(fwd, mp, p);
  NodePtr mp_r = encode_definition(rev, mp, p);
  for (std::size_t i = 0; i < mp_f->value.size(); ++i)
    CHECK(mp_f->value[i] == Catch::Approx(mp_r->value[i]).margin(1e-12));

  NodePtr ls_f = encode_definition(fwd, lstm, p);
  NodePtr ls_r = encode_definition(rev, lstm, p);
  double diff = 0;
  for (std::size_t i = 0; i < ls_f->value.size(); ++i)
    diff += std::fabs(ls_f->value[i] - ls_r->value[i]);
  CHECK(diff > 1e-6);
}

TEST_CASE("pool_definitions: one def passes through, none yields zeros") {
  Fixture f;
  ReaderConfig cfg = f.config(ReaderKind::MP);
  ReaderParams p;
  p.table = leaf(Tensor::uniform({6, 2}, f.rng, -1, 1));

  NodePtr one = pool_definitions({{"a", "c"}}, cfg, p);
  NodePtr direct = encode_definition({"a", "c"}, cfg, p);
  CHECK(one->value.data() == direct->value.data());

  NodePtr none = pool_definitions({}, cfg, p);
  CHECK(none->value.shape() == Shape{1, 2});
  CHECK(none->value.all_zero());
}

TEST_CASE("pool_definitions means across definitions") {
  Fixture f;
  ReaderConfig cfg = f.config(ReaderKind::MP);
  ReaderParams p;
  p.table = leaf(Tensor({6, 2}, {0, 0, 1, 2, 3, 4, 5, 6, 0, 0, 0, 0}));
  // defs: ["a"] -> [1,2]; ["b","c"] -> [4,5]; mean of means = [2.5, 3.5]
  NodePtr out = pool_definitions({{"a"}, {"b", "c"}}, cfg, p);
  CHECK(out->value[0] == Catch::Approx(2.5).margin(1e-15));
  CHECK(out->value[1] == Catch::Approx(3.5).margin(1e-15));

  // k identical definitions pool to the single encoding (k = power of two
  // keeps the arithmetic exact)
  NodePtr twice = pool_definitions({{"b", "c"}, {"b", "c"}}, cfg, p);
  NodePtr single = encode_definition({"b", "c"}, cfg, p);
  CHECK(twice->value.data() == single->value.data());
}

TEST_CASE("build_definition_batch dedups and scatters") {
  Dictionary dict;
  dict.add("cat", {"small", "animal"});
  dict.add("dog", {"loyal", "animal"});
  Vocabulary vocab(std::vector<std::string>{"small", "loyal", "animal"});

  DefinitionBatch batch = build_definition_batch(
      {"cat", "cat", "dog"}, &dict, DefSource::Dict, vocab);
  CHECK(batch.unique_count() == 2);
  REQUIRE(batch.scatter.size() == 3);
  CHECK(batch.scatter[0] == std::vector<int>{0});
  CHECK(batch.scatter[1] == std::vector<int>{0});
  CHECK(batch.scatter[2] == std::vector<int>{1});

  // word with no entry -> empty scatter list
  DefinitionBatch missing = build_definition_batch(
      {"cat", "unknown"}, &dict, DefSource::Dict, vocab);
  CHECK(missing.scatter[1].empty());

  // five words sharing one definition -> counted once
  Dictionary shared;
  for (const char* w : {"v", "w", "x", "y", "z"}) shared.add(w, {"animal"});
  DefinitionBatch five = build_definition_batch(
      {"v", "w", "x", "y", "z"}, &shared, DefSource::Dict, vocab);
  CHECK(five.unique_count() == 1);
}

TEST_CASE("encode_batch broadcasts shared definitions") {
  Fixture f;
  Dictionary dict;
  dict.add("cat", {"a", "b"});
  ReaderConfig cfg = f.config(ReaderKind::MP);
  ReaderParams p;
  p.table = leaf(Tensor::uniform({6, 2}, f.rng, -1, 1));
  DefinitionBatch batch = build_definition_batch(
      {"cat", "cat", "cat"}, &dict, DefSource::Dict, f.vocab);
  REQUIRE(batch.unique_count() == 1);
  NodePtr out = encode_batch(batch, cfg, p);
  REQUIRE(out->value.rows() == 3);
  for (int j = 0; j < 2; ++j) {
    CHECK(out->value.at(1, j) == out->value.at(0, j));
    CHECK(out->value.at(2, j) == out->value.at(0, j));
  }
}

TEST_CASE("padding never leaks into LSTM batch encodings") {
  Fixture f;
  Dictionary dict;
  dict.add("long", {"a", "b", "c", "d", "e"});
  dict.add("short", {"b"});
  ReaderConfig cfg = f.config(ReaderKind::LSTM, 2, 3);
  ReaderParams p = make_reader_params(cfg, f.store, "r", f.rng);

  // batched (with padding to lmax=5) vs alone (no padding)
  DefinitionBatch both = build_definition_batch(
      {"short", "long"}, &dict, DefSource::Dict, f.vocab);
  DefinitionBatch alone = build_definition_batch(
      {"short"}, &dict, DefSource::Dict, f.vocab);
  NodePtr padded = encode_batch(both, cfg, p);
  NodePtr unpadded = encode_batch(alone, cfg, p);
  for (int j = 0; j < 3; ++j)
    CHECK(padded->value.at(0, j) ==
          Catch::Approx(unpadded->value.at(0, j)).margin(1e-12));
}

TEST_CASE("encode_batch equals the sequential per-word path") {
  Fixture f;
  Dictionary dict;
  dict.add("cat", {"a", "b"});
  dict.add("dog", {"c"});
  dict.add("cow", {"a", "b"});     // shares cat's definition text
  dict.add("fox", {"d", "e", "a"});
  dict.add("ant", {"b"});
  dict.add("ant", {"c", "d"});     // multi-definition word

  for (ReaderKind kind : {ReaderKind::MP, ReaderKind::MPL, ReaderKind::LSTM}) {
    ReaderConfig cfg = f.config(kind, 3, kind == ReaderKind::MP ? 3 : 4);
    ParamStore store;
    Rng prng(400 + static_cast<int>(kind));
    ReaderParams p = make_reader_params(cfg, store, "r", prng);

    Rng wrng(7);
    std::vector<std::string> pool{"cat", "dog", "cow", "fox", "ant", "none"};
    for (int trial = 0; trial < 6; ++trial) {
      std::vector<std::string> words;
      for (int i = 0; i < 8; ++i)
        words.push_back(pool[wrng.below(pool.size())]);
      DefinitionBatch batch =
          build_definition_batch(words, &dict, DefSource::Dict, f.vocab);
      NodePtr batched = encode_batch(batch, cfg, p);

      for (std::size_t i = 0; i < words.size(); ++i) {
        NodePtr seq = pool_definitions(lookup_definitions(dict, words[i]), cfg, p);
        for (int j = 0; j < cfg.d_out; ++j)
          CHECK(std::fabs(batched->value.at(static_cast<int>(i), j) -
                          seq->value.at(0, j)) < 1e-10);
      }
    }
  }
}

TEST_CASE("gradients reach reader embeddings unless severed") {
  Fixture f;
  Dictionary dict;
  dict.add("cat", {"a", "b"});
  ReaderConfig cfg = f.config(ReaderKind::MP, 2, 2);
  ParamStore store;
  ReaderParams p = make_reader_params(cfg, store, "r", f.rng);

  DefinitionBatch batch =
      build_definition_batch({"cat"}, &dict, DefSource::Dict, f.vocab);
  backward(sum_all(encode_batch(batch, cfg, p)));
  const int id_a = f.vocab.id("a"), id_b = f.vocab.id("b");
  CHECK(p.table->grad.at(id_a, 0) != 0.0);
  CHECK(p.table->grad.at(id_b, 0) != 0.0);

  // the no-backprop mode leaves the whole reader untouched
  store.zero_grads();
  ReaderConfig severed = cfg;
  severed.no_backprop = true;
  backward(sum_all(encode_batch(batch, severed, p)));
  CHECK(p.table->grad.all_zero());
}

TEST_CASE("brute-force MP oracle agrees with encode_definition") {
  Fixture f;
  ReaderConfig cfg = f.config(ReaderKind::MP, 3, 3);
  ReaderParams p;
  p.table = leaf(Tensor::uniform({6, 3}, f.rng, -2, 2));
  Definition def{"a", "c", "c", "e"};
  NodePtr enc = encode_definition(def, cfg, p);
  auto oracle = brute_mean(p.table->value, def_ids(def, f.vocab));
  for (int j = 0; j < 3; ++j) CHECK(enc->value.at(0, j) == oracle[j]);
}
