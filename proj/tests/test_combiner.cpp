#include <catch2/catch_amalgamated.hpp>

#include "lexfly/combiner.hpp"

using namespace lexfly;

namespace {

CombinerConfig cfg_of(CombineMode mode, int d = 2, int d_out = 2,
                      std::uint64_t seed = 5) {
  CombinerConfig c;
  c.mode = mode;
  c.d = d;
  c.d_out = d_out;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("transform_sum with identity W adds e_d") {
  Combiner c(cfg_of(CombineMode::TransformSum),
             leaf(Tensor({2, 2}, {1, 0, 0, 1})));
  auto e = leaf(Tensor({1, 2}, {1, 0}));
  auto ed = leaf(Tensor({1, 2}, {0, 1}));
  CHECK(c.combine("w", e, ed, true)->value.data() ==
        std::vector<double>{1, 1});
}

TEST_CASE("zero e_d reduces transform_sum and sum to e exactly") {
  auto e = leaf(Tensor({1, 2}, {0.25, -3.5}));
  auto zero = leaf(Tensor({1, 2}));
  Rng rng(3);
  Combiner ts(cfg_of(CombineMode::TransformSum),
              leaf(Tensor::uniform({2, 2}, rng, -1, 1)));
  CHECK(ts.combine("w", e, zero, false)->value.data() == e->value.data());
  Combiner sum(cfg_of(CombineMode::Sum));
  CHECK(sum.combine("w", e, zero, false)->value.data() == e->value.data());
}

TEST_CASE("replace_oov keeps e in vocab, takes e_d out of vocab") {
  Combiner c(cfg_of(CombineMode::ReplaceOov));
  auto e = leaf(Tensor({1, 2}, {1, 1}));
  auto ed = leaf(Tensor({1, 2}, {2, 2}));
  CHECK(c.combine("w", e, ed, true)->value.data() == std::vector<double>{1, 1});
  CHECK(c.combine("w", e, ed, false)->value.data() == std::vector<double>{2, 2});
  // zero e_d means no definition: fall back to e (the UNK path)
  auto zero = leaf(Tensor({1, 2}));
  CHECK(c.combine("w", e, zero, false)->value.data() ==
        std::vector<double>{1, 1});
}

TEST_CASE("fixed_random_oov vectors are per-word stable within a run") {
  Combiner c(cfg_of(CombineMode::FixedRandomOov));
  auto e = leaf(Tensor({1, 2}, {9, 9}));
  auto ed = leaf(Tensor({1, 2}));
  auto first = c.combine("rare", e, ed, false)->value;
  auto second = c.combine("rare", e, ed, false)->value;
  REQUIRE(first.data() == second.data());

  auto other = c.combine("otherword", e, ed, false)->value;
  CHECK(first.data() != other.data());
  // in-vocab words keep their embedding
  CHECK(c.combine("rare", e, ed, true)->value.data() ==
        std::vector<double>{9, 9});

  // same seed, fresh run: same vectors; different seed: different ones
  Combiner rerun(cfg_of(CombineMode::FixedRandomOov));
  CHECK(rerun.combine("rare", e, ed, false)->value.data() == first.data());
  Combiner reseeded(cfg_of(CombineMode::FixedRandomOov, 2, 2, 6));
  CHECK(reseeded.combine("rare", e, ed, false)->value.data() != first.data());
}

TEST_CASE("with zero definition coverage every mode but fixed_random matches baseline") {
  Rng rng(11);
  auto e = leaf(Tensor::uniform({1, 3}, rng, -1, 1));
  auto zero = leaf(Tensor({1, 3}));
  Combiner base(cfg_of(CombineMode::Baseline, 3, 3));
  const auto expected = base.combine("w", e, zero, false)->value.data();

  Combiner ts(cfg_of(CombineMode::TransformSum, 3, 3),
              leaf(Tensor::uniform({3, 3}, rng, -1, 1)));
  Combiner sum(cfg_of(CombineMode::Sum, 3, 3));
  Combiner rep(cfg_of(CombineMode::ReplaceOov, 3, 3));
  for (bool in_vocab : {true, false}) {
    CHECK(ts.combine("w", e, zero, in_vocab)->value.data() == expected);
    CHECK(sum.combine("w", e, zero, in_vocab)->value.data() == expected);
    CHECK(rep.combine("w", e, zero, in_vocab)->value.data() == expected);
  }
  Combiner fr(cfg_of(CombineMode::FixedRandomOov, 3, 3));
  CHECK(fr.combine("w", e, zero, false)->value.data() != expected);
}

TEST_CASE("transform_sum with W = 0 equals baseline and still trains W") {
  auto w = leaf(Tensor({2, 2}));
  Combiner c(cfg_of(CombineMode::TransformSum), w);
  Rng rng(13);
  auto e = leaf(Tensor::uniform({1, 2}, rng, -1, 1));
  auto ed = leaf(Tensor::uniform({1, 2}, rng, -1, 1));
  NodePtr out = c.combine("w", e, ed, true);
  CHECK(out->value.data() == e->value.data());
  backward(sum_all(out));
  bool any = false;
  for (double g : w->grad.data()) any |= (g != 0.0);
  CHECK(any);  // the gradient path to learn W from zero exists
}

TEST_CASE("combine_rows matches per-word combine in every mode") {
  Rng rng(19);
  std::vector<std::string> words{"in1", "rare1", "in2", "rare2", "nodef"};
  std::vector<bool> in_vocab{true, false, true, false, false};
  Tensor e_rows = Tensor::uniform({5, 3}, rng, -1, 1);
  Tensor ed_rows = Tensor::uniform({5, 3}, rng, -1, 1);
  for (int j = 0; j < 3; ++j) ed_rows.at(4, j) = 0.0;  // nodef: zero e_d

  for (CombineMode mode :
       {CombineMode::TransformSum, CombineMode::Sum, CombineMode::ReplaceOov,
        CombineMode::Baseline, CombineMode::FixedRandomOov}) {
    NodePtr w = mode == CombineMode::TransformSum
                    ? leaf(Tensor::uniform({3, 3}, rng, -1, 1))
                    : nullptr;
    Combiner c(cfg_of(mode, 3, 3), w);
    NodePtr rows = c.combine_rows(words, leaf(e_rows), leaf(ed_rows), in_vocab);
    for (int i = 0; i < 5; ++i) {
      Tensor e({1, 3}), ed({1, 3});
      for (int j = 0; j < 3; ++j) {
        e.at(0, j) = e_rows.at(i, j);
        ed.at(0, j) = ed_rows.at(i, j);
      }
      NodePtr one = c.combine(words[i], leaf(e), leaf(ed), in_vocab[i]);
      for (int j = 0; j < 3; ++j)
        CHECK(rows->value.at(i, j) ==
              Catch::Approx(one->value.at(0, j)).margin(1e-12));
    }
  }
}

TEST_CASE("combiner configuration errors") {
  REQUIRE_THROWS_AS(Combiner(cfg_of(CombineMode::TransformSum), nullptr),
                    ContractError);
  REQUIRE_THROWS_AS(Combiner(cfg_of(CombineMode::Sum, 2, 3)), ContractError);
  Combiner c(cfg_of(CombineMode::Sum));
  auto e = leaf(Tensor({1, 2}));
  auto bad = leaf(Tensor({1, 3}));
  REQUIRE_THROWS_AS(c.combine("w", e, bad, true), ShapeError);
}
