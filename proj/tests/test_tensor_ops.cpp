#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "lexfly/checkpoint.hpp"
#include "lexfly/lstm.hpp"
#include "lexfly/ops.hpp"
#include "lexfly/params.hpp"

using namespace lexfly;

TEST_CASE("matmul identity and dot product") {
  // I2 . [[1,2],[3,4]] == [[1,2],[3,4]]
  auto eye = leaf(Tensor({2, 2}, {1, 0, 0, 1}));
  auto m = leaf(Tensor({2, 2}, {1, 2, 3, 4}));
  auto out = matmul(eye, m);
  CHECK(out->value.data() == std::vector<double>{1, 2, 3, 4});

  // [[1,2]] . [[3],[4]] == [[11]]
  auto a = leaf(Tensor({1, 2}, {1, 2}));
  auto b = leaf(Tensor({2, 1}, {3, 4}));
  CHECK(matmul(a, b)->value[0] == 11.0);
}

TEST_CASE("matmul shape mismatch names both shapes") {
  auto a = leaf(Tensor({2, 3}));
  auto b = leaf(Tensor({2, 2}));
  REQUIRE_THROWS_MATCHES(matmul(a, b), ShapeError,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring("[2x3]") &&
                             Catch::Matchers::ContainsSubstring("[2x2]")));
}

TEST_CASE("matmul backward matches a.grad += g.b^T, b.grad += a^T.g") {
  auto a = leaf(Tensor({1, 2}, {2, 5}));
  auto b = leaf(Tensor({2, 1}, {3, 4}));
  auto loss = sum_all(matmul(a, b));
  backward(loss);
  CHECK(a->grad.data() == std::vector<double>{3, 4});
  CHECK(b->grad.data() == std::vector<double>{2, 5});
}

TEST_CASE("softmax_rows symmetry and stability") {
  auto z = softmax_rows(leaf(Tensor({1, 2}, {0, 0})));
  CHECK(z->value[0] == Catch::Approx(0.5).margin(1e-15));
  CHECK(z->value[1] == Catch::Approx(0.5).margin(1e-15));

  // huge logits must not overflow thanks to max subtraction
  auto big = softmax_rows(leaf(Tensor({1, 2}, {1000, 1000})));
  CHECK(big->value[0] == Catch::Approx(0.5).margin(1e-15));
  CHECK(big->value.all_finite());

  // [0, ln 3] -> [0.25, 0.75]
  auto skew = softmax_rows(leaf(Tensor({1, 2}, {0.0, std::log(3.0)})));
  CHECK(skew->value[0] == Catch::Approx(0.25).margin(1e-12));
  CHECK(skew->value[1] == Catch::Approx(0.75).margin(1e-12));
}

TEST_CASE("softmax_rows rows sum to one and shift invariance") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(5));
    const int m = 1 + static_cast<int>(rng.below(6));
    Tensor x = Tensor::uniform({n, m}, rng, -5.0, 5.0);
    auto y = softmax_rows(leaf(x));
    Tensor shifted = x;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j) shifted.at(i, j) += 3.25;
    auto y2 = softmax_rows(leaf(shifted));
    for (int i = 0; i < n; ++i) {
      double sum = 0.0;
      for (int j = 0; j < m; ++j) sum += y->value.at(i, j);
      CHECK(std::fabs(sum - 1.0) <= 1e-12);
      for (int j = 0; j < m; ++j)
        CHECK(y2->value.at(i, j) == Catch::Approx(y->value.at(i, j)).margin(1e-12));
    }
  }
}

TEST_CASE("masked softmax ignores masked entries, zero row when fully masked") {
  Tensor mask({2, 3}, {1, 1, 0, 0, 0, 0});
  auto y = masked_softmax_rows(leaf(Tensor({2, 3}, {0, 0, 99, 1, 2, 3})), mask);
  CHECK(y->value.at(0, 0) == Catch::Approx(0.5).margin(1e-15));
  CHECK(y->value.at(0, 1) == Catch::Approx(0.5).margin(1e-15));
  CHECK(y->value.at(0, 2) == 0.0);
  for (int j = 0; j < 3; ++j) CHECK(y->value.at(1, j) == 0.0);
}

TEST_CASE("embedding_lookup gathers and scatter-adds") {
  auto table = leaf(Tensor({2, 2}, {1, 2, 3, 4}));
  auto out = embedding_lookup(table, {1, 0});
  CHECK(out->value.data() == std::vector<double>{3, 4, 1, 2});

  // repeated ids accumulate: upstream [[1,1],[2,2]] -> row0 grad [3,3]
  auto rep = embedding_lookup(table, {0, 0});
  auto w = leaf(Tensor({2, 2}, {1, 1, 2, 2}));
  backward(sum_all(mul(rep, w)));
  CHECK(table->grad.at(0, 0) == 3.0);
  CHECK(table->grad.at(0, 1) == 3.0);
  CHECK(table->grad.at(1, 0) == 0.0);

  REQUIRE_THROWS_MATCHES(embedding_lookup(table, {2}), IndexError,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring("2")));
}

TEST_CASE("backward contract: scalar loss only, identity grad") {
  auto x = leaf(Tensor::scalar(3.5));
  backward(x);
  CHECK(x->grad[0] == 1.0);

  auto mat = leaf(Tensor({2, 2}));
  REQUIRE_THROWS_AS(backward(mat), ContractError);
}

TEST_CASE("backward through tanh at zero gives unit grads") {
  auto x = leaf(Tensor({2, 3}));
  backward(sum_all(tanh_op(x)));
  for (std::size_t i = 0; i < x->grad.size(); ++i) CHECK(x->grad[i] == 1.0);
}

TEST_CASE("backward twice doubles every grad") {
  Rng rng(3);
  auto x = leaf(Tensor::uniform({2, 3}, rng, -1, 1));
  auto w = leaf(Tensor::uniform({3, 2}, rng, -1, 1));
  auto build = [&] { return sum_all(tanh_op(matmul(x, w))); };
  auto loss = build();
  backward(loss);
  Tensor gx = x->grad, gw = w->grad;
  backward(loss);
  for (std::size_t i = 0; i < gx.size(); ++i)
    CHECK(x->grad[i] == Catch::Approx(2.0 * gx[i]).margin(1e-15));
  for (std::size_t i = 0; i < gw.size(); ++i)
    CHECK(w->grad[i] == Catch::Approx(2.0 * gw[i]).margin(1e-15));
}

TEST_CASE("unreachable nodes keep zero grad") {
  auto x = leaf(Tensor::scalar(1.0));
  auto orphan = leaf(Tensor::scalar(2.0));
  backward(sum_all(tanh_op(x)));
  CHECK(orphan->grad[0] == 0.0);
}

TEST_CASE("lstm_step zero fixed point and forget-gate carry") {
  ParamStore store;
  LSTMParams p;
  p.d_in = 1;
  p.d = 1;
  p.wx = leaf(Tensor({1, 4}));
  p.wh = leaf(Tensor({1, 4}));
  p.b = leaf(Tensor({1, 4}));

  auto zero = lstm_zero_state(1, 1);
  auto st = lstm_step(leaf(Tensor({1, 1})), zero.h, zero.c, p);
  CHECK(st.h->value[0] == 0.0);
  CHECK(st.c->value[0] == 0.0);

  // saturated forget gate: c' ~= c
  p.b->value.at(0, 1) = 50.0;
  auto carried = lstm_step(leaf(Tensor({1, 1})), zero.h,
                           leaf(Tensor({1, 1}, {1.0})), p);
  CHECK(carried.c->value[0] == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("lstm_step shape mismatch is a dimension error") {
  Rng rng(5);
  ParamStore store;
  LSTMParams p = make_lstm_params(store, "cell", 3, 2, rng);
  auto st = lstm_zero_state(1, 2);
  REQUIRE_THROWS_AS(lstm_step(leaf(Tensor({1, 4})), st.h, st.c, p), ShapeError);
}

TEST_CASE("forward values are deterministic given the seed") {
  auto run = [] {
    Rng rng(91);
    auto x = leaf(Tensor::uniform({3, 4}, rng, -2, 2));
    auto w = leaf(Tensor::uniform({4, 3}, rng, -2, 2));
    return softmax_rows(matmul(tanh_op(x), w))->value;
  };
  Tensor a = run(), b = run();
  REQUIRE(a.data() == b.data());  // bit-identical
}

TEST_CASE("elementwise and structural op forwards") {
  auto a = leaf(Tensor({1, 3}, {1, 2, 3}));
  auto b = leaf(Tensor({1, 3}, {4, 5, 6}));
  CHECK(add(a, b)->value.data() == std::vector<double>{5, 7, 9});
  CHECK(sub(b, a)->value.data() == std::vector<double>{3, 3, 3});
  CHECK(mul(a, b)->value.data() == std::vector<double>{4, 10, 18});
  CHECK(relu(leaf(Tensor({1, 3}, {-1, 0, 2})))->value.data() ==
        std::vector<double>{0, 0, 2});
  CHECK(transpose(leaf(Tensor({2, 3}, {1, 2, 3, 4, 5, 6})))->value.data() ==
        std::vector<double>{1, 4, 2, 5, 3, 6});
  CHECK(concat_cols({a, b})->value.data() ==
        std::vector<double>{1, 2, 3, 4, 5, 6});
  CHECK(slice_cols(concat_cols({a, b}), 2, 4)->value.data() ==
        std::vector<double>{3, 4});
  CHECK(mean_axis(leaf(Tensor({2, 2}, {1, 2, 3, 4})), 0)->value.data() ==
        std::vector<double>{2, 3});
  CHECK(mean_axis(leaf(Tensor({2, 2}, {1, 2, 3, 4})), 1)->value.data() ==
        std::vector<double>{1.5, 3.5});
}

TEST_CASE("scatter_mean_rows means groups and zeroes empty ones") {
  auto x = leaf(Tensor({2, 2}, {1, 2, 3, 4}));
  auto out = scatter_mean_rows(x, {{0, 1}, {}, {1}});
  CHECK(out->value.data() == std::vector<double>{2, 3, 0, 0, 3, 4});
}

TEST_CASE("detach blocks gradient flow") {
  auto x = leaf(Tensor::scalar(2.0));
  auto y = detach(tanh_op(x));
  backward(sum_all(y));
  CHECK(x->grad[0] == 0.0);
  CHECK(y->value[0] == std::tanh(2.0));
}

TEST_CASE("cross entropy of uniform logits is log C") {
  auto logits = leaf(Tensor({2, 4}));
  auto loss = cross_entropy_with_logits(logits, {1, 3});
  CHECK(loss->value[0] == Catch::Approx(std::log(4.0)).margin(1e-12));
  REQUIRE_THROWS_AS(cross_entropy_with_logits(logits, {4, 0}), IndexError);
  REQUIRE_THROWS_AS(cross_entropy_with_logits(logits, {0}), ContractError);
}
