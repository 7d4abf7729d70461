#pragma once

#include <utility>
#include <vector>

#include "lexfly/ops.hpp"

namespace lexfly {

// Packed cell weights, gate order (i, f, g, o):
//   wx [d_in x 4d], wh [d x 4d], b [1 x 4d]
struct LSTMParams {
  NodePtr wx;
  NodePtr wh;
  NodePtr b;
  int d_in = 0;
  int d = 0;
};

struct LSTMState {
  NodePtr h;
  NodePtr c;
};

inline LSTMState lstm_zero_state(int batch, int d) {
  return {leaf(Tensor::zeros({batch, d})), leaf(Tensor::zeros({batch, d}))};
}

// One cell update over a batch of rows: x [B x d_in], h,c [B x d].
//   i,f,o = sigmoid gates, g = tanh candidate
//   c' = f*c + i*g,  h' = o*tanh(c')
inline LSTMState lstm_step(const NodePtr& x, const NodePtr& h, const NodePtr& c,
                           const LSTMParams& p) {
  if (x->value.cols() != p.d_in)
    throw ShapeError("lstm_step: input width " + shape_str(x->value.shape()) +
                     " does not match wx " + shape_str(p.wx->value.shape()));
  if (h->value.cols() != p.d || c->value.cols() != p.d ||
      h->value.rows() != x->value.rows() || c->value.rows() != x->value.rows())
    throw ShapeError("lstm_step: state shapes " + shape_str(h->value.shape()) +
                     "/" + shape_str(c->value.shape()) + " do not match input " +
                     shape_str(x->value.shape()) + " and width " +
                     std::to_string(p.d));
  NodePtr z = add_rows(add(matmul(x, p.wx), matmul(h, p.wh)), p.b);
  const int d = p.d;
  NodePtr i_g = sigmoid(slice_cols(z, 0, d));
  NodePtr f_g = sigmoid(slice_cols(z, d, 2 * d));
  NodePtr g_g = tanh_op(slice_cols(z, 2 * d, 3 * d));
  NodePtr o_g = sigmoid(slice_cols(z, 3 * d, 4 * d));
  NodePtr c_new = add(mul(f_g, c), mul(i_g, g_g));
  NodePtr h_new = mul(o_g, tanh_op(c_new));
  return {h_new, c_new};
}

// Runs the cell over a sequence of [B x d_in] inputs from a zero state,
// returns all hidden states (and the final state through `out_state`).
inline std::vector<NodePtr> lstm_run(const std::vector<NodePtr>& xs,
                                     const LSTMParams& p,
                                     LSTMState* out_state = nullptr) {
  if (xs.empty()) throw ContractError("lstm_run: empty input sequence");
  LSTMState st = lstm_zero_state(xs[0]->value.rows(), p.d);
  std::vector<NodePtr> hs;
  hs.reserve(xs.size());
  for (const auto& x : xs) {
    st = lstm_step(x, st.h, st.c, p);
    hs.push_back(st.h);
  }
  if (out_state) *out_state = st;
  return hs;
}

// Stacks [1 x d] rows into an [n x d] matrix node.
inline NodePtr stack_rows(const std::vector<NodePtr>& rows) {
  if (rows.empty()) throw ContractError("stack_rows: no rows");
  const int n = static_cast<int>(rows.size());
  const int w = rows[0]->value.cols();
  for (const auto& r : rows)
    if (r->value.rows() != 1 || r->value.cols() != w)
      throw ShapeError("stack_rows: expected [1x" + std::to_string(w) +
                       "] rows, got " + shape_str(r->value.shape()));
  Tensor out({n, w});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < w; ++j) out.at(i, j) = rows[i]->value.at(0, j);
  return make_node(std::move(out), "stack_rows", rows,
                   [n, w](Node&, const Tensor& g, const std::vector<Tensor*>& s) {
                     for (int i = 0; i < n; ++i)
                       for (int j = 0; j < w; ++j)
                         s[i]->at(0, j) += g.at(i, j);
                   });
}

// Splits an [n x d] matrix node into n [1 x d] row nodes.
inline std::vector<NodePtr> split_rows(const NodePtr& x) {
  detail::require_rank2(x->value, "split_rows");
  const int n = x->value.rows();
  std::vector<NodePtr> rows;
  rows.reserve(n);
  for (int i = 0; i < n; ++i) rows.push_back(embedding_lookup(x, {i}));
  return rows;
}

// Two independent directions over a length-T sequence of [1 x d_in] rows;
// per-position outputs are concatenated into [T x 2d]. Last state of each
// direction is exposed for sentence summaries.
struct BiLSTMParams {
  LSTMParams fwd;
  LSTMParams bwd;
};

struct BiLSTMOut {
  NodePtr states;    // [T x 2d]
  NodePtr fwd_last;  // [1 x d]
  NodePtr bwd_last;  // [1 x d]
};

inline BiLSTMOut bilstm_encode(const std::vector<NodePtr>& xs,
                               const BiLSTMParams& p) {
  if (xs.empty()) throw ContractError("bilstm_encode: empty input sequence");
  LSTMState fst, bst;
  std::vector<NodePtr> hf = lstm_run(xs, p.fwd, &fst);
  std::vector<NodePtr> rev(xs.rbegin(), xs.rend());
  std::vector<NodePtr> hb = lstm_run(rev, p.bwd, &bst);
  const int t = static_cast<int>(xs.size());
  std::vector<NodePtr> rows;
  rows.reserve(t);
  for (int i = 0; i < t; ++i) rows.push_back(concat_cols({hf[i], hb[t - 1 - i]}));
  return {stack_rows(rows), fst.h, bst.h};
}

}  // namespace lexfly
