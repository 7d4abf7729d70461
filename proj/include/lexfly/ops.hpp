#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "lexfly/node.hpp"

// Differentiable primitives. Conventions:
//   - matrices are row-major [rows x cols]; biases are [1 x d] rows
//   - every op validates shapes up front and throws ShapeError/IndexError
//   - backprop closures accumulate into sinks, never overwrite

namespace lexfly {

namespace detail {

inline void require_rank2(const Tensor& t, const char* op) {
  if (t.rank() != 2)
    throw ShapeError(std::string(op) + ": expected rank-2 tensor, got " +
                     shape_str(t.shape()));
}

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b))
    throw ShapeError(std::string(op) + ": shape mismatch " +
                     shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

}  // namespace detail

// ---------------------------------------------------------------- elementwise

inline NodePtr add(const NodePtr& a, const NodePtr& b) {
  detail::require_same_shape(a->value, b->value, "add");
  Tensor out = a->value;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b->value[i];
  return make_node(std::move(out), "add", {a, b},
                   [](Node&, const Tensor& g, const std::vector<Tensor*>& s) {
                     *s[0] += g;
                     *s[1] += g;
                   });
}

inline NodePtr sub(const NodePtr& a, const NodePtr& b) {
  detail::require_same_shape(a->value, b->value, "sub");
  Tensor out = a->value;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b->value[i];
  return make_node(std::move(out), "sub", {a, b},
                   [](Node&, const Tensor& g, const std::vector<Tensor*>& s) {
                     *s[0] += g;
                     for (std::size_t i = 0; i < g.size(); ++i)
                       (*s[1])[i] -= g[i];
                   });
}

inline NodePtr mul(const NodePtr& a, const NodePtr& b) {
  detail::require_same_shape(a->value, b->value, "mul");
  Tensor out = a->value;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b->value[i];
  return make_node(std::move(out), "mul", {a, b},
                   [](Node& self, const Tensor& g, const std::vector<Tensor*>& s) {
                     const Tensor& av = self.parents[0]->value;
                     const Tensor& bv = self.parents[1]->value;
                     for (std::size_t i = 0; i < g.size(); ++i) {
                       (*s[0])[i] += g[i] * bv[i];
                       (*s[1])[i] += g[i] * av[i];
                     }
                   });
}

inline NodePtr scale(const NodePtr& a, double c) {
  Tensor out = a->value;
  for (auto& v : out.data()) v *= c;
  return make_node(std::move(out), "scale", {a},
                   [c](Node&, const Tensor& g, const std::vector<Tensor*>& s) {
                     for (std::size_t i = 0; i < g.size(); ++i)
                       (*s[0])[i] += g[i] * c;
                   });
}

inline NodePtr relu(const NodePtr& a) {
  Tensor out = a->value;
  for (auto& v : out.data()) v = v > 0.0 ? v : 0.0;
  return make_node(std::move(out), "relu", {a},
                   [](Node& self, const Tensor& g, const std::vector<Tensor*>& s) {
                     const Tensor& av = self.parents[0]->value;
                     for (std::size_t i = 0; i < g.size(); ++i)
                       (*s[0])[i] += av[i] > 0.0 ? g[i] : 0.0;
                   });
}

inline NodePtr sigmoid(const NodePtr& a) {
  Tensor out = a->value;
  for (auto& v : out.data()) v = 1.0 / (1.0 + std::exp(-v));
  return make_node(std::move(out), "sigmoid", {a},
                   [](Node& self, const Tensor& g, const std::vector<Tensor*>& s) {
                     const Tensor& y = self.value;
                     for (std::size_t i = 0; i < g.size(); ++i)
                       (*s[0])[i] += g[i] * y[i] * (1.0 - y[i]);
                   });
}

inline NodePtr tanh_op(const NodePtr& a) {
  Tensor out = a->value;
  for (auto& v : out.data()) v = std::tanh(v);
  return make_node(std::move(out), "tanh", {a},
                   [](Node& self, const Tensor& g, const std::vector<Tensor*>& s) {
                     const Tensor& y = self.value;
                     for (std::size_t i = 0; i < g.size(); ++i)
                       (*s[0])[i] += g[i] * (1.0 - y[i] * y[i]);
                   });
}

// Forward copy with the gradient path severed (the no-backprop reader mode).
inline NodePtr detach(const NodePtr& a) {
  return make_node(a->value, "detach", {});
}

// ------------------------------------------------------------------- matrix

inline NodePtr matmul(const NodePtr& a, const NodePtr& b) {
  detail::require_rank2(a->value, "matmul");
  detail::require_rank2(b->value, "matmul");
  const int n = a->value.rows(), k = a->value.cols();
  const int k2 = b->value.rows(), m = b->value.cols();
  if (k != k2)
    throw ShapeError("matmul: inner dimensions disagree, " +
                     shape_str(a->value.shape()) + " vs " +
                     shape_str(b->value.shape()));
  Tensor out({n, m});
  for (int i = 0; i < n; ++i)
    for (int l = 0; l < k; ++l) {
      const double av = a->value.at(i, l);
      if (av == 0.0) continue;
      for (int j = 0; j < m; ++j) out.at(i, j) += av * b->value.at(l, j);
    }
  return make_node(std::move(out), "matmul", {a, b},
                   [n, k, m](Node& self, const Tensor& g,
                             const std::vector<Tensor*>& s) {
                     const Tensor& av = self.parents[0]->value;
                     const Tensor& bv = self.parents[1]->value;
                     // da += g . b^T
                     for (int i = 0; i < n; ++i)
                       for (int j = 0; j < m; ++j) {
                         const double gv = g.at(i, j);
                         if (gv == 0.0) continue;
                         for (int l = 0; l < k; ++l)
                           s[0]->at(i, l) += gv * bv.at(l, j);
                       }
                     // db += a^T . g
                     for (int i = 0; i < n; ++i)
                       for (int l = 0; l < k; ++l) {
                         const double avv = av.at(i, l);
                         if (avv == 0.0) continue;
                         for (int j = 0; j < m; ++j)
                           s[1]->at(l, j) += avv * g.at(i, j);
                       }
                   });
}

inline NodePtr transpose(const NodePtr& a) {
  detail::require_rank2(a->value, "transpose");
  const int n = a->value.rows(), m = a->value.cols();
  Tensor out({m, n});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) out.at(j, i) = a->value.at(i, j);
  return make_node(std::move(out), "transpose", {a},
                   [n, m](Node&, const Tensor& g, const std::vector<Tensor*>& s) {
                     for (int i = 0; i < n; ++i)
                       for (int j = 0; j < m; ++j)
                         s[0]->at(i, j) += g.at(j, i);
                   });
}

// x [n x m] + row [1 x m], broadcast down the rows (bias addition).
inline NodePtr add_rows(const NodePtr& x, const NodePtr& row) {
  detail::require_rank2(x->value, "add_rows");
  detail::require_rank2(row->value, "add_rows");
  const int n = x->value.rows(), m = x->value.cols();
  if (row->value.rows() != 1 || row->value.cols() != m)
    throw ShapeError("add_rows: bias must be [1x" + std::to_string(m) +
                     "], got " + shape_str(row->value.shape()));
  Tensor out = x->value;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) out.at(i, j) += row->value.at(0, j);
  return make_node(std::move(out), "add_rows", {x, row},
                   [n, m](Node&, const Tensor& g, const std::vector<Tensor*>& s) {
                     *s[0] += g;
                     for (int i = 0; i < n; ++i)
                       for (int j = 0; j < m; ++j)
                         s[1]->at(0, j) += g.at(i, j);
                   });
}

// Row i of x scaled by col[i]; col is [n x 1]. Used for masking and
// per-row means.
inline NodePtr mul_rows(const NodePtr& x, const NodePtr& col) {
  detail::require_rank2(x->value, "mul_rows");
  detail::require_rank2(col->value, "mul_rows");
  const int n = x->value.rows(), m = x->value.cols();
  if (col->value.rows() != n || col->value.cols() != 1)
    throw ShapeError("mul_rows: column must be [" + std::to_string(n) +
                     "x1], got " + shape_str(col->value.shape()));
  Tensor out = x->value;
  for (int i = 0; i < n; ++i) {
    const double c = col->value.at(i, 0);
    for (int j = 0; j < m; ++j) out.at(i, j) *= c;
  }
  return make_node(std::move(out), "mul_rows", {x, col},
                   [n, m](Node& self, const Tensor& g, const std::vector<Tensor*>& s) {
                     const Tensor& xv = self.parents[0]->value;
                     const Tensor& cv = self.parents[1]->value;
                     for (int i = 0; i < n; ++i) {
                       const double c = cv.at(i, 0);
                       double dot = 0.0;
                       for (int j = 0; j < m; ++j) {
                         s[0]->at(i, j) += g.at(i, j) * c;
                         dot += g.at(i, j) * xv.at(i, j);
                       }
                       s[1]->at(i, 0) += dot;
                     }
                   });
}

// Concatenation along the feature axis: [n x m1], [n x m2], ... -> [n x sum].
inline NodePtr concat_cols(const std::vector<NodePtr>& parts) {
  if (parts.empty()) throw ContractError("concat_cols: no inputs");
  const int n = parts[0]->value.rows();
  int total = 0;
  std::vector<int> widths;
  for (const auto& p : parts) {
    detail::require_rank2(p->value, "concat_cols");
    if (p->value.rows() != n)
      throw ShapeError("concat_cols: row counts disagree, " +
                       shape_str(parts[0]->value.shape()) + " vs " +
                       shape_str(p->value.shape()));
    widths.push_back(p->value.cols());
    total += p->value.cols();
  }
  Tensor out({n, total});
  int off = 0;
  for (std::size_t pi = 0; pi < parts.size(); ++pi) {
    const Tensor& v = parts[pi]->value;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < widths[pi]; ++j) out.at(i, off + j) = v.at(i, j);
    off += widths[pi];
  }
  return make_node(std::move(out), "concat_cols", parts,
                   [n, widths](Node&, const Tensor& g,
                               const std::vector<Tensor*>& s) {
                     int off = 0;
                     for (std::size_t pi = 0; pi < widths.size(); ++pi) {
                       for (int i = 0; i < n; ++i)
                         for (int j = 0; j < widths[pi]; ++j)
                           s[pi]->at(i, j) += g.at(i, off + j);
                       off += widths[pi];
                     }
                   });
}

// Columns [c0, c1) of x.
inline NodePtr slice_cols(const NodePtr& x, int c0, int c1) {
  detail::require_rank2(x->value, "slice_cols");
  const int n = x->value.rows(), m = x->value.cols();
  if (c0 < 0 || c1 > m || c0 >= c1)
    throw IndexError("slice_cols: range [" + std::to_string(c0) + ", " +
                     std::to_string(c1) + ") invalid for width " +
                     std::to_string(m));
  Tensor out({n, c1 - c0});
  for (int i = 0; i < n; ++i)
    for (int j = c0; j < c1; ++j) out.at(i, j - c0) = x->value.at(i, j);
  return make_node(std::move(out), "slice_cols", {x},
                   [n, c0, c1](Node&, const Tensor& g,
                               const std::vector<Tensor*>& s) {
                     for (int i = 0; i < n; ++i)
                       for (int j = c0; j < c1; ++j)
                         s[0]->at(i, j) += g.at(i, j - c0);
                   });
}

// ---------------------------------------------------------------- reductions

inline NodePtr sum_all(const NodePtr& x) {
  double total = 0.0;
  for (double v : x->value.data()) total += v;
  return make_node(Tensor::scalar(total), "sum_all", {x},
                   [](Node&, const Tensor& g, const std::vector<Tensor*>& s) {
                     for (auto& v : s[0]->data()) v += g[0];
                   });
}

// Mean over an axis of a matrix: axis 0 -> [1 x m], axis 1 -> [n x 1].
inline NodePtr mean_axis(const NodePtr& x, int axis) {
  detail::require_rank2(x->value, "mean_axis");
  const int n = x->value.rows(), m = x->value.cols();
  if (axis != 0 && axis != 1)
    throw ContractError("mean_axis: axis must be 0 or 1");
  if (axis == 0) {
    Tensor out({1, m});
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j) out.at(0, j) += x->value.at(i, j);
    for (int j = 0; j < m; ++j) out.at(0, j) /= n;
    return make_node(std::move(out), "mean_axis0", {x},
                     [n, m](Node&, const Tensor& g, const std::vector<Tensor*>& s) {
                       for (int i = 0; i < n; ++i)
                         for (int j = 0; j < m; ++j)
                           s[0]->at(i, j) += g.at(0, j) / n;
                     });
  }
  Tensor out({n, 1});
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) out.at(i, 0) += x->value.at(i, j);
    out.at(i, 0) /= m;
  }
  return make_node(std::move(out), "mean_axis1", {x},
                   [n, m](Node&, const Tensor& g, const std::vector<Tensor*>& s) {
                     for (int i = 0; i < n; ++i)
                       for (int j = 0; j < m; ++j)
                         s[0]->at(i, j) += g.at(i, 0) / m;
                   });
}

// ------------------------------------------------------------------ softmax

// Row-wise softmax with per-row max subtraction.
inline NodePtr softmax_rows(const NodePtr& x) {
  detail::require_rank2(x->value, "softmax_rows");
  const int n = x->value.rows(), m = x->value.cols();
  Tensor out({n, m});
  for (int i = 0; i < n; ++i) {
    double mx = x->value.at(i, 0);
    for (int j = 1; j < m; ++j) mx = std::max(mx, x->value.at(i, j));
    double z = 0.0;
    for (int j = 0; j < m; ++j) {
      out.at(i, j) = std::exp(x->value.at(i, j) - mx);
      z += out.at(i, j);
    }
    for (int j = 0; j < m; ++j) out.at(i, j) /= z;
  }
  return make_node(std::move(out), "softmax_rows", {x},
                   [n, m](Node& self, const Tensor& g,
                          const std::vector<Tensor*>& s) {
                     const Tensor& y = self.value;
                     for (int i = 0; i < n; ++i) {
                       double dot = 0.0;
                       for (int j = 0; j < m; ++j) dot += g.at(i, j) * y.at(i, j);
                       for (int j = 0; j < m; ++j)
                         s[0]->at(i, j) += y.at(i, j) * (g.at(i, j) - dot);
                     }
                   });
}

// Softmax over entries with mask != 0 only; a fully-masked row is all zeros.
// The mask is a constant, not a differentiable input.
inline NodePtr masked_softmax_rows(const NodePtr& x, const Tensor& mask) {
  detail::require_rank2(x->value, "masked_softmax_rows");
  detail::require_same_shape(x->value, mask, "masked_softmax_rows");
  const int n = x->value.rows(), m = x->value.cols();
  Tensor out({n, m});
  for (int i = 0; i < n; ++i) {
    double mx = -1.0;
    bool any = false;
    for (int j = 0; j < m; ++j)
      if (mask.at(i, j) != 0.0) {
        mx = any ? std::max(mx, x->value.at(i, j)) : x->value.at(i, j);
        any = true;
      }
    if (!any) continue;  // zero row
    double z = 0.0;
    for (int j = 0; j < m; ++j) {
      if (mask.at(i, j) == 0.0) continue;
      out.at(i, j) = std::exp(x->value.at(i, j) - mx);
      z += out.at(i, j);
    }
    for (int j = 0; j < m; ++j) out.at(i, j) /= z;
  }
  return make_node(std::move(out), "masked_softmax_rows", {x},
                   [n, m](Node& self, const Tensor& g,
                          const std::vector<Tensor*>& s) {
                     // masked entries have y == 0, so the softmax jacobian
                     // formula covers them with no special case
                     const Tensor& y = self.value;
                     for (int i = 0; i < n; ++i) {
                       double dot = 0.0;
                       for (int j = 0; j < m; ++j) dot += g.at(i, j) * y.at(i, j);
                       for (int j = 0; j < m; ++j)
                         s[0]->at(i, j) += y.at(i, j) * (g.at(i, j) - dot);
                     }
                   });
}

inline NodePtr log_softmax_rows(const NodePtr& x) {
  detail::require_rank2(x->value, "log_softmax_rows");
  const int n = x->value.rows(), m = x->value.cols();
  Tensor out({n, m});
  for (int i = 0; i < n; ++i) {
    double mx = x->value.at(i, 0);
    for (int j = 1; j < m; ++j) mx = std::max(mx, x->value.at(i, j));
    double z = 0.0;
    for (int j = 0; j < m; ++j) z += std::exp(x->value.at(i, j) - mx);
    const double lz = mx + std::log(z);
    for (int j = 0; j < m; ++j) out.at(i, j) = x->value.at(i, j) - lz;
  }
  return make_node(std::move(out), "log_softmax_rows", {x},
                   [n, m](Node& self, const Tensor& g,
                          const std::vector<Tensor*>& s) {
                     const Tensor& y = self.value;
                     for (int i = 0; i < n; ++i) {
                       double rowsum = 0.0;
                       for (int j = 0; j < m; ++j) rowsum += g.at(i, j);
                       for (int j = 0; j < m; ++j)
                         s[0]->at(i, j) += g.at(i, j) - std::exp(y.at(i, j)) * rowsum;
                     }
                   });
}

// Mean negative target log-likelihood over rows of logits [n x C].
inline NodePtr cross_entropy_with_logits(const NodePtr& logits,
                                         const std::vector<int>& targets) {
  detail::require_rank2(logits->value, "cross_entropy_with_logits");
  const int n = logits->value.rows(), c = logits->value.cols();
  if (static_cast<int>(targets.size()) != n)
    throw ContractError("cross_entropy_with_logits: " +
                        std::to_string(targets.size()) + " targets for " +
                        std::to_string(n) + " rows");
  for (int t : targets)
    if (t < 0 || t >= c)
      throw IndexError("cross_entropy_with_logits: target " +
                       std::to_string(t) + " outside [0, " +
                       std::to_string(c) + ")");
  Tensor probs({n, c});
  double loss = 0.0;
  for (int i = 0; i < n; ++i) {
    double mx = logits->value.at(i, 0);
    for (int j = 1; j < c; ++j) mx = std::max(mx, logits->value.at(i, j));
    double z = 0.0;
    for (int j = 0; j < c; ++j) {
      probs.at(i, j) = std::exp(logits->value.at(i, j) - mx);
      z += probs.at(i, j);
    }
    for (int j = 0; j < c; ++j) probs.at(i, j) /= z;
    loss -= logits->value.at(i, targets[i]) - mx - std::log(z);
  }
  loss /= n;
  return make_node(Tensor::scalar(loss), "cross_entropy", {logits},
                   [n, c, targets, probs](Node&, const Tensor& g,
                                          const std::vector<Tensor*>& s) {
                     const double gv = g[0] / n;
                     for (int i = 0; i < n; ++i) {
                       for (int j = 0; j < c; ++j)
                         s[0]->at(i, j) += gv * probs.at(i, j);
                       s[0]->at(i, targets[i]) -= gv;
                     }
                   });
}

// ------------------------------------------------------------------- gather

// Row gather; backward scatter-adds, so repeated ids accumulate.
inline NodePtr embedding_lookup(const NodePtr& table,
                                const std::vector<int>& ids) {
  detail::require_rank2(table->value, "embedding_lookup");
  const int v = table->value.rows(), d = table->value.cols();
  for (int id : ids)
    if (id < 0 || id >= v)
      throw IndexError("embedding_lookup: id " + std::to_string(id) +
                       " outside [0, " + std::to_string(v) + ")");
  const int n = static_cast<int>(ids.size());
  if (n == 0) throw ContractError("embedding_lookup: empty id list");
  Tensor out({n, d});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) out.at(i, j) = table->value.at(ids[i], j);
  return make_node(std::move(out), "embedding_lookup", {table},
                   [ids, d](Node&, const Tensor& g,
                            const std::vector<Tensor*>& s) {
                     for (std::size_t i = 0; i < ids.size(); ++i)
                       for (int j = 0; j < d; ++j)
                         s[0]->at(ids[i], j) += g.at(static_cast<int>(i), j);
                   });
}

// Row o of the output is the mean of x's rows listed in groups[o]; an empty
// group yields a zero row. This is the scatter half of batched definition
// encoding.
inline NodePtr scatter_mean_rows(const NodePtr& x,
                                 const std::vector<std::vector<int>>& groups) {
  detail::require_rank2(x->value, "scatter_mean_rows");
  const int u = x->value.rows(), d = x->value.cols();
  for (const auto& grp : groups)
    for (int idx : grp)
      if (idx < 0 || idx >= u)
        throw IndexError("scatter_mean_rows: index " + std::to_string(idx) +
                         " outside [0, " + std::to_string(u) + ")");
  const int n = static_cast<int>(groups.size());
  if (n == 0) throw ContractError("scatter_mean_rows: no groups");
  Tensor out({n, d});
  for (int o = 0; o < n; ++o) {
    if (groups[o].empty()) continue;
    for (int idx : groups[o])
      for (int j = 0; j < d; ++j) out.at(o, j) += x->value.at(idx, j);
    for (int j = 0; j < d; ++j) out.at(o, j) /= groups[o].size();
  }
  return make_node(std::move(out), "scatter_mean_rows", {x},
                   [groups, d](Node&, const Tensor& g,
                               const std::vector<Tensor*>& s) {
                     for (std::size_t o = 0; o < groups.size(); ++o) {
                       if (groups[o].empty()) continue;
                       const double inv = 1.0 / groups[o].size();
                       for (int idx : groups[o])
                         for (int j = 0; j < d; ++j)
                           s[0]->at(idx, j) += g.at(static_cast<int>(o), j) * inv;
                     }
                   });
}

}  // namespace lexfly
