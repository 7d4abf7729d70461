#pragma once

#include <memory>
#include <string>
#include <vector>

#include "lexfly/embedder.hpp"
#include "lexfly/lstm.hpp"

namespace lexfly {

// Coattention span predictor. Context and question are encoded by a shared
// LSTM plus (by default separate) linear transforms into C [n x d] and
// Q [m x d]; affinity L = C.Q^T feeds row softmaxes for both attention
// directions; U0 = [C | A_C.Q | A_C.A_Q.C] goes through a biLSTM and a ReLU
// layer; two linear heads score span start and end per position.
struct QAConfig {
  int d = 32;  // embedding, encoder and U2 width
  bool share_proj = false;
  AuxSpec aux;
};

struct QAResult {
  NodePtr start_logits;  // [1 x n]
  NodePtr end_logits;    // [1 x n]
  Tensor attention;      // A_C [n x m], forward value
  int u0_width = 0;
};

class QAModel {
 public:
  QAModel(const QAConfig& cfg, const Vocabulary& v_train,
          const Vocabulary* v_dict, const Vocabulary* v_char,
          const Dictionary* dict, std::uint64_t seed)
      : cfg_(cfg), rng_(seed) {
    if (cfg_.d % 2 != 0) throw ContractError("QAModel: d must be even");
    const int d = cfg_.d;
    emb_ = store_.add_uniform("emb", {v_train.size(), d}, rng_);
    embedder_ = std::make_unique<AuxEmbedder>(cfg_.aux, d, v_train, v_dict,
                                              v_char, dict, emb_, store_,
                                              "aux", rng_);
    enc_ = make_lstm_params(store_, "enc", d, d, rng_);
    proj_c_w_ = store_.add_uniform("proj_c.w", {d, d}, rng_);
    proj_c_b_ = store_.add_uniform("proj_c.b", {1, d}, rng_);
    if (cfg_.share_proj) {
      proj_q_w_ = proj_c_w_;
      proj_q_b_ = proj_c_b_;
    } else {
      proj_q_w_ = store_.add_uniform("proj_q.w", {d, d}, rng_);
      proj_q_b_ = store_.add_uniform("proj_q.b", {1, d}, rng_);
    }
    fuse_ = make_bilstm_params(store_, "fuse", 3 * d, d / 2, rng_);
    u2_w_ = store_.add_uniform("u2.w", {d, d}, rng_);
    u2_b_ = store_.add_uniform("u2.b", {1, d}, rng_);
    start_w_ = store_.add_uniform("start.w", {d, 1}, rng_);
    start_b_ = store_.add_uniform("start.b", {1, 1}, rng_);
    end_w_ = store_.add_uniform("end.w", {d, 1}, rng_);
    end_b_ = store_.add_uniform("end.b", {1, 1}, rng_);
  }

  ParamStore& params() { return store_; }
  AuxEmbedder& embedder() { return *embedder_; }
  const QAConfig& config() const { return cfg_; }

  QAResult forward(const std::vector<std::string>& context,
                   const std::vector<std::string>& question) {
    if (context.empty() || question.empty())
      throw ContractError("qa_forward: context and question must be nonempty");
    NodePtr c_mat = encode(context, proj_c_w_, proj_c_b_);   // [n x d]
    NodePtr q_mat = encode(question, proj_q_w_, proj_q_b_);  // [m x d]

    NodePtr affinity = matmul(c_mat, transpose(q_mat));      // L [n x m]
    NodePtr a_c = softmax_rows(affinity);                    // [n x m]
    NodePtr a_q = softmax_rows(transpose(affinity));         // [m x n]

    NodePtr u0 = concat_cols(
        {c_mat, matmul(a_c, q_mat), matmul(a_c, matmul(a_q, c_mat))});
    NodePtr u1 = bilstm_encode(split_rows(u0), fuse_).states;  // [n x d]
    NodePtr u2 = relu(add_rows(matmul(u1, u2_w_), u2_b_));

    QAResult res;
    res.start_logits = transpose(add_rows(matmul(u2, start_w_), start_b_));
    res.end_logits = transpose(add_rows(matmul(u2, end_w_), end_b_));
    res.attention = a_c->value;
    res.u0_width = u0->value.cols();
    return res;
  }

  // Sum of start and end cross-entropies for one example.
  NodePtr loss(const std::vector<std::string>& context,
               const std::vector<std::string>& question, int start, int end) {
    const int n = static_cast<int>(context.size());
    if (start < 0 || end < start || end >= n)
      throw ContractError("qa loss: bad span (" + std::to_string(start) + ", " +
                          std::to_string(end) + ") for context length " +
                          std::to_string(n));
    QAResult res = forward(context, question);
    return add(cross_entropy_with_logits(res.start_logits, {start}),
               cross_entropy_with_logits(res.end_logits, {end}));
  }

  // Greedy span: best start, then best end at or after it.
  static std::pair<int, int> predict_span(const QAResult& res) {
    const Tensor& s = res.start_logits->value;
    const Tensor& e = res.end_logits->value;
    int best_s = 0;
    for (int i = 1; i < s.cols(); ++i)
      if (s.at(0, i) > s.at(0, best_s)) best_s = i;
    int best_e = best_s;
    for (int i = best_s + 1; i < e.cols(); ++i)
      if (e.at(0, i) > e.at(0, best_e)) best_e = i;
    return {best_s, best_e};
  }

 private:
  NodePtr encode(const std::vector<std::string>& words, const NodePtr& w,
                 const NodePtr& b) {
    NodePtr e = embedder_->embed(words);
    std::vector<NodePtr> hs = lstm_run(split_rows(e), enc_);
    return add_rows(matmul(stack_rows(hs), w), b);
  }

  QAConfig cfg_;
  Rng rng_;
  ParamStore store_;
  NodePtr emb_;
  std::unique_ptr<AuxEmbedder> embedder_;
  LSTMParams enc_;
  NodePtr proj_c_w_, proj_c_b_, proj_q_w_, proj_q_b_;
  BiLSTMParams fuse_;
  NodePtr u2_w_, u2_b_, start_w_, start_b_, end_w_, end_b_;
};

namespace detail {

inline std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline std::vector<std::string> csv_split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace detail

// A_C as CSV: context tokens label the rows, question tokens the columns.
// Values are printed with 17 significant digits so a re-parse is bit-exact.
inline void export_attention_csv(const std::string& path, const Tensor& attention,
                                 const std::vector<std::string>& context,
                                 const std::vector<std::string>& question) {
  if (attention.rows() != static_cast<int>(context.size()) ||
      attention.cols() != static_cast<int>(question.size()))
    throw ContractError("export_attention_csv: label counts do not match " +
                        shape_str(attention.shape()));
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ParseError("cannot open " + path + " for writing");
  for (const auto& q : question) os << ',' << detail::csv_quote(q);
  os << '\n';
  char buf[40];
  for (int i = 0; i < attention.rows(); ++i) {
    os << detail::csv_quote(context[i]);
    for (int j = 0; j < attention.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", attention.at(i, j));
      os << ',' << buf;
    }
    os << '\n';
  }
  if (!os) throw ParseError("write failed for " + path);
}

inline Tensor import_attention_csv(const std::string& path,
                                   std::vector<std::string>* context = nullptr,
                                   std::vector<std::string>* question = nullptr) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ParseError("cannot open " + path);
  std::string line;
  if (!std::getline(is, line)) throw ParseError(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> header = detail::csv_split(line);
  const int m = static_cast<int>(header.size()) - 1;
  if (m < 1) throw ParseError(path + ":1: no question columns");
  if (question) question->assign(header.begin() + 1, header.end());
  std::vector<double> values;
  std::vector<std::string> ctx;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells = detail::csv_split(line);
    if (static_cast<int>(cells.size()) != m + 1)
      throw ParseError(path + ":" + std::to_string(lineno) + ": expected " +
                       std::to_string(m + 1) + " cells");
    ctx.push_back(cells[0]);
    for (int j = 1; j <= m; ++j) values.push_back(std::stod(cells[j]));
  }
  if (ctx.empty()) throw ParseError(path + ": no data rows");
  if (context) *context = ctx;
  return Tensor({static_cast<int>(ctx.size()), m}, std::move(values));
}

}  // namespace lexfly
