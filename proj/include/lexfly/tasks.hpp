#pragma once

#include <algorithm>
#include <cstdlib>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "lexfly/config.hpp"
#include "lexfly/data.hpp"
#include "lexfly/metrics.hpp"
#include "lexfly/models/esim.hpp"
#include "lexfly/models/lm.hpp"
#include "lexfly/models/qa.hpp"
#include "lexfly/trainer.hpp"

namespace lexfly {

struct TaskMetrics {
  std::optional<double> ppl, ppl_after;
  std::optional<double> accuracy, rare_accuracy;
  std::optional<double> em, rare_em;

  nlohmann::json to_json() const {
    nlohmann::json j;
    auto put = [&](const char* key, const std::optional<double>& v) {
      if (v) j[key] = *v;
    };
    put("ppl", ppl);
    put("ppl_after_oov", ppl_after);
    put("accuracy", accuracy);
    put("rare_accuracy", rare_accuracy);
    put("em", em);
    put("rare_em", rare_em);
    return j;
  }
};

inline int lexfly_threads() {
  const char* env = std::getenv("LEXFLY_THREADS");
  if (!env) return 1;
  const int n = std::atoi(env);
  return n < 1 ? 1 : n;
}

// Per-example scores computed on thread-private model instances built from a
// snapshot; the reduction is sequential in example order, so the result does
// not depend on the thread count.
template <typename MakeScorer>
inline std::vector<double> sharded_scores(int count, MakeScorer make_scorer) {
  std::vector<double> scores(count);
  const int threads = std::min(lexfly_threads(), std::max(count, 1));
  if (threads <= 1) {
    auto scorer = make_scorer();
    for (int i = 0; i < count; ++i) scores[i] = scorer(i);
    return scores;
  }
  std::vector<std::thread> pool;
  const int per = (count + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    const int lo = t * per, hi = std::min(count, (t + 1) * per);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &scores, &make_scorer] {
      auto scorer = make_scorer();
      for (int i = lo; i < hi; ++i) scores[i] = scorer(i);
    });
  }
  for (auto& th : pool) th.join();
  return scores;
}

namespace detail {

inline std::unordered_map<std::string, long long> lowercased_counts(
    const std::vector<std::string>& tokens) {
  std::unordered_map<std::string, long long> counts;
  for (const auto& t : tokens) ++counts[ascii_lower(t)];
  return counts;
}

}  // namespace detail

// ------------------------------------------------------------------- lm task

class LMTask {
 public:
  explicit LMTask(const RunConfig& cfg) : cfg_(cfg) {
    train_tokens_ = load_tokens(cfg.train_path);
    dev_tokens_ = load_tokens(cfg.dev_path);
    if (!cfg.test_path.empty()) test_tokens_ = load_tokens(cfg.test_path);
    if (!cfg.dict_path.empty()) {
      dict_ = load_dictionary(cfg.dict_path, cfg.max_def_len);
      has_dict_ = true;
    }
    v_in_ = build_train_vocab(train_tokens_, cfg.vocab_size);
    v_char_ = build_char_vocab(train_tokens_, cfg.char_vocab_size);
    if (!cfg.share_embeddings && has_dict_) {
      const int size = cfg.dict_vocab_size > 0 ? cfg.dict_vocab_size : cfg.vocab_size;
      v_dict_ = build_dict_vocab(dict_, detail::lowercased_counts(train_tokens_), size);
    }
    LMConfig mc;
    mc.d_emb = cfg.d;
    mc.d_hidden = cfg.d_hidden;
    mc.variant = cfg.lm_variant == "dict1" ? LMVariant::Dict1 : LMVariant::Dict2;
    mc.aux = cfg.aux_spec();
    model_ = std::make_unique<LMModel>(mc, v_in_, v_in_,
                                       v_dict_ ? &*v_dict_ : nullptr, &v_char_,
                                       has_dict_ ? &dict_ : nullptr, cfg.seed);
  }

  LMModel& model() { return *model_; }

  TrainResult train(const std::string& state_path = "") {
    // parallel streams, sequential chunks with carried (detached) state
    const int batch = std::max(
        1, std::min(cfg_.batch_size,
                    static_cast<int>(train_tokens_.size()) / (2 * cfg_.bptt)));
    const int row_len = static_cast<int>(train_tokens_.size()) / batch;
    if (row_len < 2) throw ContractError("LMTask: corpus too small");
    const int positions = row_len - 1;
    const int chunks = (positions + cfg_.bptt - 1) / cfg_.bptt;

    TrainOptions opt;
    opt.max_epochs = cfg_.epochs;
    opt.patience = cfg_.patience;
    opt.adam = cfg_.adam;
    opt.seed = cfg_.seed;
    opt.maximize = false;
    opt.shuffle = false;  // chunk order is the stream order
    opt.state_path = state_path;

    LSTMState state;
    auto build_loss = [&](int k) {
      if (k == 0) state = lstm_zero_state(batch, cfg_.d_hidden);
      const int t0 = k * cfg_.bptt;
      const int steps = std::min(cfg_.bptt, positions - t0);
      std::vector<std::string> inputs;
      std::vector<int> targets;
      inputs.reserve(static_cast<std::size_t>(steps) * batch);
      targets.reserve(inputs.capacity());
      for (int t = 0; t < steps; ++t)
        for (int b = 0; b < batch; ++b) {
          const int pos = b * row_len + t0 + t;
          inputs.push_back(train_tokens_[pos]);
          targets.push_back(model_->v_out().id(train_tokens_[pos + 1]));
        }
      return model_->chunk_loss(inputs, targets, batch, steps, &state);
    };
    auto evaluate = [&] {
      auto scores = model_->score_stream(dev_tokens_, cfg_.bptt);
      return perplexity(scores.logprobs);
    };
    return train_loop(model_->params(), opt, chunks, build_loss, evaluate);
  }

  TaskMetrics evaluate(const std::vector<std::string>& tokens) {
    auto scores = model_->score_stream(tokens, cfg_.bptt);
    TaskMetrics m;
    m.ppl = perplexity(scores.logprobs);
    m.ppl_after = ppl_after_oov(scores.logprobs, scores.prev_in_vocab);
    return m;
  }

  const std::vector<std::string>& dev_tokens() const { return dev_tokens_; }
  const std::vector<std::string>& test_tokens() const { return test_tokens_; }

 private:
  RunConfig cfg_;
  std::vector<std::string> train_tokens_, dev_tokens_, test_tokens_;
  Dictionary dict_;
  bool has_dict_ = false;
  Vocabulary v_in_, v_char_;
  std::optional<Vocabulary> v_dict_;
  std::unique_ptr<LMModel> model_;
};

// ------------------------------------------------------------------ nli task

class NLITask {
 public:
  explicit NLITask(const RunConfig& cfg) : cfg_(cfg) {
    train_ = load_nli_jsonl(cfg.train_path);
    dev_ = load_nli_jsonl(cfg.dev_path);
    if (!cfg.test_path.empty()) test_ = load_nli_jsonl(cfg.test_path);
    if (!cfg.dict_path.empty()) {
      dict_ = load_dictionary(cfg.dict_path, cfg.max_def_len);
      has_dict_ = true;
    }
    std::vector<std::string> corpus;
    for (const auto& ex : train_) {
      corpus.insert(corpus.end(), ex.premise.begin(), ex.premise.end());
      corpus.insert(corpus.end(), ex.hypothesis.begin(), ex.hypothesis.end());
    }
    v_train_ = build_train_vocab(corpus, cfg.vocab_size);
    v_char_ = build_char_vocab(corpus, cfg.char_vocab_size);
    if (!cfg.share_embeddings && has_dict_) {
      const int size = cfg.dict_vocab_size > 0 ? cfg.dict_vocab_size : cfg.vocab_size;
      v_dict_ = build_dict_vocab(dict_, detail::lowercased_counts(corpus), size);
    }
    ESIMConfig mc;
    mc.d = cfg.d;
    mc.aux = cfg.aux_spec();
    model_ = std::make_unique<ESIMModel>(mc, v_train_,
                                         v_dict_ ? &*v_dict_ : nullptr,
                                         &v_char_, has_dict_ ? &dict_ : nullptr,
                                         cfg.seed);
  }

  ESIMModel& model() { return *model_; }

  ESIMModel make_model_copy() const {
    ESIMConfig mc;
    mc.d = cfg_.d;
    mc.aux = cfg_.aux_spec();
    ESIMModel copy(mc, v_train_, v_dict_ ? &*v_dict_ : nullptr, &v_char_,
                   has_dict_ ? &dict_ : nullptr, cfg_.seed);
    copy.params().restore(model_->params().snapshot());
    return copy;
  }

  TrainResult train(const std::string& state_path = "") {
    const int batches =
        (static_cast<int>(train_.size()) + cfg_.batch_size - 1) / cfg_.batch_size;
    TrainOptions opt;
    opt.max_epochs = cfg_.epochs;
    opt.patience = cfg_.patience;
    opt.adam = cfg_.adam;
    opt.seed = cfg_.seed;
    opt.maximize = true;
    opt.state_path = state_path;

    auto build_loss = [&](int k) {
      const int lo = k * cfg_.batch_size;
      const int hi = std::min<int>(train_.size(), lo + cfg_.batch_size);
      NodePtr total;
      for (int i = lo; i < hi; ++i) {
        NodePtr l = model_->loss(train_[i].premise, train_[i].hypothesis,
                                 train_[i].label);
        total = total ? add(total, l) : l;
      }
      return hi - lo > 1 ? scale(total, 1.0 / (hi - lo)) : total;
    };
    auto evaluate = [&] { return evaluate_split(dev_).accuracy.value(); };
    return train_loop(model_->params(), opt, batches, build_loss, evaluate);
  }

  TaskMetrics evaluate_split(const std::vector<datagen::NLIExample>& split,
                             const std::string& predictions_path = "") {
    auto scores = sharded_scores(static_cast<int>(split.size()), [&] {
      auto m = std::make_shared<ESIMModel>(make_model_copy());
      return [m, &split](int i) {
        auto res = m->forward(split[i].premise, split[i].hypothesis);
        return ESIMModel::predict(res) == split[i].label ? 1.0 : 0.0;
      };
    });
    TaskMetrics metrics;
    double correct = 0, rare_total = 0, rare_correct = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      correct += scores[i];
      if (split[i].has_rare) {
        rare_total += 1;
        rare_correct += scores[i];
      }
    }
    metrics.accuracy = split.empty() ? 0.0 : correct / split.size();
    if (rare_total > 0) metrics.rare_accuracy = rare_correct / rare_total;
    if (!predictions_path.empty()) write_predictions(predictions_path, split);
    return metrics;
  }

  void write_predictions(const std::string& path,
                         const std::vector<datagen::NLIExample>& split) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ParseError("cannot open " + path + " for writing");
    for (const auto& ex : split) {
      auto res = model_->forward(ex.premise, ex.hypothesis);
      auto logprobs = log_softmax_rows(res.logits);
      nlohmann::json j{
          {"premise", ex.premise},
          {"hypothesis", ex.hypothesis},
          {"pred", datagen::nli_label_name(ESIMModel::predict(res))},
          {"logprobs", logprobs->value.data()}};
      os << j.dump() << '\n';
    }
  }

  const std::vector<datagen::NLIExample>& dev() const { return dev_; }
  const std::vector<datagen::NLIExample>& test() const { return test_; }

 private:
  RunConfig cfg_;
  std::vector<datagen::NLIExample> train_, dev_, test_;
  Dictionary dict_;
  bool has_dict_ = false;
  Vocabulary v_train_, v_char_;
  std::optional<Vocabulary> v_dict_;
  std::unique_ptr<ESIMModel> model_;
};

// ------------------------------------------------------------------- qa task

class QATask {
 public:
  explicit QATask(const RunConfig& cfg) : cfg_(cfg) {
    train_ = load_qa_jsonl(cfg.train_path);
    dev_ = load_qa_jsonl(cfg.dev_path);
    if (!cfg.test_path.empty()) test_ = load_qa_jsonl(cfg.test_path);
    if (!cfg.dict_path.empty()) {
      dict_ = load_dictionary(cfg.dict_path, cfg.max_def_len);
      has_dict_ = true;
    }
    std::vector<std::string> corpus;
    for (const auto& ex : train_) {
      corpus.insert(corpus.end(), ex.context.begin(), ex.context.end());
      corpus.insert(corpus.end(), ex.question.begin(), ex.question.end());
    }
    v_train_ = build_train_vocab(corpus, cfg.vocab_size);
    v_char_ = build_char_vocab(corpus, cfg.char_vocab_size);
    if (!cfg.share_embeddings && has_dict_) {
      const int size = cfg.dict_vocab_size > 0 ? cfg.dict_vocab_size : cfg.vocab_size;
      v_dict_ = build_dict_vocab(dict_, detail::lowercased_counts(corpus), size);
    }
    QAConfig mc;
    mc.d = cfg.d;
    mc.aux = cfg.aux_spec();
    model_ = std::make_unique<QAModel>(mc, v_train_,
                                       v_dict_ ? &*v_dict_ : nullptr, &v_char_,
                                       has_dict_ ? &dict_ : nullptr, cfg.seed);
  }

  QAModel& model() { return *model_; }

  QAModel make_model_copy() const {
    QAConfig mc;
    mc.d = cfg_.d;
    mc.aux = cfg_.aux_spec();
    QAModel copy(mc, v_train_, v_dict_ ? &*v_dict_ : nullptr, &v_char_,
                 has_dict_ ? &dict_ : nullptr, cfg_.seed);
    copy.params().restore(model_->params().snapshot());
    return copy;
  }

  TrainResult train(const std::string& state_path = "") {
    const int batches =
        (static_cast<int>(train_.size()) + cfg_.batch_size - 1) / cfg_.batch_size;
    TrainOptions opt;
    opt.max_epochs = cfg_.epochs;
    opt.patience = cfg_.patience;
    opt.adam = cfg_.adam;
    opt.seed = cfg_.seed;
    opt.maximize = true;
    opt.state_path = state_path;

    auto build_loss = [&](int k) {
      const int lo = k * cfg_.batch_size;
      const int hi = std::min<int>(train_.size(), lo + cfg_.batch_size);
      NodePtr total;
      for (int i = lo; i < hi; ++i) {
        const auto& ex = train_[i];
        NodePtr l = model_->loss(ex.context, ex.question, ex.answers[0].first,
                                 ex.answers[0].second);
        total = total ? add(total, l) : l;
      }
      return hi - lo > 1 ? scale(total, 1.0 / (hi - lo)) : total;
    };
    auto evaluate = [&] { return evaluate_split(dev_).em.value(); };
    return train_loop(model_->params(), opt, batches, build_loss, evaluate);
  }

  TaskMetrics evaluate_split(const std::vector<datagen::QAExample>& split,
                             const std::string& predictions_path = "") {
    auto scores = sharded_scores(static_cast<int>(split.size()), [&] {
      auto m = std::make_shared<QAModel>(make_model_copy());
      return [m, &split](int i) {
        auto res = m->forward(split[i].context, split[i].question);
        return static_cast<double>(
            exact_match(QAModel::predict_span(res), split[i].answers));
      };
    });
    TaskMetrics metrics;
    double correct = 0, rare_total = 0, rare_correct = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      correct += scores[i];
      if (split[i].has_rare) {
        rare_total += 1;
        rare_correct += scores[i];
      }
    }
    metrics.em = split.empty() ? 0.0 : correct / split.size();
    if (rare_total > 0) metrics.rare_em = rare_correct / rare_total;
    if (!predictions_path.empty()) write_predictions(predictions_path, split);
    return metrics;
  }

  void write_predictions(const std::string& path,
                         const std::vector<datagen::QAExample>& split) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ParseError("cannot open " + path + " for writing");
    for (const auto& ex : split) {
      auto res = model_->forward(ex.context, ex.question);
      auto span = QAModel::predict_span(res);
      nlohmann::json j{
          {"context", ex.context},
          {"question", ex.question},
          {"pred_span", {span.first, span.second}},
          {"start_logprobs", log_softmax_rows(res.start_logits)->value.data()},
          {"end_logprobs", log_softmax_rows(res.end_logits)->value.data()}};
      os << j.dump() << '\n';
    }
  }

  const std::vector<datagen::QAExample>& dev() const { return dev_; }
  const std::vector<datagen::QAExample>& test() const { return test_; }

 private:
  RunConfig cfg_;
  std::vector<datagen::QAExample> train_, dev_, test_;
  Dictionary dict_;
  bool has_dict_ = false;
  Vocabulary v_train_, v_char_;
  std::optional<Vocabulary> v_dict_;
  std::unique_ptr<QAModel> model_;
};

}  // namespace lexfly
