#pragma once

#include <fstream>
#include <set>
#include <string>

#include <json.hpp>

#include "lexfly/adam.hpp"
#include "lexfly/datagen.hpp"
#include "lexfly/embedder.hpp"
#include "lexfly/errors.hpp"
#include "lexfly/models/lm.hpp"

namespace lexfly {

enum class Task { LM, NLI, QA };

inline const char* task_name(Task t) {
  switch (t) {
    case Task::LM: return "lm";
    case Task::NLI: return "nli";
    case Task::QA: return "qa";
  }
  return "?";
}

// One experiment row: task, auxiliary sources, reader/combiner wiring, dims,
// vocab sizes, optimization knobs and data paths. The config file is the
// single source of truth; unknown keys are rejected.
struct RunConfig {
  Task task = Task::LM;
  AuxSource aux = AuxSource::None;
  ReaderKind reader = ReaderKind::MP;
  std::string combiner;  // empty -> per-task default
  bool no_backprop = false;
  bool restricted = false;
  bool share_embeddings = true;
  std::string lm_variant = "dict2";

  int d = 32;
  int d_hidden = 64;
  int vocab_size = 200;
  int dict_vocab_size = 0;  // 0 -> share V_train (when share_embeddings)
  int char_vocab_size = 64;
  int max_def_len = 32;

  std::uint64_t seed = 1;
  int epochs = 8;
  int patience = 3;
  int batch_size = 16;
  int bptt = 32;
  AdamConfig adam;

  std::string train_path, dev_path, test_path, dict_path;
  datagen::SyntheticSpec gen;

  CombineMode combiner_mode() const {
    if (!combiner.empty()) return parse_combiner(combiner);
    // defaults: LM replaces OOV inputs, QA transforms and sums, NLI sums
    switch (task) {
      case Task::LM: return CombineMode::ReplaceOov;
      case Task::QA: return CombineMode::TransformSum;
      case Task::NLI: return CombineMode::Sum;
    }
    return CombineMode::Baseline;
  }

  AuxSpec aux_spec() const {
    AuxSpec s;
    s.source = aux;
    s.dict_reader = reader;
    s.combiner = aux == AuxSource::None
                     ? CombineMode::Baseline
                     : (aux == AuxSource::FixedRandom ? CombineMode::FixedRandomOov
                                                      : combiner_mode());
    s.share_embeddings = share_embeddings;
    s.no_backprop = no_backprop;
    s.restricted = restricted;
    s.fixed_seed = seed;
    return s;
  }

  static CombineMode parse_combiner(const std::string& name) {
    if (name == "transform_sum") return CombineMode::TransformSum;
    if (name == "sum") return CombineMode::Sum;
    if (name == "replace_oov") return CombineMode::ReplaceOov;
    if (name == "baseline") return CombineMode::Baseline;
    if (name == "fixed_random_oov") return CombineMode::FixedRandomOov;
    throw ParseError("unknown combiner: " + name);
  }

  static Task parse_task(const std::string& name) {
    if (name == "lm") return Task::LM;
    if (name == "nli") return Task::NLI;
    if (name == "qa") return Task::QA;
    throw ParseError("unknown task: " + name);
  }

  static AuxSource parse_aux(const std::string& name) {
    if (name == "none") return AuxSource::None;
    if (name == "dict") return AuxSource::Dict;
    if (name == "spelling") return AuxSource::Spelling;
    if (name == "dict+spelling") return AuxSource::DictSpelling;
    if (name == "lemma+lowercase") return AuxSource::LemmaLowercase;
    if (name == "fixed-random") return AuxSource::FixedRandom;
    throw ParseError("unknown aux source: " + name);
  }

  static ReaderKind parse_reader(const std::string& name) {
    if (name == "mp") return ReaderKind::MP;
    if (name == "mpl") return ReaderKind::MPL;
    if (name == "lstm") return ReaderKind::LSTM;
    throw ParseError("unknown reader: " + name);
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["task"] = task_name(task);
    j["aux"] = aux_source_name(aux);
    j["reader"] = reader_kind_name(reader);
    j["combiner"] = combiner;
    j["no_backprop"] = no_backprop;
    j["restricted"] = restricted;
    j["share_embeddings"] = share_embeddings;
    j["lm_variant"] = lm_variant;
    j["d"] = d;
    j["d_hidden"] = d_hidden;
    j["vocab_size"] = vocab_size;
    j["dict_vocab_size"] = dict_vocab_size;
    j["char_vocab_size"] = char_vocab_size;
    j["max_def_len"] = max_def_len;
    j["seed"] = seed;
    j["epochs"] = epochs;
    j["patience"] = patience;
    j["batch_size"] = batch_size;
    j["bptt"] = bptt;
    j["lr"] = adam.lr;
    j["beta1"] = adam.beta1;
    j["beta2"] = adam.beta2;
    j["eps"] = adam.eps;
    j["clip_norm"] = adam.clip_norm;
    j["train_path"] = train_path;
    j["dev_path"] = dev_path;
    j["test_path"] = test_path;
    j["dict_path"] = dict_path;
    j["gen"] = {{"seed", gen.seed},
                {"n_frequent", gen.n_frequent},
                {"n_rare", gen.n_rare},
                {"lm_train_tokens", gen.lm_train_tokens},
                {"lm_dev_tokens", gen.lm_dev_tokens},
                {"lm_test_tokens", gen.lm_test_tokens},
                {"rare_rate", gen.rare_rate},
                {"chain_rate", gen.chain_rate},
                {"n_train", gen.n_train},
                {"n_dev", gen.n_dev},
                {"n_test", gen.n_test},
                {"rare_example_rate", gen.rare_example_rate},
                {"def_style", gen.def_style}};
    return j;
  }

  static RunConfig from_json(const nlohmann::json& j) {
    static const std::set<std::string> known{
        "task", "aux", "reader", "combiner", "no_backprop", "restricted",
        "share_embeddings", "lm_variant", "d", "d_hidden", "vocab_size",
        "dict_vocab_size", "char_vocab_size", "max_def_len", "seed", "epochs",
        "patience", "batch_size", "bptt", "lr", "beta1", "beta2", "eps",
        "clip_norm", "train_path", "dev_path", "test_path", "dict_path", "gen"};
    static const std::set<std::string> known_gen{
        "seed", "n_frequent", "n_rare", "lm_train_tokens", "lm_dev_tokens",
        "lm_test_tokens", "rare_rate", "chain_rate", "n_train", "n_dev",
        "n_test", "rare_example_rate", "def_style"};
    for (const auto& [key, value] : j.items())
      if (!known.count(key)) throw ParseError("unknown config key: " + key);
    if (j.contains("gen"))
      for (const auto& [key, value] : j.at("gen").items())
        if (!known_gen.count(key))
          throw ParseError("unknown config key: gen." + key);

    RunConfig c;
    if (j.contains("task")) c.task = parse_task(j.at("task").get<std::string>());
    if (j.contains("aux")) c.aux = parse_aux(j.at("aux").get<std::string>());
    if (j.contains("reader"))
      c.reader = parse_reader(j.at("reader").get<std::string>());
    if (j.contains("combiner")) {
      c.combiner = j.at("combiner").get<std::string>();
      if (!c.combiner.empty()) parse_combiner(c.combiner);  // validate now
    }
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("no_backprop", c.no_backprop);
    get("restricted", c.restricted);
    get("share_embeddings", c.share_embeddings);
    get("lm_variant", c.lm_variant);
    if (c.lm_variant != "dict1" && c.lm_variant != "dict2")
      throw ParseError("lm_variant must be dict1 or dict2");
    get("d", c.d);
    get("d_hidden", c.d_hidden);
    get("vocab_size", c.vocab_size);
    get("dict_vocab_size", c.dict_vocab_size);
    get("char_vocab_size", c.char_vocab_size);
    get("max_def_len", c.max_def_len);
    get("seed", c.seed);
    get("epochs", c.epochs);
    get("patience", c.patience);
    get("batch_size", c.batch_size);
    get("bptt", c.bptt);
    get("lr", c.adam.lr);
    get("beta1", c.adam.beta1);
    get("beta2", c.adam.beta2);
    get("eps", c.adam.eps);
    get("clip_norm", c.adam.clip_norm);
    get("train_path", c.train_path);
    get("dev_path", c.dev_path);
    get("test_path", c.test_path);
    get("dict_path", c.dict_path);
    if (j.contains("gen")) {
      const auto& g = j.at("gen");
      auto gget = [&](const char* key, auto& field) {
        if (g.contains(key)) field = g.at(key).get<std::decay_t<decltype(field)>>();
      };
      gget("seed", c.gen.seed);
      gget("n_frequent", c.gen.n_frequent);
      gget("n_rare", c.gen.n_rare);
      gget("lm_train_tokens", c.gen.lm_train_tokens);
      gget("lm_dev_tokens", c.gen.lm_dev_tokens);
      gget("lm_test_tokens", c.gen.lm_test_tokens);
      gget("rare_rate", c.gen.rare_rate);
      gget("chain_rate", c.gen.chain_rate);
      gget("n_train", c.gen.n_train);
      gget("n_dev", c.gen.n_dev);
      gget("n_test", c.gen.n_test);
      gget("rare_example_rate", c.gen.rare_example_rate);
      gget("def_style", c.gen.def_style);
      c.gen.validate();
    }
    return c;
  }

  static RunConfig load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ParseError("cannot open config " + path);
    nlohmann::json j;
    try {
      is >> j;
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path + ": " + e.what());
    }
    return from_json(j);
  }

  void save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ParseError("cannot open " + path + " for writing");
    os << to_json().dump(2) << '\n';
  }
};

}  // namespace lexfly
