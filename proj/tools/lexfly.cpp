// lexfly - on-the-fly word embeddings from dictionary definitions and
// spelling, trained end-to-end in small task models. Subcommands cover the
// whole experiment cycle: gen -> train -> eval, plus gradient checks,
// definition-embedding export and attention dumps.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lexfly/gradcheck_suite.hpp"
#include "lexfly/tasks.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace lexfly;

namespace {

std::vector<std::uint64_t> parse_seeds(const std::string& csv) {
  std::vector<std::uint64_t> seeds;
  std::string cur;
  for (char c : csv + ",") {
    if (c == ',') {
      if (!cur.empty()) seeds.push_back(std::stoull(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  return seeds;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct SingleRun {
  double dev_metric = 0.0;
  TaskMetrics dev_full;
};

SingleRun run_one(RunConfig cfg, const fs::path& out, bool resume) {
  fs::create_directories(out);
  const std::string state_path = resume ? (out / "state.bin").string() : "";
  TrainResult result;
  TaskMetrics dev_full;
  if (cfg.task == Task::LM) {
    LMTask task(cfg);
    result = task.train(state_path);
    task.model().params().restore(result.best_params);
    dev_full = task.evaluate(task.dev_tokens());
    save_params(task.model().params(), (out / "checkpoint.bin").string());
  } else if (cfg.task == Task::NLI) {
    NLITask task(cfg);
    result = task.train(state_path);
    task.model().params().restore(result.best_params);
    dev_full = task.evaluate_split(task.dev());
    save_params(task.model().params(), (out / "checkpoint.bin").string());
  } else {
    QATask task(cfg);
    result = task.train(state_path);
    task.model().params().restore(result.best_params);
    dev_full = task.evaluate_split(task.dev());
    save_params(task.model().params(), (out / "checkpoint.bin").string());
  }
  write_history_csv((out / "metrics.csv").string(), result.history);
  {
    std::ofstream os(out / "dev_metrics.json", std::ios::binary);
    os << dev_full.to_json().dump(2) << '\n';
  }
  cfg.save((out / "config.json").string());
  SingleRun run;
  run.dev_metric = result.best_metric;
  run.dev_full = dev_full;
  return run;
}

int cmd_train(const std::string& config_path, const std::string& out_dir,
              std::uint64_t seed, bool seed_given, const std::string& seeds_csv,
              bool resume) {
  RunConfig cfg = RunConfig::load(config_path);
  if (seed_given) cfg.seed = seed;
  const fs::path out(out_dir);
  if (seeds_csv.empty()) {
    SingleRun run = run_one(cfg, out, resume);
    std::cout << "dev_metric " << run.dev_metric << "\n";
    return 0;
  }
  // multi-seed harness: one independent run per seed plus a summary
  const auto seeds = parse_seeds(seeds_csv);
  json per_seed = json::object();
  std::vector<double> metrics;
  for (std::uint64_t s : seeds) {
    RunConfig c = cfg;
    c.seed = s;
    SingleRun run = run_one(c, out / ("seed" + std::to_string(s)), resume);
    per_seed[std::to_string(s)] = run.dev_metric;
    metrics.push_back(run.dev_metric);
    std::cout << "seed " << s << " dev_metric " << run.dev_metric << "\n";
  }
  double mean = 0.0;
  for (double m : metrics) mean += m;
  mean /= metrics.empty() ? 1 : metrics.size();
  json summary{{"per_seed", per_seed},
               {"mean", mean},
               {"median", median(metrics)}};
  fs::create_directories(out);
  std::ofstream os(out / "summary.json", std::ios::binary);
  os << summary.dump(2) << '\n';
  std::cout << "mean " << mean << " median " << median(metrics) << "\n";
  return 0;
}

int cmd_eval(const std::string& config_path, const std::string& checkpoint,
             const std::string& data_path, const std::string& predictions) {
  RunConfig cfg = RunConfig::load(config_path);
  json out;
  if (cfg.task == Task::LM) {
    LMTask task(cfg);
    load_params(task.model().params(), checkpoint);
    out = task.evaluate(load_tokens(data_path)).to_json();
  } else if (cfg.task == Task::NLI) {
    NLITask task(cfg);
    load_params(task.model().params(), checkpoint);
    out = task.evaluate_split(load_nli_jsonl(data_path), predictions).to_json();
  } else {
    QATask task(cfg);
    load_params(task.model().params(), checkpoint);
    out = task.evaluate_split(load_qa_jsonl(data_path), predictions).to_json();
  }
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_gen(const std::string& config_path, const std::string& out_dir) {
  RunConfig cfg = RunConfig::load(config_path);
  const fs::path out(out_dir);
  fs::create_directories(out);
  datagen::write_dictionary_tsv((out / "dict.tsv").string(), cfg.gen);
  if (cfg.task == Task::LM) {
    auto corpus = datagen::gen_lm_corpus(cfg.gen);
    datagen::write_tokens((out / "train.txt").string(), corpus.train);
    datagen::write_tokens((out / "dev.txt").string(), corpus.dev);
    datagen::write_tokens((out / "test.txt").string(), corpus.test);
    std::cout << "lm corpus: " << corpus.train.size() << " train tokens\n";
  } else if (cfg.task == Task::NLI) {
    auto corpus = datagen::gen_nli_corpus(cfg.gen);
    save_nli_jsonl((out / "train.jsonl").string(), corpus.train);
    save_nli_jsonl((out / "dev.jsonl").string(), corpus.dev);
    save_nli_jsonl((out / "test.jsonl").string(), corpus.test);
    std::cout << "nli corpus: " << corpus.train.size() << " train examples\n";
  } else {
    auto corpus = datagen::gen_qa_corpus(cfg.gen);
    save_qa_jsonl((out / "train.jsonl").string(), corpus.train);
    save_qa_jsonl((out / "dev.jsonl").string(), corpus.dev);
    save_qa_jsonl((out / "test.jsonl").string(), corpus.test);
    std::cout << "qa corpus: " << corpus.train.size() << " train examples\n";
  }
  return 0;
}

int cmd_gradcheck(const std::string& scope, std::uint64_t seed) {
  SuiteOutcome total;
  auto merge = [&total](const SuiteOutcome& part) {
    total.checked += part.checked;
    total.failed += part.failed;
    total.worst = std::max(total.worst, part.worst);
    total.failures.insert(total.failures.end(), part.failures.begin(),
                          part.failures.end());
  };
  if (scope == "ops" || scope == "all") merge(gradcheck_ops(seed));
  if (scope == "models" || scope == "all") merge(gradcheck_models(seed));
  const int pct =
      total.checked == 0
          ? 0
          : static_cast<int>(100.0 * (total.checked - total.failed) / total.checked);
  std::cout << (total.failed == 0 ? "PASS " : "FAIL ") << pct
            << "%/tolerance 1e-4 (" << total.checked - total.failed << "/"
            << total.checked << " checks, worst rel err " << total.worst
            << ")\n";
  for (const auto& f : total.failures) std::cerr << "  failed: " << f << "\n";
  return total.failed == 0 ? 0 : 1;
}

int cmd_export(const std::string& config_path, const std::string& checkpoint,
               const std::string& words_csv, const std::string& out_path) {
  RunConfig cfg = RunConfig::load(config_path);
  std::vector<std::string> words;
  {
    std::string cur;
    for (char c : words_csv + ",") {
      if (c == ',') {
        if (!cur.empty()) words.push_back(cur);
        cur.clear();
      } else {
        cur += c;
      }
    }
  }
  if (words.empty()) throw ContractError("export: no words given");

  auto write_rows = [&](AuxEmbedder& embedder) {
    NodePtr rows = embedder.aux_rows(words);
    if (!rows) throw ContractError("export: config has no auxiliary source");
    std::ofstream os(out_path, std::ios::binary);
    if (!os) throw ParseError("cannot open " + out_path + " for writing");
    char buf[40];
    for (std::size_t i = 0; i < words.size(); ++i) {
      os << words[i];
      for (int j = 0; j < rows->value.cols(); ++j) {
        std::snprintf(buf, sizeof buf, "%.17g",
                      rows->value.at(static_cast<int>(i), j));
        os << ',' << buf;
      }
      os << '\n';
    }
  };
  if (cfg.task == Task::LM) {
    LMTask task(cfg);
    load_params(task.model().params(), checkpoint);
    write_rows(task.model().embedder());
  } else if (cfg.task == Task::NLI) {
    NLITask task(cfg);
    load_params(task.model().params(), checkpoint);
    write_rows(task.model().embedder());
  } else {
    QATask task(cfg);
    load_params(task.model().params(), checkpoint);
    write_rows(task.model().embedder());
  }
  std::cout << "wrote " << words.size() << " rows to " << out_path << "\n";
  return 0;
}

int cmd_dump_attention(const std::string& config_path,
                       const std::string& checkpoint,
                       const std::string& data_path, int index,
                       const std::string& out_path) {
  RunConfig cfg = RunConfig::load(config_path);
  if (cfg.task != Task::QA)
    throw ContractError("dump-attention: config task must be qa");
  QATask task(cfg);
  load_params(task.model().params(), checkpoint);
  auto examples = load_qa_jsonl(data_path);
  if (index < 0 || index >= static_cast<int>(examples.size()))
    throw IndexError("dump-attention: example index " + std::to_string(index) +
                     " outside [0, " + std::to_string(examples.size()) + ")");
  const auto& ex = examples[index];
  QAResult res = task.model().forward(ex.context, ex.question);
  export_attention_csv(out_path, res.attention, ex.context, ex.question);
  std::cout << "wrote " << res.attention.rows() << "x" << res.attention.cols()
            << " attention map to " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"on-the-fly word embeddings from definitions and spelling"};
  app.require_subcommand(1);

  std::string config_path, out_dir = ".", checkpoint, data_path, predictions;
  std::string seeds_csv, scope = "all", words_csv, attention_out;
  std::uint64_t seed = 0;
  bool resume = false;
  int index = 0;

  auto* train = app.add_subcommand("train", "train a model from a config");
  train->add_option("--config", config_path)->required();
  auto* train_seed = train->add_option("--seed", seed, "override config seed");
  train->add_option("--seeds", seeds_csv, "comma-separated multi-seed harness");
  train->add_option("--out", out_dir);
  train->add_flag("--resume", resume, "resume from <out>/state.bin");

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a data file");
  eval->add_option("--config", config_path)->required();
  eval->add_option("--checkpoint", checkpoint)->required();
  eval->add_option("--data", data_path)->required();
  eval->add_option("--predictions", predictions,
                   "write per-example predictions (jsonl)");

  auto* gen = app.add_subcommand("gen", "generate a synthetic dataset");
  gen->add_option("--config", config_path)->required();
  gen->add_option("--out", out_dir);

  auto* gc = app.add_subcommand("gradcheck", "finite-difference suite");
  gc->add_option("--scope", scope)->check(CLI::IsMember({"ops", "models", "all"}));
  gc->add_option("--seed", seed);

  auto* exp = app.add_subcommand("export", "definition-embedding rows as CSV");
  exp->add_option("--config", config_path)->required();
  exp->add_option("--checkpoint", checkpoint)->required();
  exp->add_option("--words", words_csv, "comma-separated words")->required();
  exp->add_option("--out", out_dir)->required();

  auto* dump = app.add_subcommand("dump-attention", "write one A_C map as CSV");
  dump->add_option("--config", config_path)->required();
  dump->add_option("--checkpoint", checkpoint)->required();
  dump->add_option("--data", data_path)->required();
  dump->add_option("--index", index);
  dump->add_option("--out", attention_out)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed())
      return cmd_train(config_path, out_dir, seed, train_seed->count() > 0,
                       seeds_csv, resume);
    if (eval->parsed()) return cmd_eval(config_path, checkpoint, data_path, predictions);
    if (gen->parsed()) return cmd_gen(config_path, out_dir);
    if (gc->parsed()) return cmd_gradcheck(scope, seed == 0 ? 7 : seed);
    if (exp->parsed()) return cmd_export(config_path, checkpoint, words_csv, out_dir);
    if (dump->parsed())
      return cmd_dump_attention(config_path, checkpoint, data_path, index,
                                attention_out);
  } catch (const std::exception& e) {
    json err{{"error", {{"type", typeid(e).name()}, {"message", e.what()}}}};
    std::cerr << err.dump() << "\n";
    return 1;
  }
  return 2;
}
