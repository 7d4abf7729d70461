#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lexfly/datagen.hpp"
#include "lexfly/errors.hpp"

namespace lexfly {

inline std::vector<std::string> load_tokens(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ParseError("cannot open " + path);
  std::vector<std::string> tokens;
  std::string tok;
  while (is >> tok) tokens.push_back(tok);
  return tokens;
}

// ---------------------------------------------------------------- nli jsonl

inline void save_nli_jsonl(const std::string& path,
                           const std::vector<datagen::NLIExample>& examples) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ParseError("cannot open " + path + " for writing");
  for (const auto& ex : examples) {
    nlohmann::json j{{"premise", ex.premise},
                     {"hypothesis", ex.hypothesis},
                     {"label", datagen::nli_label_name(ex.label)},
                     {"has_rare", ex.has_rare}};
    os << j.dump() << '\n';
  }
}

inline std::vector<datagen::NLIExample> load_nli_jsonl(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ParseError("cannot open " + path);
  std::vector<datagen::NLIExample> out;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    datagen::NLIExample ex;
    ex.premise = j.at("premise").get<std::vector<std::string>>();
    ex.hypothesis = j.at("hypothesis").get<std::vector<std::string>>();
    const std::string label = j.at("label").get<std::string>();
    if (label == "entailment") ex.label = 0;
    else if (label == "contradiction") ex.label = 1;
    else if (label == "neutral") ex.label = 2;
    else
      throw ParseError(path + ":" + std::to_string(lineno) +
                       ": unknown label " + label);
    ex.has_rare = j.value("has_rare", false);
    if (ex.premise.empty() || ex.hypothesis.empty())
      throw ParseError(path + ":" + std::to_string(lineno) + ": empty sentence");
    out.push_back(std::move(ex));
  }
  return out;
}

// ----------------------------------------------------------------- qa jsonl

inline void save_qa_jsonl(const std::string& path,
                          const std::vector<datagen::QAExample>& examples) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ParseError("cannot open " + path + " for writing");
  for (const auto& ex : examples) {
    nlohmann::json spans = nlohmann::json::array();
    for (const auto& [s, e] : ex.answers) spans.push_back({s, e});
    nlohmann::json j{{"context", ex.context},
                     {"question", ex.question},
                     {"answers", spans},
                     {"has_rare", ex.has_rare}};
    os << j.dump() << '\n';
  }
}

inline std::vector<datagen::QAExample> load_qa_jsonl(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ParseError("cannot open " + path);
  std::vector<datagen::QAExample> out;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    datagen::QAExample ex;
    ex.context = j.at("context").get<std::vector<std::string>>();
    ex.question = j.at("question").get<std::vector<std::string>>();
    for (const auto& span : j.at("answers")) {
      if (!span.is_array() || span.size() != 2)
        throw ParseError(path + ":" + std::to_string(lineno) + ": bad span");
      ex.answers.emplace_back(span[0].get<int>(), span[1].get<int>());
    }
    ex.has_rare = j.value("has_rare", false);
    if (ex.context.empty() || ex.question.empty() || ex.answers.empty())
      throw ParseError(path + ":" + std::to_string(lineno) +
                       ": missing context/question/answers");
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace lexfly
