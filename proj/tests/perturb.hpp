#pragma once

// Mechanical perturbations of known-good model answers. Each generated case
// keeps the exact labels it was built from, so recovery is checkable.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"

namespace perturb {

struct Case {
  std::string text;
  std::uint8_t mask = 0;     // expected labels, bit i = oracle::names()[i]
  std::optional<int> score;  // severity_score written into the answer
};

inline std::string upper(std::string s) {
  for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

inline std::string title_case_words(const std::string& name, char sep) {
  std::string out;
  bool start = true;
  for (char c : name) {
    if (c == '_') {
      out.push_back(sep);
      start = true;
    } else {
      out.push_back(start ? static_cast<char>(std::toupper(static_cast<unsigned char>(c))) : c);
      start = false;
    }
  }
  return out;
}

inline Case make_case(std::mt19937_64& rng, bool with_score) {
  std::uniform_int_distribution<int> byte(0, 255);
  std::uniform_int_distribution<int> pick(0, 5);
  std::bernoulli_distribution coin(0.5);

  Case c;
  c.mask = static_cast<std::uint8_t>(byte(rng));

  std::vector<std::string> fields;
  for (std::size_t i = 0; i < 8; ++i) {
    std::string key = oracle::names()[i];
    if (key == "cognitive_dysfunction" && coin(rng)) key = "cog_dysfunction";
    switch (pick(rng)) {
      case 0: key = upper(key); break;
      case 1: key = title_case_words(key, ' '); break;
      case 2: key = title_case_words(key, '-'); break;
      default: break;
    }
    const bool v = ((c.mask >> i) & 1) != 0;
    std::string value;
    switch (pick(rng)) {
      case 0: value = v ? "\"True\"" : "\"False\""; break;
      case 1: value = v ? "\"true\"" : "\"false\""; break;
      case 2: value = v ? "True" : "False"; break;  // Python literal
      case 3: value = v ? "\"TRUE\"" : "\" false \""; break;
      default: value = v ? "true" : "false"; break;
    }
    fields.push_back("\"" + key + "\": " + value);
  }
  std::shuffle(fields.begin(), fields.end(), rng);
  if (with_score) {
    c.score = oracle::weight_sum(c.mask);
    fields.push_back("\"severity_score\": " + std::to_string(*c.score));
  }
  if (coin(rng)) fields.push_back("\"explanation\": \"The author {mentions} feeling \\\"stuck\\\".\"");

  std::string obj = "{";
  for (std::size_t i = 0; i < fields.size(); ++i) {
    obj += (i == 0 ? "\n  " : ",\n  ") + fields[i];
  }
  obj += "\n}";

  switch (pick(rng)) {
    case 0: c.text = "```json\n" + obj + "\n```"; break;
    case 1: c.text = "Here is the analysis:\n\n```json\n" + obj + "\n```\nLet me know if you need more."; break;
    case 2: c.text = "Sure! " + obj + " Hope this helps."; break;
    case 3: c.text = "```\n" + obj + "\n```"; break;
    default: c.text = obj; break;
  }
  return c;
}

inline std::vector<Case> corpus(std::size_t n, std::uint64_t seed, bool with_score) {
  std::mt19937_64 rng(seed);
  std::vector<Case> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(make_case(rng, with_score));
  return out;
}

}  // namespace perturb
