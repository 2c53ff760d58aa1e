#include "imagedpo/vocab.hpp"

#include <cctype>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace imagedpo {

const std::vector<std::string>& question_words() {
  static const std::vector<std::string> words = {
      "which", "shape", "is",   "largest", "brightest", "darkest", "how",   "many",
      "shapes", "are",  "there", "side",   "the",       "on",      "near",  "top",
      "or",     "bottom", "background", "bright", "dark", "small", "large", "what",
      "where",  "does", "color", "object", "count",     "image",   "show",  "contain"};
  return words;
}

const std::vector<std::string>& answer_names() {
  static const std::vector<std::string> names = {
      "disc", "square", "triangle", "ring", "one",  "two",   "three", "left",
      "right", "top",   "bottom",   "bright", "dark", "small", "large", "nothing"};
  return names;
}

int answer_id(const std::string& name) {
  const auto& names = answer_names();
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return static_cast<int>(i);
  return -1;
}

std::string question_text(int template_id) {
  switch (template_id) {
    case 0: return "which shape is largest";
    case 1: return "which shape is brightest";
    case 2: return "which shape is darkest";
    case 3: return "how many shapes are there";
    case 4: return "which side is the largest shape on";
    case 5: return "is the largest shape near the top or bottom";
    case 6: return "is the background bright or dark";
    case 7: return "is the largest shape small or large";
    default: throw std::invalid_argument("question_text: unknown template");
  }
}

std::vector<int> tokenize_question(const std::string& text) {
  static const std::unordered_map<std::string, int> index = [] {
    std::unordered_map<std::string, int> m;
    const auto& words = question_words();
    for (std::size_t i = 0; i < words.size(); ++i) m[words[i]] = static_cast<int>(i);
    return m;
  }();

  std::vector<int> tokens;
  std::istringstream iss(text);
  std::string word;
  while (iss >> word) {
    std::string w;
    for (char ch : word) {
      if (ch >= 'A' && ch <= 'Z') ch = static_cast<char>(ch - 'A' + 'a');
      w.push_back(ch);
    }
    while (!w.empty() && w.back() == '?') w.pop_back();
    if (w.empty()) continue;
    auto it = index.find(w);
    if (it == index.end())
      throw std::invalid_argument("tokenize_question: unknown word '" + w + "'");
    tokens.push_back(it->second);
  }
  if (tokens.empty()) throw std::invalid_argument("tokenize_question: empty question");
  return tokens;
}

}  // namespace imagedpo
