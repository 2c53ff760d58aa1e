#pragma once

#include <string>
#include <vector>

namespace imagedpo {

// Shared word lists for the synthetic world. Question token ids index
// question_words(); answer ids index answer_names().

inline constexpr int kQuestionVocab = 32;
inline constexpr int kAnswerVocab = 16;
inline constexpr int kNumTemplates = 8;

const std::vector<std::string>& question_words();
const std::vector<std::string>& answer_names();

/// -1 if the word is not an answer name.
int answer_id(const std::string& name);

std::string question_text(int template_id);

/// Lowercases, splits on whitespace, strips trailing '?', maps each word to
/// its token id. Throws std::invalid_argument on words outside the vocabulary.
std::vector<int> tokenize_question(const std::string& text);

}  // namespace imagedpo
