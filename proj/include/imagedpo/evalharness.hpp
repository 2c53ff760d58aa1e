#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "imagedpo/corrupt.hpp"
#include "imagedpo/datagen.hpp"
#include "imagedpo/policy.hpp"

namespace imagedpo {

struct NormalizedAnswer {
  std::string canonical;
  int word_count = 0;
};

/// ASCII case-fold; strip surrounding whitespace and punctuation .,!?;:'"()
/// from both ends; drop a single leading article (a/an/the); collapse
/// internal whitespace. Empty input normalizes to "".
NormalizedAnswer normalize_answer(std::string_view raw);

// canonical answer -> acceptable normalized alternatives
class SynonymLexicon {
 public:
  void add(const std::string& canonical, const std::string& synonym);
  bool accepts(const std::string& gold_canonical, const std::string& pred_canonical) const;
  /// Throws if x accepting g does not imply g listed under x.
  void validate_symmetric() const;
  bool empty() const { return map_.empty(); }

  static SynonymLexicon from_json(const nlohmann::json& j);
  static SynonymLexicon from_json_file(const std::filesystem::path& file);

 private:
  std::map<std::string, std::set<std::string>> map_;
};

struct MatchResult {
  bool correct = false;
  bool instruction_failure = false;
};

/// Normalizes both sides. With the strict flag, multi-word predictions are
/// instruction failures (and wrong); otherwise the first word is extracted.
/// Correctness is normalized equality, lexicon acceptance, or one of the
/// plural rules x+"s"=y, x+"es"=y, "ies"<->"y", applied in both directions.
MatchResult match_answer(std::string_view pred, std::string_view gold,
                         const SynonymLexicon& lexicon, bool strict_single_word);

enum class Role { prior, test };

struct BenchmarkRecord {
  std::string id;
  std::string group_id;  // shared by the images of one question
  std::string question;
  std::string fact;  // optional distractor fact
  std::string image;
  std::string answer;
  std::vector<std::string> synonyms;
  Role role = Role::test;
};

void write_benchmark_jsonl(const std::vector<BenchmarkRecord>& records,
                           const std::filesystem::path& file);
std::vector<BenchmarkRecord> read_benchmark_jsonl(const std::filesystem::path& file);

/// Groups triplets sharing a question template into prior + two test records.
/// Leftover triplets that do not fill a group of three are skipped.
std::vector<BenchmarkRecord> benchmark_from_triplets(const std::vector<QIATriplet>& triplets);

// F: distractor fact + question shown; P: question only. Scoring math is
// identical; the report records which prompt variant produced the predictions.
enum class EvalSetting { F, P };

std::string to_string(EvalSetting setting);
EvalSetting eval_setting_from_string(const std::string& s);

struct RecordVerdict {
  std::string id;
  bool correct = false;
  bool instruction_failure = false;
};

struct ScoreReport {
  double score = 0.0;  // % correct over role=test
  double prior = 0.0;  // % correct over role=prior
  double instruction_failure_rate = 0.0;
  int test_correct = 0;
  int test_total = 0;
  int prior_correct = 0;
  int prior_total = 0;
  int failures = 0;
  int records_total = 0;
  EvalSetting setting = EvalSetting::F;
  std::vector<RecordVerdict> verdicts;
};

/// Missing predictions count as instruction failures. Duplicate record ids
/// are a validation error.
ScoreReport score_benchmark(const std::vector<BenchmarkRecord>& records,
                            const std::map<std::string, std::string>& predictions,
                            EvalSetting setting, const SynonymLexicon& lexicon,
                            bool strict_single_word = true);

nlohmann::json score_report_to_json(const ScoreReport& report);

/// Argmax answer decoded to its word; deterministic (ties break to the
/// lowest index). Record images resolve relative to base_dir.
std::map<std::string, std::string> model_responder(const PolicyParams& params,
                                                   const std::vector<BenchmarkRecord>& records,
                                                   const std::filesystem::path& base_dir);

struct SweepRow {
  double level = 0.0;
  ScoreReport report;
};

struct SweepResult {
  CorruptionKind kind = CorruptionKind::blur;
  std::vector<SweepRow> rows;
  bool monotone_ok = false;  // non-increasing Score, <= 1 inversion of <= 1 point
  int inversions = 0;
  double max_inversion = 0.0;
};

/// Scores the model on every record's image corrupted at each level.
/// Levels must be sorted ascending; level <= 1 means identity.
SweepResult severity_sweep(const PolicyParams& params,
                           const std::vector<BenchmarkRecord>& records, CorruptionKind kind,
                           const std::vector<double>& levels,
                           const std::filesystem::path& base_dir, const SynonymLexicon& lexicon,
                           EvalSetting setting = EvalSetting::F);

void write_sweep_csv(const SweepResult& result, const std::filesystem::path& file);

}  // namespace imagedpo
