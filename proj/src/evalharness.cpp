#include "imagedpo/evalharness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "imagedpo/errors.hpp"
#include "imagedpo/vocab.hpp"

namespace imagedpo {

namespace {

bool is_strip_char(char c) {
  if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') return true;
  static const std::string punct = ".,!?;:'\"()";
  return punct.find(c) != std::string::npos;
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

NormalizedAnswer normalize_answer(std::string_view raw) {
  std::string s;
  s.reserve(raw.size());
  for (char c : raw) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    s.push_back(c);
  }

  std::size_t b = 0, e = s.size();
  while (b < e && is_strip_char(s[b])) ++b;
  while (e > b && is_strip_char(s[e - 1])) --e;
  s = s.substr(b, e - b);

  std::vector<std::string> words;
  std::istringstream iss(s);
  std::string w;
  while (iss >> w) words.push_back(w);

  if (!words.empty() && (words[0] == "a" || words[0] == "an" || words[0] == "the"))
    words.erase(words.begin());

  NormalizedAnswer out;
  out.word_count = static_cast<int>(words.size());
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out.canonical.push_back(' ');
    out.canonical += words[i];
  }
  return out;
}

void SynonymLexicon::add(const std::string& canonical, const std::string& synonym) {
  map_[normalize_answer(canonical).canonical].insert(normalize_answer(synonym).canonical);
}

bool SynonymLexicon::accepts(const std::string& gold_canonical,
                             const std::string& pred_canonical) const {
  auto it = map_.find(gold_canonical);
  if (it != map_.end() && it->second.count(pred_canonical)) return true;
  auto jt = map_.find(pred_canonical);
  return jt != map_.end() && jt->second.count(gold_canonical);
}

void SynonymLexicon::validate_symmetric() const {
  for (const auto& [canonical, synonyms] : map_)
    for (const std::string& syn : synonyms) {
      auto it = map_.find(syn);
      if (it == map_.end() || !it->second.count(canonical))
        throw std::invalid_argument("SynonymLexicon: asymmetric entry '" + canonical + "' -> '" +
                                    syn + "'");
    }
}

SynonymLexicon SynonymLexicon::from_json(const nlohmann::json& j) {
  SynonymLexicon lex;
  for (auto it = j.begin(); it != j.end(); ++it)
    for (const auto& syn : it.value()) lex.add(it.key(), syn.get<std::string>());
  return lex;
}

SynonymLexicon SynonymLexicon::from_json_file(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open lexicon " + file.string());
  return from_json(nlohmann::json::parse(in));
}

namespace {

bool plural_rule(const std::string& base, const std::string& plural) {
  if (plural == base + "s") return true;
  if (plural == base + "es") return true;
  if (!base.empty() && ends_with(base, "y") && ends_with(plural, "ies") &&
      plural.substr(0, plural.size() - 3) == base.substr(0, base.size() - 1))
    return true;
  return false;
}

bool plural_equivalent(const std::string& x, const std::string& y) {
  return plural_rule(x, y) || plural_rule(y, x);
}

}  // namespace

MatchResult match_answer(std::string_view pred, std::string_view gold,
                         const SynonymLexicon& lexicon, bool strict_single_word) {
  const NormalizedAnswer ng = normalize_answer(gold);
  if (ng.canonical.empty())
    throw std::invalid_argument("match_answer: gold answer empty after normalization");
  const NormalizedAnswer np = normalize_answer(pred);

  MatchResult result;
  std::string p = np.canonical;
  if (np.word_count > 1) {
    if (strict_single_word) {
      result.instruction_failure = true;
      return result;
    }
    p = p.substr(0, p.find(' '));
  }
  result.correct =
      (p == ng.canonical) || lexicon.accepts(ng.canonical, p) || plural_equivalent(p, ng.canonical);
  return result;
}

std::string to_string(EvalSetting setting) { return setting == EvalSetting::F ? "F" : "P"; }

EvalSetting eval_setting_from_string(const std::string& s) {
  if (s == "F") return EvalSetting::F;
  if (s == "P") return EvalSetting::P;
  throw std::invalid_argument("unknown eval setting '" + s + "' (expected F or P)");
}

namespace {

Role role_from_string(const std::string& s) {
  if (s == "prior") return Role::prior;
  if (s == "test") return Role::test;
  throw std::invalid_argument("unknown record role '" + s + "'");
}

}  // namespace

void write_benchmark_jsonl(const std::vector<BenchmarkRecord>& records,
                           const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot open for writing " + file.string());
  for (const BenchmarkRecord& r : records) {
    nlohmann::json j = {{"id", r.id},           {"group_id", r.group_id},
                        {"question", r.question}, {"image", r.image},
                        {"answer", r.answer},   {"synonyms", r.synonyms},
                        {"role", r.role == Role::prior ? "prior" : "test"}};
    if (!r.fact.empty()) j["fact"] = r.fact;
    out << j.dump() << "\n";
  }
}

std::vector<BenchmarkRecord> read_benchmark_jsonl(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open " + file.string());
  std::vector<BenchmarkRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line);
    BenchmarkRecord r;
    r.id = j.at("id").get<std::string>();
    r.group_id = j.at("group_id").get<std::string>();
    r.question = j.at("question").get<std::string>();
    r.fact = j.value("fact", std::string{});
    r.image = j.at("image").get<std::string>();
    r.answer = j.at("answer").get<std::string>();
    r.synonyms = j.value("synonyms", std::vector<std::string>{});
    r.role = role_from_string(j.at("role").get<std::string>());
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<BenchmarkRecord> benchmark_from_triplets(const std::vector<QIATriplet>& triplets) {
  std::map<int, std::vector<const QIATriplet*>> by_template;
  for (const QIATriplet& t : triplets) by_template[t.scene.template_id].push_back(&t);

  std::vector<BenchmarkRecord> records;
  int group = 0;
  for (const auto& [template_id, group_triplets] : by_template) {
    for (std::size_t start = 0; start + 3 <= group_triplets.size(); start += 3) {
      const std::string group_id = "g" + std::to_string(group++);
      for (std::size_t k = 0; k < 3; ++k) {
        const QIATriplet& t = *group_triplets[start + k];
        BenchmarkRecord r;
        r.id = t.id;
        r.group_id = group_id;
        r.question = question_text(template_id);
        r.image = t.image_ref;
        r.answer = answer_names()[static_cast<std::size_t>(t.answer)];
        r.role = k == 0 ? Role::prior : Role::test;
        records.push_back(std::move(r));
      }
    }
  }
  return records;
}

ScoreReport score_benchmark(const std::vector<BenchmarkRecord>& records,
                            const std::map<std::string, std::string>& predictions,
                            EvalSetting setting, const SynonymLexicon& lexicon,
                            bool strict_single_word) {
  {
    std::set<std::string> seen;
    for (const BenchmarkRecord& r : records)
      if (!seen.insert(r.id).second)
        throw std::invalid_argument("score_benchmark: duplicate record id '" + r.id + "'");
  }

  ScoreReport report;
  report.setting = setting;
  report.records_total = static_cast<int>(records.size());

  for (const BenchmarkRecord& r : records) {
    RecordVerdict verdict;
    verdict.id = r.id;

    auto it = predictions.find(r.id);
    if (it == predictions.end()) {
      verdict.instruction_failure = true;  // no answer given
    } else {
      MatchResult m = match_answer(it->second, r.answer, lexicon, strict_single_word);
      if (!m.correct) {
        // the record's own synonym list also counts as acceptance
        for (const std::string& syn : r.synonyms) {
          if (normalize_answer(syn).canonical.empty()) continue;
          MatchResult ms = match_answer(it->second, syn, lexicon, strict_single_word);
          if (ms.correct) {
            m.correct = true;
            break;
          }
        }
      }
      verdict.correct = m.correct;
      verdict.instruction_failure = m.instruction_failure;
    }

    if (verdict.instruction_failure) ++report.failures;
    if (r.role == Role::test) {
      ++report.test_total;
      if (verdict.correct) ++report.test_correct;
    } else {
      ++report.prior_total;
      if (verdict.correct) ++report.prior_correct;
    }
    report.verdicts.push_back(std::move(verdict));
  }

  report.score = report.test_total ? 100.0 * report.test_correct / report.test_total : 0.0;
  report.prior = report.prior_total ? 100.0 * report.prior_correct / report.prior_total : 0.0;
  report.instruction_failure_rate =
      report.records_total ? 100.0 * report.failures / report.records_total : 0.0;
  return report;
}

nlohmann::json score_report_to_json(const ScoreReport& report) {
  nlohmann::json verdicts = nlohmann::json::array();
  for (const RecordVerdict& v : report.verdicts)
    verdicts.push_back(
        {{"id", v.id}, {"correct", v.correct}, {"instruction_failure", v.instruction_failure}});
  return {{"setting", to_string(report.setting)},
          {"score", report.score},
          {"prior", report.prior},
          {"instruction_failure_rate", report.instruction_failure_rate},
          {"test_correct", report.test_correct},
          {"test_total", report.test_total},
          {"prior_correct", report.prior_correct},
          {"prior_total", report.prior_total},
          {"failures", report.failures},
          {"records_total", report.records_total},
          {"verdicts", verdicts}};
}

namespace {

std::map<std::string, std::string> respond(const PolicyParams& params,
                                           const std::vector<BenchmarkRecord>& records,
                                           const std::filesystem::path& base_dir,
                                           const CorruptionSpec* corruption) {
  std::map<std::string, std::string> predictions;
  for (const BenchmarkRecord& r : records) {
    TokenSeq q;
    try {
      q = tokenize_question(r.question);
    } catch (const std::exception& e) {
      throw EvalError("model_responder: record " + r.id + ": " + e.what());
    }
    ImageGrid img = read_pgm(base_dir / r.image);
    if (corruption != nullptr) img = apply_corruption(img, *corruption);
    const std::vector<double> lp = forward(params, q, img);
    int best = 0;
    for (int a = 1; a < static_cast<int>(lp.size()); ++a)
      if (lp[a] > lp[best]) best = a;
    predictions[r.id] = answer_names()[static_cast<std::size_t>(best)];
  }
  return predictions;
}

}  // namespace

std::map<std::string, std::string> model_responder(const PolicyParams& params,
                                                   const std::vector<BenchmarkRecord>& records,
                                                   const std::filesystem::path& base_dir) {
  return respond(params, records, base_dir, nullptr);
}

SweepResult severity_sweep(const PolicyParams& params,
                           const std::vector<BenchmarkRecord>& records, CorruptionKind kind,
                           const std::vector<double>& levels,
                           const std::filesystem::path& base_dir, const SynonymLexicon& lexicon,
                           EvalSetting setting) {
  if (levels.empty()) throw std::invalid_argument("severity_sweep: no levels");
  if (!std::is_sorted(levels.begin(), levels.end()))
    throw std::invalid_argument("severity_sweep: levels must be sorted ascending");
  if (kind == CorruptionKind::semantic)
    throw std::invalid_argument("severity_sweep: semantic edits have no severity scale");

  SweepResult result;
  result.kind = kind;
  for (double level : levels) {
    CorruptionSpec spec;
    spec.kind = kind;
    bool identity = level <= 1.0;
    switch (kind) {
      case CorruptionKind::blur: {
        const int k = static_cast<int>(level);
        if (level != k || k < 0) throw std::invalid_argument("severity_sweep: blur level must be a non-negative integer");
        if (!identity && k % 2 == 0)
          throw std::invalid_argument("severity_sweep: blur level must be odd");
        spec.kernel_size = std::max(1, k);
        break;
      }
      case CorruptionKind::pixelate: {
        const int b = static_cast<int>(level);
        if (level != b || b < 0)
          throw std::invalid_argument("severity_sweep: pixelate level must be a non-negative integer");
        spec.block_size = std::max(1, b);
        break;
      }
      case CorruptionKind::resize:
        spec.factor = std::max(1.0, level);
        break;
      case CorruptionKind::semantic:
        break;  // rejected above
    }

    const auto predictions = respond(params, records, base_dir, identity ? nullptr : &spec);
    SweepRow row;
    row.level = level;
    row.report = score_benchmark(records, predictions, setting, lexicon);
    result.rows.push_back(std::move(row));
  }

  result.inversions = 0;
  result.max_inversion = 0.0;
  for (std::size_t i = 0; i + 1 < result.rows.size(); ++i) {
    const double rise = result.rows[i + 1].report.score - result.rows[i].report.score;
    if (rise > 1e-12) {
      ++result.inversions;
      result.max_inversion = std::max(result.max_inversion, rise);
    }
  }
  result.monotone_ok = result.inversions <= 1 && result.max_inversion <= 1.0;
  return result;
}

void write_sweep_csv(const SweepResult& result, const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot open for writing " + file.string());
  out << "level,score,prior,instruction_failure_rate,test_correct,test_total\n";
  out.precision(17);
  for (const SweepRow& row : result.rows)
    out << row.level << "," << row.report.score << "," << row.report.prior << ","
        << row.report.instruction_failure_rate << "," << row.report.test_correct << ","
        << row.report.test_total << "\n";
}

}  // namespace imagedpo
