// imagedpo: one binary exposing the whole pipeline. Batch commands only;
// every run writes enough metadata to reproduce its outputs bit-exactly.
//
// Exit codes: 0 success, 1 usage/validation error, 2 verification failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "imagedpo/corrupt.hpp"
#include "imagedpo/datagen.hpp"
#include "imagedpo/diffcore.hpp"
#include "imagedpo/discrete.hpp"
#include "imagedpo/errors.hpp"
#include "imagedpo/evalharness.hpp"
#include "imagedpo/fd_probe.hpp"
#include "imagedpo/objectives.hpp"
#include "imagedpo/policy.hpp"
#include "imagedpo/rng.hpp"
#include "imagedpo/trainer.hpp"
#include "imagedpo/vocab.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace imagedpo;

namespace {

constexpr const char* kVersion = "imagedpo 0.1.0";
constexpr int kExitValidation = 1;
constexpr int kExitVerification = 2;

// ---------------------------------------------------------------------------
// run configuration (JSON file with sections world/corruption/train/eval)
// ---------------------------------------------------------------------------

struct WorldSection {
  std::uint64_t seed = 1;
  int scenes = 100;
  int image_size = 32;
  int expand = 0;
};

struct CorruptionSection {
  std::vector<CorruptionSpec> specs;  // defaults below
};

struct TrainSection {
  std::string objective = "image_dpo";
  double alpha_or_beta = 2.0;
  std::optional<double> learning_rate;  // default depends on the objective
  int epochs = 2;
  int batch_size = 256;
  std::uint64_t seed = 0;
  std::string ratio_form = "log";
};

struct EvalSection {
  std::string setting = "F";
  bool strict = true;
};

struct RunConfig {
  WorldSection world;
  CorruptionSection corruption;
  TrainSection train;
  EvalSection eval;
};

void reject_unknown_keys(const json& j, const std::vector<std::string>& known,
                         const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(known.begin(), known.end(), it.key()) == known.end())
      throw std::invalid_argument("config: unknown key '" + where + it.key() + "'");
}

std::vector<CorruptionSpec> default_corruption_specs() {
  std::vector<CorruptionSpec> specs(3);
  specs[0].kind = CorruptionKind::blur;
  specs[0].kernel_size = 9;
  specs[1].kind = CorruptionKind::pixelate;
  specs[1].block_size = 4;
  specs[2].kind = CorruptionKind::semantic;
  specs[2].fill = SemanticFill::noise;
  return specs;
}

RunConfig parse_run_config(const json& j) {
  RunConfig config;
  config.corruption.specs = default_corruption_specs();
  reject_unknown_keys(j, {"world", "corruption", "train", "eval"}, "");
  if (j.contains("world")) {
    const json& w = j.at("world");
    reject_unknown_keys(w, {"seed", "scenes", "image_size", "expand"}, "world.");
    config.world.seed = w.value("seed", config.world.seed);
    config.world.scenes = w.value("scenes", config.world.scenes);
    config.world.image_size = w.value("image_size", config.world.image_size);
    config.world.expand = w.value("expand", config.world.expand);
  }
  if (j.contains("corruption")) {
    const json& c = j.at("corruption");
    reject_unknown_keys(c, {"specs"}, "corruption.");
    if (c.contains("specs")) {
      config.corruption.specs.clear();
      for (const auto& s : c.at("specs"))
        config.corruption.specs.push_back(corruption_from_json(s));
    }
  }
  if (j.contains("train")) {
    const json& t = j.at("train");
    reject_unknown_keys(t,
                        {"objective", "alpha_or_beta", "learning_rate", "epochs", "batch_size",
                         "seed", "ratio_form"},
                        "train.");
    config.train.objective = t.value("objective", config.train.objective);
    config.train.alpha_or_beta = t.value("alpha_or_beta", config.train.alpha_or_beta);
    if (t.contains("learning_rate"))
      config.train.learning_rate = t.at("learning_rate").get<double>();
    config.train.epochs = t.value("epochs", config.train.epochs);
    config.train.batch_size = t.value("batch_size", config.train.batch_size);
    config.train.seed = t.value("seed", config.train.seed);
    config.train.ratio_form = t.value("ratio_form", config.train.ratio_form);
  }
  if (j.contains("eval")) {
    const json& e = j.at("eval");
    reject_unknown_keys(e, {"setting", "strict"}, "eval.");
    config.eval.setting = e.value("setting", config.eval.setting);
    config.eval.strict = e.value("strict", config.eval.strict);
  }
  return config;
}

RunConfig load_run_config(const std::string& path) {
  if (path.empty()) {
    RunConfig config;
    config.corruption.specs = default_corruption_specs();
    return config;
  }
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open " + path);
  return parse_run_config(json::parse(in));
}

// documented stable defaults: 0.05 for mle, 0.01 for the dpo objectives
double resolve_learning_rate(const TrainSection& section, TrainObjective objective) {
  if (section.learning_rate) return *section.learning_rate;
  return objective == TrainObjective::mle_pretrain ? 0.05 : 0.01;
}

TrainConfig to_train_config(const TrainSection& section, TrainObjective objective) {
  TrainConfig config;
  config.objective = objective;
  config.alpha_or_beta = section.alpha_or_beta;
  config.learning_rate = resolve_learning_rate(section, objective);
  config.epochs = section.epochs;
  config.batch_size = section.batch_size;
  config.seed = section.seed;
  if (section.ratio_form == "log")
    config.ratio_form = RatioForm::log_ratio;
  else if (section.ratio_form == "raw")
    config.ratio_form = RatioForm::raw_ratio;
  else
    throw std::invalid_argument("config: train.ratio_form must be 'log' or 'raw'");
  return config;
}

json run_config_to_json(const RunConfig& config, TrainObjective objective) {
  json specs = json::array();
  for (const auto& s : config.corruption.specs) specs.push_back(corruption_to_json(s));
  return {{"world",
           {{"seed", config.world.seed},
            {"scenes", config.world.scenes},
            {"image_size", config.world.image_size},
            {"expand", config.world.expand}}},
          {"corruption", {{"specs", specs}}},
          {"train",
           {{"objective", config.train.objective},
            {"alpha_or_beta", config.train.alpha_or_beta},
            {"learning_rate", resolve_learning_rate(config.train, objective)},
            {"epochs", config.train.epochs},
            {"batch_size", config.train.batch_size},
            {"seed", config.train.seed},
            {"ratio_form", config.train.ratio_form}}},
          {"eval", {{"setting", config.eval.setting}, {"strict", config.eval.strict}}}};
}

// ---------------------------------------------------------------------------
// run metadata
// ---------------------------------------------------------------------------

std::uint64_t fnv1a_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::uint64_t hash = 1469598103934665603ULL;
  char c;
  while (in.get(c)) {
    hash ^= static_cast<unsigned char>(c);
    hash *= 1099511628211ULL;
  }
  return hash;
}

std::optional<int> threads_env() {
  const char* raw = std::getenv("IMAGEDPO_THREADS");
  if (raw == nullptr) return std::nullopt;
  try {
    const int n = std::stoi(raw);
    if (n < 1) throw std::invalid_argument("non-positive");
    return n;
  } catch (const std::exception&) {
    throw std::invalid_argument("IMAGEDPO_THREADS must be a positive integer");
  }
}

json base_metadata(const std::string& command, int argc, char** argv) {
  json meta;
  meta["version"] = kVersion;
  meta["command"] = command;
  json args = json::array();
  for (int i = 1; i < argc; ++i) args.push_back(argv[i]);
  meta["argv"] = args;
  if (const auto threads = threads_env())
    meta["threads"] = *threads;  // recorded; execution is single-threaded
  return meta;
}

void write_metadata(const json& meta, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write metadata " + path.string());
  out << meta.dump(2) << "\n";
}

std::vector<double> parse_double_list(const std::string& csv, const char* flag) {
  std::vector<double> values;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      values.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw std::invalid_argument(std::string(flag) + ": cannot parse '" + item + "'");
    }
  }
  if (values.empty()) throw std::invalid_argument(std::string(flag) + ": empty list");
  return values;
}

std::vector<CorruptionSpec> load_spec_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("spec: cannot open " + path);
  const json j = json::parse(in);
  std::vector<CorruptionSpec> specs;
  for (const auto& s : j) specs.push_back(corruption_from_json(s));
  if (specs.empty()) throw std::invalid_argument("spec: no corruption specs in " + path);
  return specs;
}

// ---------------------------------------------------------------------------
// subcommands
// ---------------------------------------------------------------------------

int cmd_gen(const std::string& out_dir, std::uint64_t seed, int scenes, int image_size,
            int expand, int argc, char** argv) {
  WorldConfig config;
  config.seed = seed;
  config.n_scenes = scenes;
  config.image_size = image_size;
  config.expand = expand;
  const fs::path out(out_dir);
  fs::create_directories(out);

  const auto triplets = synth_world(config, out);
  write_triplets_jsonl(triplets, out / "triplets.jsonl");
  write_benchmark_jsonl(benchmark_from_triplets(triplets), out / "benchmark.jsonl");

  json meta = base_metadata("gen", argc, argv);
  meta["world"] = {{"seed", seed}, {"scenes", scenes}, {"image_size", image_size},
                   {"expand", expand}};
  meta["outputs"] = {{"triplets", "triplets.jsonl"},
                     {"benchmark", "benchmark.jsonl"},
                     {"triplets_hash", fnv1a_file(out / "triplets.jsonl")}};
  write_metadata(meta, out / "run_meta.json");
  std::cout << "wrote " << triplets.size() << " triplets to " << out_dir << "\n";
  return 0;
}

int cmd_pairs(const std::string& mode, const std::string& in_file, const std::string& spec_file,
              const std::string& out_dir, std::uint64_t seed, const std::string& negative_mode,
              const std::string& ref_path, int limit, int max_records, int argc, char** argv) {
  const fs::path triplets_file(in_file);
  const fs::path dataset_dir = triplets_file.parent_path();
  auto triplets = read_triplets_jsonl(triplets_file);
  if (limit > 0 && static_cast<std::size_t>(limit) < triplets.size()) triplets.resize(limit);
  const fs::path out(out_dir);
  fs::create_directories(out);
  if (!fs::equivalent(out, dataset_dir))
    throw std::invalid_argument(
        "pairs: --out must be the dataset directory holding the triplets (corrupted images are "
        "written next to the originals)");

  std::optional<PolicyParams> ref;
  if (!ref_path.empty()) ref = load_params(ref_path);
  const NegativeMode neg = negative_mode_from_string(negative_mode);

  json meta = base_metadata("pairs", argc, argv);
  meta["seed"] = seed;
  meta["mode"] = mode;
  meta["limit"] = limit;
  meta["max_records"] = max_records;
  meta["inputs"] = {{"triplets", in_file}, {"triplets_hash", fnv1a_file(triplets_file)}};

  std::size_t count = 0;
  if (mode == "image") {
    auto specs = load_spec_file(spec_file);
    auto records = build_image_pairs(triplets, specs, seed, dataset_dir);
    if (max_records > 0 && static_cast<std::size_t>(max_records) < records.size())
      records.resize(max_records);
    write_image_pairs_jsonl(records, out / "pairs_image.jsonl");
    meta["outputs"] = {{"pairs", "pairs_image.jsonl"},
                       {"hash", fnv1a_file(out / "pairs_image.jsonl")}};
    count = records.size();
  } else if (mode == "text") {
    auto records = build_text_pairs(triplets, seed, neg, ref ? &*ref : nullptr, dataset_dir);
    if (max_records > 0 && static_cast<std::size_t>(max_records) < records.size())
      records.resize(max_records);
    write_text_pairs_jsonl(records, out / "pairs_text.jsonl");
    meta["outputs"] = {{"pairs", "pairs_text.jsonl"},
                       {"hash", fnv1a_file(out / "pairs_text.jsonl")}};
    count = records.size();
  } else if (mode == "text-corrupted") {
    auto specs = load_spec_file(spec_file);
    auto records = build_text_pairs_on_corrupted(triplets, specs, seed, neg,
                                                 ref ? &*ref : nullptr, dataset_dir);
    if (max_records > 0 && static_cast<std::size_t>(max_records) < records.size())
      records.resize(max_records);
    write_text_pairs_jsonl(records, out / "pairs_text.jsonl");
    meta["outputs"] = {{"pairs", "pairs_text.jsonl"},
                       {"hash", fnv1a_file(out / "pairs_text.jsonl")}};
    count = records.size();
  } else {
    throw std::invalid_argument("pairs: --mode must be image, text, or text-corrupted");
  }
  write_metadata(meta, out / "pairs_meta.json");
  std::cout << "wrote " << count << " pair records\n";
  return 0;
}

int cmd_corrupt(const std::string& kind_name, double level, const std::string& in_file,
                const std::string& out_file, std::uint64_t seed, const std::string& region_csv,
                const std::string& fill_name, double fill_value, int argc, char** argv) {
  CorruptionSpec spec;
  spec.kind = corruption_kind_from_string(kind_name);
  spec.seed = seed;
  switch (spec.kind) {
    case CorruptionKind::blur:
      spec.kernel_size = static_cast<int>(level);
      if (level != spec.kernel_size)
        throw std::invalid_argument("corrupt: --level must be an integer for blur");
      break;
    case CorruptionKind::pixelate:
      spec.block_size = static_cast<int>(level);
      if (level != spec.block_size)
        throw std::invalid_argument("corrupt: --level must be an integer for pixelate");
      break;
    case CorruptionKind::resize:
      spec.factor = level;
      break;
    case CorruptionKind::semantic: {
      if (region_csv.empty())
        throw std::invalid_argument("corrupt: semantic needs --region x,y,w,h");
      const auto r = parse_double_list(region_csv, "--region");
      if (r.size() != 4) throw std::invalid_argument("corrupt: --region needs 4 values");
      spec.region = Rect{static_cast<int>(r[0]), static_cast<int>(r[1]), static_cast<int>(r[2]),
                         static_cast<int>(r[3])};
      spec.fill = semantic_fill_from_string(fill_name);
      spec.fill_value = fill_value;
      break;
    }
  }

  const ImageGrid img = read_pgm(in_file);
  write_pgm(apply_corruption(img, spec), out_file);

  json meta = base_metadata("corrupt", argc, argv);
  meta["corruption"] = corruption_to_json(spec);
  meta["input_hash"] = fnv1a_file(in_file);
  meta["output_hash"] = fnv1a_file(out_file);
  write_metadata(meta, out_file + ".meta.json");
  return 0;
}

int cmd_pretrain(const std::string& config_file, const std::string& triplets_file,
                 const std::string& out_dir, int argc, char** argv) {
  const RunConfig config = load_run_config(config_file);
  const fs::path triplets_path(triplets_file);
  const auto triplets = read_triplets_jsonl(triplets_path);
  const auto data = load_labeled_batch(triplets, triplets_path.parent_path());

  const TrainConfig tc = to_train_config(config.train, TrainObjective::mle_pretrain);
  const PolicyParams init = init_params(config.train.seed == 0 ? 123 : config.train.seed);
  const auto [params, history] = mle_pretrain(init, data, tc);

  const fs::path out(out_dir);
  fs::create_directories(out);
  save_params(params, out / "params.bin");
  write_history_csv(history, out / "history.csv");

  json summary = history_summary(history);
  summary["objective"] = "mle_pretrain";
  {
    std::ofstream s(out / "summary.json");
    s << summary.dump(2) << "\n";
  }

  json meta = base_metadata("pretrain", argc, argv);
  meta["config"] = run_config_to_json(config, TrainObjective::mle_pretrain);
  meta["inputs"] = {{"triplets", triplets_file}, {"triplets_hash", fnv1a_file(triplets_path)}};
  meta["outputs"] = {{"params", "params.bin"}, {"params_hash", fnv1a_file(out / "params.bin")}};
  write_metadata(meta, out / "run_meta.json");
  std::cout << "pretrained on " << data.size() << " triplets, final accuracy "
            << history.final_clean_accuracy << "\n";
  return 0;
}

int cmd_train(const std::string& objective_name, const std::string& config_file,
              const std::string& pairs_file, const std::string& ref_path,
              const std::string& out_dir, int argc, char** argv) {
  const TrainObjective objective = train_objective_from_string(objective_name);
  if (objective == TrainObjective::mle_pretrain)
    throw std::invalid_argument("train: use the pretrain subcommand for mle_pretrain");

  const RunConfig config = load_run_config(config_file);
  const TrainConfig tc = to_train_config(config.train, objective);
  const PolicyParams ref = load_params(ref_path);
  const PolicyParams theta0 = clone_as_reference(ref);

  const fs::path pairs_path(pairs_file);
  const fs::path dataset_dir = pairs_path.parent_path();

  PolicyParams trained(ref.dims);
  TrainHistory history;
  if (objective == TrainObjective::image_dpo) {
    const auto records = read_image_pairs_jsonl(pairs_path);
    const ImagePrefBatch batch = load_image_batch(records, dataset_dir);
    std::tie(trained, history) = train_dpo(theta0, ref, batch, tc);
  } else {
    const auto records = read_text_pairs_jsonl(pairs_path);
    const TextPrefBatch batch = load_text_batch(records, dataset_dir);
    std::tie(trained, history) = train_dpo(theta0, ref, batch, tc);
  }

  const fs::path out(out_dir);
  fs::create_directories(out);
  save_params(trained, out / "params.bin");
  write_history_csv(history, out / "history.csv");

  json summary = history_summary(history);
  summary["objective"] = objective_name;
  {
    std::ofstream s(out / "summary.json");
    s << summary.dump(2) << "\n";
  }

  json meta = base_metadata("train", argc, argv);
  meta["config"] = run_config_to_json(config, objective);
  meta["inputs"] = {{"pairs", pairs_file},
                    {"pairs_hash", fnv1a_file(pairs_path)},
                    {"ref", ref_path},
                    {"ref_hash", fnv1a_file(ref_path)}};
  meta["outputs"] = {{"params", "params.bin"}, {"params_hash", fnv1a_file(out / "params.bin")}};
  write_metadata(meta, out / "run_meta.json");
  std::cout << "trained " << objective_name << " for " << history.steps.size()
            << " steps, final margin "
            << (history.steps.empty() ? 0.0 : history.steps.back().mean_margin) << "\n";
  return 0;
}

int cmd_eval(const std::string& bench_file, const std::string& preds_file,
             const std::string& params_file, const std::string& setting_name,
             const std::string& lexicon_file, bool nonstrict, bool allow_missing,
             const std::string& out_file, int argc, char** argv) {
  const fs::path bench_path(bench_file);
  const auto records = read_benchmark_jsonl(bench_path);
  const EvalSetting setting = eval_setting_from_string(setting_name);
  SynonymLexicon lexicon;
  if (!lexicon_file.empty()) {
    lexicon = SynonymLexicon::from_json_file(lexicon_file);
    lexicon.validate_symmetric();
  }

  std::map<std::string, std::string> predictions;
  if (!preds_file.empty()) {
    std::ifstream in(preds_file);
    if (!in) throw std::invalid_argument("eval: cannot open " + preds_file);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const json j = json::parse(line);
      predictions[j.at("id").get<std::string>()] = j.at("response").get<std::string>();
    }
    // strict id reconciliation unless --allow-missing
    std::set<std::string> record_ids;
    for (const auto& r : records) record_ids.insert(r.id);
    std::vector<std::string> unknown, missing;
    for (const auto& [id, response] : predictions)
      if (!record_ids.count(id)) unknown.push_back(id);
    for (const auto& id : record_ids)
      if (!predictions.count(id)) missing.push_back(id);
    if (!unknown.empty()) {
      std::string msg = "eval: predictions reference unknown record ids:";
      for (const auto& id : unknown) msg += " " + id;
      throw std::invalid_argument(msg);
    }
    if (!missing.empty() && !allow_missing) {
      std::string msg = "eval: missing predictions for record ids:";
      for (const auto& id : missing) msg += " " + id;
      msg += " (pass --allow-missing to score them as instruction failures)";
      throw std::invalid_argument(msg);
    }
  } else if (!params_file.empty()) {
    const PolicyParams params = load_params(params_file);
    predictions = model_responder(params, records, bench_path.parent_path());
  } else {
    throw std::invalid_argument("eval: need --preds or --params");
  }

  const ScoreReport report = score_benchmark(records, predictions, setting, lexicon, !nonstrict);
  json out = score_report_to_json(report);
  out["run"] = base_metadata("eval", argc, argv);
  out["run"]["bench_hash"] = fnv1a_file(bench_path);

  const std::string text = out.dump(2);
  if (!out_file.empty()) {
    std::ofstream f(out_file);
    f << text << "\n";
  }
  std::cout << text << "\n";
  return 0;
}

int cmd_sweep(const std::string& kind_name, const std::string& levels_csv,
              const std::string& params_file, const std::string& bench_file,
              const std::string& out_dir, const std::string& lexicon_file,
              const std::string& setting_name, int argc, char** argv) {
  const CorruptionKind kind = corruption_kind_from_string(kind_name);
  const auto levels = parse_double_list(levels_csv, "--levels");
  const PolicyParams params = load_params(params_file);
  const fs::path bench_path(bench_file);
  const auto records = read_benchmark_jsonl(bench_path);
  SynonymLexicon lexicon;
  if (!lexicon_file.empty()) lexicon = SynonymLexicon::from_json_file(lexicon_file);
  const EvalSetting setting = eval_setting_from_string(setting_name);

  const SweepResult result =
      severity_sweep(params, records, kind, levels, bench_path.parent_path(), lexicon, setting);

  const fs::path out(out_dir);
  fs::create_directories(out);
  write_sweep_csv(result, out / "sweep.csv");

  json verdict = {{"kind", kind_name},
                  {"monotone_ok", result.monotone_ok},
                  {"inversions", result.inversions},
                  {"max_inversion", result.max_inversion}};
  json rows = json::array();
  for (const auto& row : result.rows)
    rows.push_back({{"level", row.level},
                    {"score", row.report.score},
                    {"prior", row.report.prior},
                    {"instruction_failure_rate", row.report.instruction_failure_rate}});
  verdict["rows"] = rows;
  verdict["run"] = base_metadata("sweep", argc, argv);
  verdict["run"]["params_hash"] = fnv1a_file(params_file);
  verdict["run"]["bench_hash"] = fnv1a_file(bench_path);
  {
    std::ofstream f(out / "sweep.json");
    f << verdict.dump(2) << "\n";
  }
  std::cout << verdict.dump(2) << "\n";
  return 0;
}

int cmd_verify_bound(int instances, const std::string& beta_csv, std::uint64_t seed,
                     int pairs_per_instance, int forced, const std::string& out_file, int argc,
                     char** argv) {
  const auto betas = parse_double_list(beta_csv, "--beta-list");
  Rng rng(seed);

  int violations = 0;
  double min_gap = 1e300, max_gap = -1e300;
  double ratio_min = 1e300, ratio_max = -1e300, ratio_sum = 0.0;
  for (int i = 0; i < instances; ++i) {
    const double beta = betas[static_cast<std::size_t>(i) % betas.size()];
    const DiscreteInstance inst = random_instance(rng, beta);
    const PolicyTable theta = random_policy_table(rng, inst.contexts(), inst.vocab());
    const auto pairs = random_pairs(rng, inst.contexts(), inst.vocab(), pairs_per_instance);
    const BoundReport report = verify_upper_bound(inst, theta, pairs, rng.next_u64());
    if (!report.holds) ++violations;
    const double gap = report.rhs - report.lhs;
    min_gap = std::min(min_gap, gap);
    max_gap = std::max(max_gap, gap);
    ratio_min = std::min(ratio_min, report.grad_ratio);
    ratio_max = std::max(ratio_max, report.grad_ratio);
    ratio_sum += report.grad_ratio;
  }

  int forced_violations = 0;
  double forced_max_abs_gap = 0.0;
  for (int i = 0; i < forced; ++i) {
    const double beta = betas[static_cast<std::size_t>(i) % betas.size()];
    const ForcedEqualityCase fc = forced_equality_case(rng, beta);
    const BoundReport report =
        verify_upper_bound(fc.instance, fc.theta, fc.pairs, rng.next_u64());
    forced_max_abs_gap = std::max(forced_max_abs_gap, std::fabs(report.lhs - report.rhs));
    if (!report.holds || std::fabs(report.lhs - report.rhs) >= 1e-12) ++forced_violations;
  }

  json report = {{"instances", instances},
                 {"violations", violations},
                 {"max_gap", max_gap},
                 {"min_gap", min_gap},
                 {"grad_ratio_stats",
                  {{"min", ratio_min},
                   {"max", ratio_max},
                   {"mean", ratio_sum / std::max(1, instances)}}}};
  if (forced > 0)
    report["forced_equality"] = {{"instances", forced},
                                 {"violations", forced_violations},
                                 {"max_abs_gap", forced_max_abs_gap}};
  report["run"] = base_metadata("verify-bound", argc, argv);
  report["run"]["seed"] = seed;
  report["run"]["beta_list"] = betas;

  const std::string text = report.dump(2);
  if (!out_file.empty()) {
    std::ofstream f(out_file);
    f << text << "\n";
  }
  std::cout << text << "\n";
  return violations == 0 && forced_violations == 0 ? 0 : kExitVerification;
}

int cmd_gradcheck(const std::string& objective_name, int trials, std::uint64_t seed,
                  double tolerance, const std::string& out_file, int argc, char** argv) {
  Rng rng(seed);
  const PolicyDims dims;
  double worst = 0.0;
  int failures = 0;

  auto random_image = [&](Rng& r) {
    ImageGrid img(16, 16);
    for (double& v : img.pixels) v = r.uniform();
    return img;
  };
  auto random_question = [&](Rng& r) {
    TokenSeq q(static_cast<std::size_t>(r.uniform_int(1, 5)));
    for (int& t : q) t = r.uniform_int(0, dims.question_vocab - 1);
    return q;
  };

  // Central differences at eps = 1e-4 against the extended-precision probe,
  // so the check resolves the 1e-4 tolerance instead of its own noise.
  for (int trial = 0; trial < trials; ++trial) {
    const PolicyParams theta = init_params(rng.next_u64(), dims);
    double rel = 0.0;
    if (objective_name == "image_dpo") {
      const PolicyParams ref = init_params(rng.next_u64(), dims);
      ImagePrefBatch batch;
      for (int i = 0; i < 3; ++i) {
        ImagePrefItem item;
        item.q = random_question(rng);
        item.answer = rng.uniform_int(0, dims.answer_vocab - 1);
        item.img_good = random_image(rng);
        item.img_bad = random_image(rng);
        batch.items.push_back(std::move(item));
      }
      const LossReport loss = image_dpo_loss(theta, ref, batch, 2.0, RatioForm::log_ratio, true);
      rel = fdprobe::ld_fd_max_rel_error(
          [&](std::span<const double> flat) {
            return fdprobe::ld_image_dpo_loss(dims, flat, ref, batch, 2.0L);
          },
          theta.flat, loss.grad, 1e-4);
    } else if (objective_name == "text_dpo") {
      const PolicyParams ref = init_params(rng.next_u64(), dims);
      TextPrefBatch batch;
      for (int i = 0; i < 3; ++i) {
        TextPrefItem item;
        item.q = random_question(rng);
        item.img = random_image(rng);
        item.a_good = rng.uniform_int(0, dims.answer_vocab - 1);
        do {
          item.a_bad = rng.uniform_int(0, dims.answer_vocab - 1);
        } while (item.a_bad == item.a_good);
        batch.items.push_back(std::move(item));
      }
      const LossReport loss = text_dpo_loss(theta, ref, batch, 1.0, true);
      rel = fdprobe::ld_fd_max_rel_error(
          [&](std::span<const double> flat) {
            return fdprobe::ld_text_dpo_loss(dims, flat, ref, batch, 1.0L);
          },
          theta.flat, loss.grad, 1e-4);
    } else if (objective_name == "mle") {
      LabeledBatch batch;
      for (int i = 0; i < 3; ++i)
        batch.push_back({random_question(rng), random_image(rng),
                         rng.uniform_int(0, dims.answer_vocab - 1)});
      const LossReport loss = mle_nll_loss(theta, batch, true);
      rel = fdprobe::ld_fd_max_rel_error(
          [&](std::span<const double> flat) {
            return fdprobe::ld_mle_loss(dims, flat, batch);
          },
          theta.flat, loss.grad, 1e-4);
    } else {
      throw std::invalid_argument("gradcheck: --objective must be image_dpo, text_dpo, or mle");
    }
    worst = std::max(worst, rel);
    if (rel >= tolerance) ++failures;
  }

  json report = {{"objective", objective_name},
                 {"trials", trials},
                 {"tolerance", tolerance},
                 {"max_rel_error", worst},
                 {"failures", failures}};
  report["run"] = base_metadata("gradcheck", argc, argv);
  report["run"]["seed"] = seed;
  const std::string text = report.dump(2);
  if (!out_file.empty()) {
    std::ofstream f(out_file);
    f << text << "\n";
  }
  std::cout << text << "\n";
  return failures == 0 ? 0 : kExitVerification;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"imagedpo: preference-optimization laboratory for a toy multimodal policy"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "Generate a synthetic world of QIA triplets");
  std::uint64_t gen_seed = 1;
  int gen_scenes = 100, gen_image_size = 32, gen_expand = 0;
  std::string gen_out;
  gen->add_option("--seed", gen_seed, "World seed")->capture_default_str();
  gen->add_option("--scenes", gen_scenes, "Number of scenes")->capture_default_str();
  gen->add_option("--image-size", gen_image_size, "Canvas size in pixels (square)")
      ->capture_default_str();
  gen->add_option("--expand", gen_expand,
                  "Tool-pipeline expansions per scene (generate/edit/object-swap)")
      ->capture_default_str();
  gen->add_option("--out", gen_out, "Output directory")->required();

  // pairs
  auto* pairs = app.add_subcommand("pairs", "Build chosen/rejected preference pairs");
  std::string pairs_mode = "image", pairs_in, pairs_spec, pairs_out, pairs_neg = "random",
              pairs_ref;
  std::uint64_t pairs_seed = 0;
  int pairs_limit = 0, pairs_max_records = 0;
  pairs->add_option("--mode", pairs_mode, "image | text | text-corrupted")
      ->capture_default_str();
  pairs->add_option("--in", pairs_in, "triplets.jsonl produced by gen")->required();
  pairs->add_option("--spec", pairs_spec, "JSON array of corruption specs (image modes)");
  pairs->add_option("--out", pairs_out, "Output directory (the dataset directory)")->required();
  pairs->add_option("--seed", pairs_seed, "Pair-construction seed")->capture_default_str();
  pairs->add_option("--negative-mode", pairs_neg, "random | hard (text modes)")
      ->capture_default_str();
  pairs->add_option("--ref", pairs_ref, "Reference params.bin (hard negatives)");
  pairs->add_option("--limit", pairs_limit, "Use only the first N triplets (0 = all)")
      ->capture_default_str();
  pairs->add_option("--max-records", pairs_max_records, "Truncate output to M records (0 = all)")
      ->capture_default_str();

  // corrupt
  auto* corrupt = app.add_subcommand("corrupt", "Apply one corruption to one PGM image");
  std::string corrupt_kind, corrupt_in, corrupt_out, corrupt_region, corrupt_fill = "noise";
  double corrupt_level = 1.0, corrupt_value = 0.0;
  std::uint64_t corrupt_seed = 0;
  corrupt->add_option("--kind", corrupt_kind, "blur | pixelate | semantic | resize")->required();
  corrupt->add_option("--level", corrupt_level,
                      "Kernel size (blur), block size (pixelate), factor (resize)")
      ->capture_default_str();
  corrupt->add_option("--in", corrupt_in, "Input PGM")->required();
  corrupt->add_option("--out", corrupt_out, "Output PGM")->required();
  corrupt->add_option("--seed", corrupt_seed, "Seed for semantic fills")->capture_default_str();
  corrupt->add_option("--region", corrupt_region, "x,y,w,h (semantic)");
  corrupt->add_option("--fill", corrupt_fill, "noise | constant | donor-patch (semantic)")
      ->capture_default_str();
  corrupt->add_option("--value", corrupt_value, "Constant fill value (semantic)")
      ->capture_default_str();

  // pretrain
  auto* pretrain = app.add_subcommand("pretrain", "MLE-pretrain the policy on triplets");
  std::string pretrain_config, pretrain_triplets, pretrain_out;
  pretrain->add_option("--config", pretrain_config, "Run-config JSON (train section)");
  pretrain->add_option("--triplets", pretrain_triplets, "triplets.jsonl")->required();
  pretrain->add_option("--out", pretrain_out, "Output directory")->required();

  // train
  auto* train = app.add_subcommand("train", "DPO fine-tuning from a frozen reference");
  std::string train_objective = "image_dpo", train_config, train_pairs, train_ref, train_out;
  train->add_option("--objective", train_objective, "image_dpo | text_dpo | text_dpo_corrupted")
      ->capture_default_str();
  train->add_option("--config", train_config, "Run-config JSON (train section)");
  train->add_option("--pairs", train_pairs, "pairs_image.jsonl or pairs_text.jsonl")->required();
  train->add_option("--ref", train_ref, "Reference params.bin")->required();
  train->add_option("--out", train_out, "Output directory")->required();

  // eval
  auto* eval = app.add_subcommand("eval", "Score predictions or a policy on a benchmark");
  std::string eval_bench, eval_preds, eval_params, eval_setting = "F", eval_lexicon, eval_out;
  bool eval_nonstrict = false, eval_allow_missing = false;
  eval->add_option("--bench", eval_bench, "benchmark.jsonl")->required();
  eval->add_option("--preds", eval_preds, "predictions.jsonl ({id, response} lines)");
  eval->add_option("--params", eval_params, "params.bin (answers via the toy policy)");
  eval->add_option("--setting", eval_setting, "F (facts shown) | P (questions only)")
      ->capture_default_str();
  eval->add_option("--lexicon", eval_lexicon, "Synonym lexicon JSON");
  eval->add_flag("--nonstrict", eval_nonstrict,
                 "Extract the first word of multi-word answers instead of failing them");
  eval->add_flag("--allow-missing", eval_allow_missing,
                 "Score records without predictions as instruction failures");
  eval->add_option("--out", eval_out, "Also write the report JSON here");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Severity sweep of one corruption kind");
  std::string sweep_kind, sweep_levels, sweep_params, sweep_bench, sweep_out, sweep_lexicon,
      sweep_setting = "F";
  sweep->add_option("--kind", sweep_kind, "blur | pixelate | resize")->required();
  sweep->add_option("--levels", sweep_levels, "Comma-separated ascending levels")->required();
  sweep->add_option("--params", sweep_params, "params.bin")->required();
  sweep->add_option("--bench", sweep_bench, "benchmark.jsonl")->required();
  sweep->add_option("--out", sweep_out, "Output directory")->required();
  sweep->add_option("--lexicon", sweep_lexicon, "Synonym lexicon JSON");
  sweep->add_option("--setting", sweep_setting, "F | P")->capture_default_str();

  // verify-bound
  auto* verify = app.add_subcommand(
      "verify-bound", "Check the preference-NLL upper bound on random instances");
  int verify_instances = 1000, verify_pairs = 3, verify_forced = 0;
  std::string verify_betas = "0.1,1,5", verify_out;
  std::uint64_t verify_seed = 0;
  verify->add_option("--instances", verify_instances, "Random instances to test")
      ->capture_default_str();
  verify->add_option("--beta-list", verify_betas, "Comma-separated beta values")
      ->capture_default_str();
  verify->add_option("--seed", verify_seed, "Seed")->capture_default_str();
  verify->add_option("--pairs", verify_pairs, "Preference pairs per instance")
      ->capture_default_str();
  verify->add_option("--forced-equality", verify_forced,
                     "Additional instances engineered for exact bound tightness")
      ->capture_default_str();
  verify->add_option("--out", verify_out, "Also write the report JSON here");

  // gradcheck
  auto* gradcheck_cmd =
      app.add_subcommand("gradcheck", "Finite-difference checks of the objective gradients");
  std::string gc_objective = "image_dpo", gc_out;
  int gc_trials = 20;
  std::uint64_t gc_seed = 0;
  double gc_tolerance = 1e-4;
  gradcheck_cmd->add_option("--objective", gc_objective, "image_dpo | text_dpo | mle")
      ->capture_default_str();
  gradcheck_cmd->add_option("--trials", gc_trials, "Random draws to test")->capture_default_str();
  gradcheck_cmd->add_option("--seed", gc_seed, "Seed")->capture_default_str();
  gradcheck_cmd->add_option("--tolerance", gc_tolerance, "Max relative error allowed")
      ->capture_default_str();
  gradcheck_cmd->add_option("--out", gc_out, "Also write the report JSON here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    threads_env();  // validate early; recorded per subcommand
    if (gen->parsed())
      return cmd_gen(gen_out, gen_seed, gen_scenes, gen_image_size, gen_expand, argc, argv);
    if (pairs->parsed())
      return cmd_pairs(pairs_mode, pairs_in, pairs_spec, pairs_out, pairs_seed, pairs_neg,
                       pairs_ref, pairs_limit, pairs_max_records, argc, argv);
    if (corrupt->parsed())
      return cmd_corrupt(corrupt_kind, corrupt_level, corrupt_in, corrupt_out, corrupt_seed,
                         corrupt_region, corrupt_fill, corrupt_value, argc, argv);
    if (pretrain->parsed())
      return cmd_pretrain(pretrain_config, pretrain_triplets, pretrain_out, argc, argv);
    if (train->parsed())
      return cmd_train(train_objective, train_config, train_pairs, train_ref, train_out, argc,
                       argv);
    if (eval->parsed())
      return cmd_eval(eval_bench, eval_preds, eval_params, eval_setting, eval_lexicon,
                      eval_nonstrict, eval_allow_missing, eval_out, argc, argv);
    if (sweep->parsed())
      return cmd_sweep(sweep_kind, sweep_levels, sweep_params, sweep_bench, sweep_out,
                       sweep_lexicon, sweep_setting, argc, argv);
    if (verify->parsed())
      return cmd_verify_bound(verify_instances, verify_betas, verify_seed, verify_pairs,
                              verify_forced, verify_out, argc, argv);
    if (gradcheck_cmd->parsed())
      return cmd_gradcheck(gc_objective, gc_trials, gc_seed, gc_tolerance, gc_out, argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitValidation;
}
