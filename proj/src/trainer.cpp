#include "imagedpo/trainer.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "imagedpo/diffcore.hpp"
#include "imagedpo/errors.hpp"
#include "imagedpo/rng.hpp"

namespace imagedpo {

std::string to_string(TrainObjective objective) {
  switch (objective) {
    case TrainObjective::image_dpo: return "image_dpo";
    case TrainObjective::text_dpo: return "text_dpo";
    case TrainObjective::text_dpo_corrupted: return "text_dpo_corrupted";
    case TrainObjective::mle_pretrain: return "mle_pretrain";
  }
  throw std::invalid_argument("unknown train objective");
}

TrainObjective train_objective_from_string(const std::string& s) {
  if (s == "image_dpo") return TrainObjective::image_dpo;
  if (s == "text_dpo") return TrainObjective::text_dpo;
  if (s == "text_dpo_corrupted") return TrainObjective::text_dpo_corrupted;
  if (s == "mle_pretrain") return TrainObjective::mle_pretrain;
  throw std::invalid_argument("unknown train objective '" + s + "'");
}

namespace {

void validate_config(const TrainConfig& config) {
  if (config.epochs < 0) throw std::invalid_argument("train: epochs must be >= 0");
  if (config.batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
  if (!(config.learning_rate >= 0.0))
    throw std::invalid_argument("train: learning_rate must be >= 0");
  if (!(config.alpha_or_beta > 0.0))
    throw std::invalid_argument("train: alpha_or_beta must be > 0");
}

double l2_norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

int argmax_answer(const PolicyParams& params, const TokenSeq& q, const ImageGrid& img) {
  const std::vector<double> lp = forward(params, q, img);
  int best = 0;
  for (int a = 1; a < static_cast<int>(lp.size()); ++a)
    if (lp[a] > lp[best]) best = a;
  return best;
}

// Runs the shared epoch/minibatch loop. `eval_loss` computes the full-set
// loss (no grad); `batch_loss` computes loss+grad on an index subset.
template <typename BatchLossFn, typename EvalLossFn>
std::pair<PolicyParams, TrainHistory> gd_loop(const PolicyParams& theta0, std::size_t n_items,
                                              const TrainConfig& config,
                                              const BatchLossFn& batch_loss,
                                              const EvalLossFn& eval_loss) {
  PolicyParams theta = theta0;
  TrainHistory history;
  Rng rng(config.seed);

  std::vector<std::size_t> order(n_items);
  for (std::size_t i = 0; i < n_items; ++i) order[i] = i;

  int step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    Rng epoch_rng = rng.fork(static_cast<std::uint64_t>(epoch));
    deterministic_shuffle(order, epoch_rng);
    for (std::size_t start = 0; start < n_items; start += config.batch_size) {
      const std::size_t stop = std::min(n_items, start + config.batch_size);
      const std::vector<std::size_t> batch(order.begin() + start, order.begin() + stop);
      ++step;
      LossReport report;
      try {
        report = batch_loss(theta, batch);
      } catch (const std::domain_error& e) {
        throw TrainingError(std::string("train: loss evaluation diverged: ") + e.what(), step);
      }
      if (!std::isfinite(report.loss))
        throw TrainingError("train: non-finite loss", step);
      history.steps.push_back({step, report.loss, pairwise_mean(report.per_example_margin),
                               l2_norm(report.grad)});
      for (std::size_t i = 0; i < theta.flat.size(); ++i) {
        theta.flat[i] -= config.learning_rate * report.grad[i];
        if (!std::isfinite(theta.flat[i]))
          throw TrainingError("train: parameters became non-finite", step);
      }
    }
    try {
      history.epoch_losses.push_back(eval_loss(theta));
    } catch (const std::domain_error& e) {
      throw TrainingError(std::string("train: loss evaluation diverged: ") + e.what(), step);
    }
    if (!std::isfinite(history.epoch_losses.back()))
      throw TrainingError("train: non-finite epoch loss", step);
  }
  return {std::move(theta), std::move(history)};
}

}  // namespace

double answer_accuracy(const PolicyParams& params, const LabeledBatch& data) {
  if (data.empty()) throw std::invalid_argument("answer_accuracy: empty data");
  std::size_t correct = 0;
  for (const LabeledItem& item : data)
    if (argmax_answer(params, item.q, item.img) == item.answer) ++correct;
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

std::pair<PolicyParams, TrainHistory> mle_pretrain(const PolicyParams& init,
                                                   const LabeledBatch& data,
                                                   const TrainConfig& config) {
  validate_config(config);
  if (config.objective != TrainObjective::mle_pretrain)
    throw std::invalid_argument("mle_pretrain: config objective mismatch");
  if (data.empty()) throw std::invalid_argument("mle_pretrain: empty data");

  auto batch_loss = [&](const PolicyParams& theta, const std::vector<std::size_t>& idx) {
    LabeledBatch sub;
    sub.reserve(idx.size());
    for (std::size_t i : idx) sub.push_back(data[i]);
    return mle_nll_loss(theta, sub, true);
  };
  auto eval_loss = [&](const PolicyParams& theta) { return mle_nll_loss(theta, data).loss; };

  auto [theta, history] = gd_loop(init, data.size(), config, batch_loss, eval_loss);
  history.initial_clean_accuracy = answer_accuracy(init, data);
  history.final_clean_accuracy = answer_accuracy(theta, data);
  return {std::move(theta), std::move(history)};
}

std::pair<PolicyParams, TrainHistory> train_dpo(const PolicyParams& theta0,
                                                const PolicyParams& ref,
                                                const ImagePrefBatch& pairs,
                                                const TrainConfig& config) {
  validate_config(config);
  if (config.objective != TrainObjective::image_dpo)
    throw std::invalid_argument("train_dpo: image batch requires the image_dpo objective");
  if (pairs.items.empty()) throw std::invalid_argument("train_dpo: empty pairs");

  auto batch_loss = [&](const PolicyParams& theta, const std::vector<std::size_t>& idx) {
    ImagePrefBatch sub;
    sub.items.reserve(idx.size());
    for (std::size_t i : idx) sub.items.push_back(pairs.items[i]);
    return image_dpo_loss(theta, ref, sub, config.alpha_or_beta, config.ratio_form, true);
  };
  auto eval_loss = [&](const PolicyParams& theta) {
    return image_dpo_loss(theta, ref, pairs, config.alpha_or_beta, config.ratio_form).loss;
  };

  auto [theta, history] = gd_loop(theta0, pairs.items.size(), config, batch_loss, eval_loss);

  LabeledBatch clean, corrupted;
  for (const ImagePrefItem& item : pairs.items) {
    clean.push_back({item.q, item.img_good, item.answer});
    corrupted.push_back({item.q, item.img_bad, item.answer});
  }
  history.initial_clean_accuracy = answer_accuracy(theta0, clean);
  history.final_clean_accuracy = answer_accuracy(theta, clean);
  history.final_corrupted_accuracy = answer_accuracy(theta, corrupted);
  return {std::move(theta), std::move(history)};
}

std::pair<PolicyParams, TrainHistory> train_dpo(const PolicyParams& theta0,
                                                const PolicyParams& ref,
                                                const TextPrefBatch& pairs,
                                                const TrainConfig& config) {
  validate_config(config);
  if (config.objective != TrainObjective::text_dpo &&
      config.objective != TrainObjective::text_dpo_corrupted)
    throw std::invalid_argument("train_dpo: text batch requires a text_dpo objective");
  if (pairs.items.empty()) throw std::invalid_argument("train_dpo: empty pairs");

  auto batch_loss = [&](const PolicyParams& theta, const std::vector<std::size_t>& idx) {
    TextPrefBatch sub;
    sub.items.reserve(idx.size());
    for (std::size_t i : idx) sub.items.push_back(pairs.items[i]);
    return text_dpo_loss(theta, ref, sub, config.alpha_or_beta, true);
  };
  auto eval_loss = [&](const PolicyParams& theta) {
    return text_dpo_loss(theta, ref, pairs, config.alpha_or_beta).loss;
  };

  auto [theta, history] = gd_loop(theta0, pairs.items.size(), config, batch_loss, eval_loss);

  LabeledBatch clean;
  for (const TextPrefItem& item : pairs.items) clean.push_back({item.q, item.img, item.a_good});
  history.initial_clean_accuracy = answer_accuracy(theta0, clean);
  history.final_clean_accuracy = answer_accuracy(theta, clean);
  return {std::move(theta), std::move(history)};
}

void write_history_csv(const TrainHistory& history, const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot open for writing " + file.string());
  out << "step,loss,mean_margin,grad_norm\n";
  out.precision(17);
  for (const TrainStep& s : history.steps)
    out << s.step << "," << s.loss << "," << s.mean_margin << "," << s.grad_norm << "\n";
}

nlohmann::json history_summary(const TrainHistory& history) {
  nlohmann::json j;
  j["steps"] = history.steps.size();
  if (!history.steps.empty()) {
    j["first_loss"] = history.steps.front().loss;
    j["final_loss"] = history.steps.back().loss;
    j["first_mean_margin"] = history.steps.front().mean_margin;
    j["final_mean_margin"] = history.steps.back().mean_margin;
  }
  j["epoch_losses"] = history.epoch_losses;
  if (history.initial_clean_accuracy >= 0.0)
    j["initial_clean_accuracy"] = history.initial_clean_accuracy;
  if (history.final_clean_accuracy >= 0.0)
    j["final_clean_accuracy"] = history.final_clean_accuracy;
  if (history.final_corrupted_accuracy >= 0.0)
    j["final_corrupted_accuracy"] = history.final_corrupted_accuracy;
  return j;
}

}  // namespace imagedpo
