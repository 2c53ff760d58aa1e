#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "imagedpo/objectives.hpp"
#include "imagedpo/policy.hpp"

namespace imagedpo {

enum class TrainObjective { image_dpo, text_dpo, text_dpo_corrupted, mle_pretrain };

std::string to_string(TrainObjective objective);
TrainObjective train_objective_from_string(const std::string& s);

struct TrainConfig {
  TrainObjective objective = TrainObjective::image_dpo;
  double alpha_or_beta = 2.0;
  double learning_rate = 0.01;  // documented stable defaults: 0.05 mle, 0.01 dpo
  int epochs = 2;               // 0 means no updates
  int batch_size = 32;
  std::uint64_t seed = 0;
  RatioForm ratio_form = RatioForm::log_ratio;
};

struct TrainStep {
  int step = 0;
  double loss = 0.0;
  double mean_margin = 0.0;
  double grad_norm = 0.0;
};

struct TrainHistory {
  std::vector<TrainStep> steps;
  std::vector<double> epoch_losses;  // full-set loss after each epoch
  double initial_clean_accuracy = -1.0;
  double final_clean_accuracy = -1.0;
  double final_corrupted_accuracy = -1.0;  // -1 when not applicable
};

/// Fraction of items whose argmax answer equals the label.
double answer_accuracy(const PolicyParams& params, const LabeledBatch& data);

/// Minimizes -mean log pi(answer|q,img) with seeded mini-batch GD.
std::pair<PolicyParams, TrainHistory> mle_pretrain(const PolicyParams& init,
                                                   const LabeledBatch& data,
                                                   const TrainConfig& config);

/// DPO fine-tuning from a frozen reference. theta0 is typically a clone of
/// ref; the reference is never modified.
std::pair<PolicyParams, TrainHistory> train_dpo(const PolicyParams& theta0,
                                                const PolicyParams& ref,
                                                const ImagePrefBatch& pairs,
                                                const TrainConfig& config);
std::pair<PolicyParams, TrainHistory> train_dpo(const PolicyParams& theta0,
                                                const PolicyParams& ref,
                                                const TextPrefBatch& pairs,
                                                const TrainConfig& config);

void write_history_csv(const TrainHistory& history, const std::filesystem::path& file);
nlohmann::json history_summary(const TrainHistory& history);

}  // namespace imagedpo
