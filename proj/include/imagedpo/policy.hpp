#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "imagedpo/image.hpp"

namespace imagedpo {

using TokenSeq = std::vector<int>;

struct PolicyDims {
  int embed_dim = 16;      // question embedding width
  int hidden = 32;
  int n_patches = 16;      // must be a perfect square
  int question_vocab = 32;
  int answer_vocab = 16;

  int patch_grid() const;
  std::size_t flat_size() const;
  bool operator==(const PolicyDims&) const = default;
};

// Segment offsets into the flat parameter vector.
struct ParamLayout {
  std::size_t question_embed = 0;  // [question_vocab x embed_dim]
  std::size_t w_img = 0;           // [hidden x n_patches]
  std::size_t w_q = 0;             // [hidden x embed_dim]
  std::size_t b = 0;               // [hidden]
  std::size_t u = 0;               // [answer_vocab x hidden]
  std::size_t c = 0;               // [answer_vocab]
  std::size_t total = 0;
};

ParamLayout layout(const PolicyDims& dims);

// Flat parameter vector plus shape metadata. Value semantics; a copy is a
// deep, independently owned clone.
struct PolicyParams {
  PolicyDims dims;
  std::uint64_t seed = 0;
  std::vector<double> flat;

  PolicyParams() : PolicyParams(PolicyDims{}) {}
  explicit PolicyParams(const PolicyDims& d) : dims(d), flat(layout(d).total, 0.0) {}
};

void validate_params(const PolicyParams& params);

/// Seeded uniform init in [-0.1, 0.1]; same seed gives bit-identical params.
PolicyParams init_params(std::uint64_t seed, const PolicyDims& dims = {});

/// Deep copy intended to be frozen as the reference policy.
PolicyParams clone_as_reference(const PolicyParams& params);

/// Per-tile means over a patch_grid x patch_grid partition, row-major.
std::vector<double> image_features(const ImageGrid& img, int patch_grid);

/// log pi(. | q, img): mean-pooled token embeddings and patch features feed
/// one tanh layer; returns log-softmax over the answer vocabulary.
std::vector<double> forward(const PolicyParams& params, std::span<const int> q,
                            const ImageGrid& img);

double log_prob(const PolicyParams& params, std::span<const int> q, const ImageGrid& img,
                int answer);

/// Reverse-mode gradient of log_prob with respect to the flat parameters.
std::vector<double> grad_log_prob(const PolicyParams& params, std::span<const int> q,
                                  const ImageGrid& img, int answer);

/// Raw little-endian float64 array at `bin_path`, JSON sidecar
/// (`bin_path`.json) with dims and seed.
void save_params(const PolicyParams& params, const std::filesystem::path& bin_path);
PolicyParams load_params(const std::filesystem::path& bin_path);

}  // namespace imagedpo
