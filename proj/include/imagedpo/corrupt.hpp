#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "imagedpo/image.hpp"

namespace imagedpo {

struct Rect {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;
};

enum class CorruptionKind { blur, pixelate, semantic, resize };
enum class SemanticFill { noise, constant, donor_patch };

std::string to_string(CorruptionKind kind);
CorruptionKind corruption_kind_from_string(const std::string& s);
std::string to_string(SemanticFill fill);
SemanticFill semantic_fill_from_string(const std::string& s);

// Everything needed to replay one corruption bit-exactly.
struct CorruptionSpec {
  CorruptionKind kind = CorruptionKind::blur;
  int kernel_size = 1;                      // blur; odd
  int block_size = 1;                       // pixelate
  Rect region;                              // semantic
  SemanticFill fill = SemanticFill::noise;  // semantic
  double fill_value = 0.0;                  // semantic, constant fill
  double factor = 1.0;                      // resize, >= 1
  std::uint64_t seed = 0;                   // semantic noise / donor placement
  double area_fraction = -1.0;              // recorded for semantic records
};

nlohmann::json corruption_to_json(const CorruptionSpec& spec);
CorruptionSpec corruption_from_json(const nlohmann::json& j);

/// Separable convolution with a 1-D Gaussian of sigma = kernel_size/6,
/// kernel renormalized to sum 1, reflective padding. kernel_size must be odd.
ImageGrid gaussian_blur(const ImageGrid& img, int kernel_size);

/// 1-D kernel used by gaussian_blur; exposed so its normalization is testable.
std::vector<double> gaussian_kernel(int kernel_size);

/// Replaces every block_size x block_size tile by its mean. Ragged tiles at
/// the right/bottom edges use their actual extents.
ImageGrid pixelate(const ImageGrid& img, int block_size);

struct SemanticEditResult {
  ImageGrid image;
  double area_fraction = 0.0;
};

/// Replaces `region` per the fill mode. The edit always applies; the >10%
/// area filter is the caller's job (datagen drops small-area records).
SemanticEditResult semantic_edit(const ImageGrid& img, Rect region, SemanticFill fill,
                                 double fill_value, std::uint64_t seed);

/// Box-filter downscale by `factor` then nearest-neighbor upscale back.
ImageGrid resize_degrade(const ImageGrid& img, double factor);

/// Dispatch on spec.kind. Semantic edits ignore the recorded area_fraction.
ImageGrid apply_corruption(const ImageGrid& img, const CorruptionSpec& spec);

}  // namespace imagedpo
