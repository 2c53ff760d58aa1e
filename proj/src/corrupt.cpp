#include "imagedpo/corrupt.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "imagedpo/rng.hpp"

namespace imagedpo {

std::string to_string(CorruptionKind kind) {
  switch (kind) {
    case CorruptionKind::blur: return "blur";
    case CorruptionKind::pixelate: return "pixelate";
    case CorruptionKind::semantic: return "semantic";
    case CorruptionKind::resize: return "resize";
  }
  throw std::invalid_argument("unknown corruption kind");
}

CorruptionKind corruption_kind_from_string(const std::string& s) {
  if (s == "blur") return CorruptionKind::blur;
  if (s == "pixelate") return CorruptionKind::pixelate;
  if (s == "semantic") return CorruptionKind::semantic;
  if (s == "resize") return CorruptionKind::resize;
  throw std::invalid_argument("unknown corruption kind '" + s + "'");
}

std::string to_string(SemanticFill fill) {
  switch (fill) {
    case SemanticFill::noise: return "noise";
    case SemanticFill::constant: return "constant";
    case SemanticFill::donor_patch: return "donor-patch";
  }
  throw std::invalid_argument("unknown semantic fill");
}

SemanticFill semantic_fill_from_string(const std::string& s) {
  if (s == "noise") return SemanticFill::noise;
  if (s == "constant") return SemanticFill::constant;
  if (s == "donor-patch") return SemanticFill::donor_patch;
  throw std::invalid_argument("unknown semantic fill '" + s + "'");
}

nlohmann::json corruption_to_json(const CorruptionSpec& spec) {
  nlohmann::json j;
  j["kind"] = to_string(spec.kind);
  j["seed"] = spec.seed;
  switch (spec.kind) {
    case CorruptionKind::blur:
      j["kernel_size"] = spec.kernel_size;
      break;
    case CorruptionKind::pixelate:
      j["block_size"] = spec.block_size;
      break;
    case CorruptionKind::semantic:
      j["region"] = {spec.region.x, spec.region.y, spec.region.w, spec.region.h};
      j["fill"] = to_string(spec.fill);
      if (spec.fill == SemanticFill::constant) j["fill_value"] = spec.fill_value;
      if (spec.area_fraction >= 0.0) j["area_fraction"] = spec.area_fraction;
      break;
    case CorruptionKind::resize:
      j["factor"] = spec.factor;
      break;
  }
  return j;
}

CorruptionSpec corruption_from_json(const nlohmann::json& j) {
  CorruptionSpec spec;
  spec.kind = corruption_kind_from_string(j.at("kind").get<std::string>());
  spec.seed = j.value("seed", std::uint64_t{0});
  switch (spec.kind) {
    case CorruptionKind::blur:
      spec.kernel_size = j.at("kernel_size").get<int>();
      break;
    case CorruptionKind::pixelate:
      spec.block_size = j.at("block_size").get<int>();
      break;
    case CorruptionKind::semantic: {
      if (j.contains("region")) {
        const auto& r = j.at("region");
        spec.region = Rect{r.at(0).get<int>(), r.at(1).get<int>(), r.at(2).get<int>(),
                           r.at(3).get<int>()};
      }
      spec.fill = semantic_fill_from_string(j.value("fill", std::string("noise")));
      spec.fill_value = j.value("fill_value", 0.0);
      spec.area_fraction = j.value("area_fraction", -1.0);
      break;
    }
    case CorruptionKind::resize:
      spec.factor = j.at("factor").get<double>();
      break;
  }
  return spec;
}

std::vector<double> gaussian_kernel(int kernel_size) {
  if (kernel_size < 1 || kernel_size % 2 == 0)
    throw std::invalid_argument("gaussian_kernel: kernel_size must be odd and >= 1");
  const double sigma = kernel_size / 6.0;
  const int center = (kernel_size - 1) / 2;
  std::vector<double> k(static_cast<std::size_t>(kernel_size));
  double sum = 0.0;
  for (int i = 0; i < kernel_size; ++i) {
    const double t = (i - center) / sigma;
    k[i] = std::exp(-0.5 * t * t);
    sum += k[i];
  }
  for (double& v : k) v /= sum;
  return k;
}

namespace {

inline int reflect_index(int i, int n) {
  if (i < 0) return -i - 1;
  if (i >= n) return 2 * n - 1 - i;
  return i;
}

}  // namespace

ImageGrid gaussian_blur(const ImageGrid& img, int kernel_size) {
  validate_image(img);
  if (kernel_size < 1 || kernel_size % 2 == 0)
    throw std::invalid_argument("gaussian_blur: kernel_size must be odd and >= 1");
  if (kernel_size > 2 * std::min(img.width, img.height) + 1)
    throw std::invalid_argument("gaussian_blur: kernel larger than 2*min(dim)+1");
  if (kernel_size == 1) return img;

  const std::vector<double> kernel = gaussian_kernel(kernel_size);
  const int half = (kernel_size - 1) / 2;

  ImageGrid tmp(img.width, img.height);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      double acc = 0.0;
      for (int t = -half; t <= half; ++t)
        acc += kernel[static_cast<std::size_t>(t + half)] * img.at(reflect_index(x + t, img.width), y);
      tmp.at(x, y) = acc;
    }

  ImageGrid out(img.width, img.height);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      double acc = 0.0;
      for (int t = -half; t <= half; ++t)
        acc += kernel[static_cast<std::size_t>(t + half)] * tmp.at(x, reflect_index(y + t, img.height));
      out.at(x, y) = std::clamp(acc, 0.0, 1.0);
    }
  return out;
}

ImageGrid pixelate(const ImageGrid& img, int block_size) {
  validate_image(img);
  if (block_size <= 0) throw std::invalid_argument("pixelate: block_size must be >= 1");
  if (block_size == 1) return img;

  ImageGrid out(img.width, img.height);
  for (int y0 = 0; y0 < img.height; y0 += block_size) {
    const int y1 = std::min(y0 + block_size, img.height);
    for (int x0 = 0; x0 < img.width; x0 += block_size) {
      const int x1 = std::min(x0 + block_size, img.width);
      const double m = tile_mean(img, x0, y0, x1, y1);
      for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) out.at(x, y) = m;
    }
  }
  return out;
}

SemanticEditResult semantic_edit(const ImageGrid& img, Rect region, SemanticFill fill,
                                 double fill_value, std::uint64_t seed) {
  validate_image(img);
  if (region.w <= 0 || region.h <= 0 || region.x < 0 || region.y < 0 ||
      region.x + region.w > img.width || region.y + region.h > img.height)
    throw std::invalid_argument("semantic_edit: region out of bounds");
  if (fill == SemanticFill::constant && !(fill_value >= 0.0 && fill_value <= 1.0))
    throw std::invalid_argument("semantic_edit: constant fill value outside [0,1]");

  SemanticEditResult result;
  result.image = img;
  result.area_fraction = (static_cast<double>(region.w) * region.h) /
                         (static_cast<double>(img.width) * img.height);

  switch (fill) {
    case SemanticFill::noise: {
      Rng rng(seed);
      for (int y = region.y; y < region.y + region.h; ++y)
        for (int x = region.x; x < region.x + region.w; ++x) result.image.at(x, y) = rng.uniform();
      break;
    }
    case SemanticFill::constant: {
      for (int y = region.y; y < region.y + region.h; ++y)
        for (int x = region.x; x < region.x + region.w; ++x) result.image.at(x, y) = fill_value;
      break;
    }
    case SemanticFill::donor_patch: {
      // seeded source position; avoid the region itself when possible
      Rng rng(seed);
      const int max_sx = img.width - region.w;
      const int max_sy = img.height - region.h;
      int sx = rng.uniform_int(0, max_sx);
      int sy = rng.uniform_int(0, max_sy);
      if (sx == region.x && sy == region.y && (max_sx > 0 || max_sy > 0)) {
        if (max_sx > 0)
          sx = (sx + 1) % (max_sx + 1);
        else
          sy = (sy + 1) % (max_sy + 1);
      }
      for (int dy = 0; dy < region.h; ++dy)
        for (int dx = 0; dx < region.w; ++dx)
          result.image.at(region.x + dx, region.y + dy) = img.at(sx + dx, sy + dy);
      break;
    }
  }
  return result;
}

ImageGrid resize_degrade(const ImageGrid& img, double factor) {
  validate_image(img);
  if (!(factor >= 1.0)) throw std::invalid_argument("resize_degrade: factor must be >= 1");
  const int out_w = static_cast<int>(std::floor(img.width / factor));
  const int out_h = static_cast<int>(std::floor(img.height / factor));
  if (out_w < 1 || out_h < 1)
    throw std::invalid_argument("resize_degrade: factor too large for image");
  if (out_w == img.width && out_h == img.height) return img;

  // downscale: whole-pixel partition per destination cell
  ImageGrid small(out_w, out_h);
  for (int j = 0; j < out_h; ++j) {
    const int y0 = static_cast<int>((static_cast<long long>(j) * img.height) / out_h);
    const int y1 = static_cast<int>((static_cast<long long>(j + 1) * img.height) / out_h);
    for (int i = 0; i < out_w; ++i) {
      const int x0 = static_cast<int>((static_cast<long long>(i) * img.width) / out_w);
      const int x1 = static_cast<int>((static_cast<long long>(i + 1) * img.width) / out_w);
      small.at(i, j) = tile_mean(img, x0, y0, x1, y1);
    }
  }

  // nearest-neighbor upscale back to the original size
  ImageGrid out(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    const int sy = static_cast<int>((static_cast<long long>(y) * out_h) / img.height);
    for (int x = 0; x < img.width; ++x) {
      const int sx = static_cast<int>((static_cast<long long>(x) * out_w) / img.width);
      out.at(x, y) = small.at(sx, sy);
    }
  }
  return out;
}

ImageGrid apply_corruption(const ImageGrid& img, const CorruptionSpec& spec) {
  switch (spec.kind) {
    case CorruptionKind::blur: return gaussian_blur(img, spec.kernel_size);
    case CorruptionKind::pixelate: return pixelate(img, spec.block_size);
    case CorruptionKind::semantic:
      return semantic_edit(img, spec.region, spec.fill, spec.fill_value, spec.seed).image;
    case CorruptionKind::resize: return resize_degrade(img, spec.factor);
  }
  throw std::invalid_argument("apply_corruption: unknown kind");
}

}  // namespace imagedpo
