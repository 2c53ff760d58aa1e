#include "imagedpo/image.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>

#include "imagedpo/errors.hpp"

namespace imagedpo {

ImageGrid::ImageGrid(int w, int h, double value) : width(w), height(h) {
  if (w <= 0 || h <= 0) throw std::invalid_argument("ImageGrid: dimensions must be positive");
  pixels.assign(static_cast<std::size_t>(w) * h, value);
}

bool ImageGrid::same_pixels(const ImageGrid& other) const {
  return width == other.width && height == other.height && pixels == other.pixels;
}

void validate_image(const ImageGrid& img) {
  if (img.width <= 0 || img.height <= 0)
    throw std::invalid_argument("image: dimensions must be positive");
  if (img.pixels.size() != static_cast<std::size_t>(img.width) * img.height)
    throw std::invalid_argument("image: pixel buffer length != width*height");
  for (double v : img.pixels)
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("image: pixel outside [0,1]");
}

double tile_mean(const ImageGrid& img, int x0, int y0, int x1, int y1) {
  const double first = img.at(x0, y0);
  bool uniform = true;
  double sum = 0.0;
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x) {
      const double v = img.at(x, y);
      sum += v;
      if (v != first) uniform = false;
    }
  if (uniform) return first;
  return sum / (static_cast<double>(x1 - x0) * (y1 - y0));
}

namespace {

// Reads one header token, skipping whitespace and '#' comments.
std::string next_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) continue;
    break;
  }
  if (c == EOF) return tok;
  tok.push_back(static_cast<char>(c));
  while ((c = in.get()) != EOF && !std::isspace(c) && c != '#') tok.push_back(static_cast<char>(c));
  if (c != EOF) in.unget();  // leave the separator for the caller
  return tok;
}

long long parse_dim(const std::string& tok, std::istream& in, const char* what) {
  if (tok.empty()) throw FormatError(std::string("pgm: missing ") + what, in.tellg());
  for (char ch : tok)
    if (!std::isdigit(static_cast<unsigned char>(ch)))
      throw FormatError(std::string("pgm: malformed ") + what + " '" + tok + "'",
                        static_cast<long long>(in.tellg()) - static_cast<long long>(tok.size()));
  return std::stoll(tok);
}

}  // namespace

ImageGrid read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("pgm: cannot open " + path.string(), 0);

  const std::string magic = next_token(in);
  if (magic != "P5")
    throw FormatError("pgm: unsupported magic '" + magic + "' (only binary P5)", 0);

  const long long w = parse_dim(next_token(in), in, "width");
  const long long h = parse_dim(next_token(in), in, "height");
  const long long maxval = parse_dim(next_token(in), in, "maxval");
  if (w <= 0 || h <= 0) throw FormatError("pgm: non-positive dimensions", in.tellg());
  if (maxval != 255) throw FormatError("pgm: maxval must be 255, got " + std::to_string(maxval),
                                       static_cast<long long>(in.tellg()));

  // exactly one whitespace byte separates the header from the payload
  const int sep = in.get();
  if (sep == EOF || !std::isspace(sep))
    throw FormatError("pgm: missing whitespace before payload", in.tellg());

  ImageGrid img(static_cast<int>(w), static_cast<int>(h));
  std::vector<unsigned char> raw(img.pixels.size());
  const long long payload_start = in.tellg();
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size())
    throw FormatError("pgm: truncated payload, expected " + std::to_string(raw.size()) +
                          " bytes, got " + std::to_string(in.gcount()),
                      payload_start + in.gcount());
  for (std::size_t i = 0; i < raw.size(); ++i) img.pixels[i] = raw[i] / 255.0;
  return img;
}

void write_pgm(const ImageGrid& img, const std::filesystem::path& path) {
  validate_image(img);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("pgm: cannot open for writing: " + path.string());
  out << "P5\n" << img.width << " " << img.height << "\n255\n";
  std::vector<unsigned char> raw(img.pixels.size());
  for (std::size_t i = 0; i < raw.size(); ++i)
    raw[i] = static_cast<unsigned char>(std::lround(img.pixels[i] * 255.0));
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) throw std::runtime_error("pgm: write failed: " + path.string());
}

}  // namespace imagedpo
