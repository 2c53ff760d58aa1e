#include "imagedpo/policy.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "imagedpo/diffcore.hpp"
#include "imagedpo/rng.hpp"

namespace imagedpo {

int PolicyDims::patch_grid() const {
  const int g = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n_patches))));
  if (g * g != n_patches)
    throw std::invalid_argument("PolicyDims: n_patches must be a perfect square");
  return g;
}

std::size_t PolicyDims::flat_size() const { return layout(*this).total; }

ParamLayout layout(const PolicyDims& d) {
  if (d.embed_dim <= 0 || d.hidden <= 0 || d.n_patches <= 0 || d.question_vocab <= 0 ||
      d.answer_vocab <= 0)
    throw std::invalid_argument("PolicyDims: all dimensions must be positive");
  ParamLayout l;
  l.question_embed = 0;
  l.w_img = l.question_embed + static_cast<std::size_t>(d.question_vocab) * d.embed_dim;
  l.w_q = l.w_img + static_cast<std::size_t>(d.hidden) * d.n_patches;
  l.b = l.w_q + static_cast<std::size_t>(d.hidden) * d.embed_dim;
  l.u = l.b + static_cast<std::size_t>(d.hidden);
  l.c = l.u + static_cast<std::size_t>(d.answer_vocab) * d.hidden;
  l.total = l.c + static_cast<std::size_t>(d.answer_vocab);
  return l;
}

void validate_params(const PolicyParams& params) {
  if (params.flat.size() != layout(params.dims).total)
    throw std::invalid_argument("PolicyParams: flat length does not match dims");
  for (double v : params.flat)
    if (!std::isfinite(v)) throw std::invalid_argument("PolicyParams: non-finite entry");
}

PolicyParams init_params(std::uint64_t seed, const PolicyDims& dims) {
  PolicyParams params(dims);
  params.seed = seed;
  Rng rng(seed);
  for (double& v : params.flat) v = rng.uniform(-0.1, 0.1);
  return params;
}

PolicyParams clone_as_reference(const PolicyParams& params) { return params; }

std::vector<double> image_features(const ImageGrid& img, int patch_grid) {
  validate_image(img);
  if (patch_grid <= 0) throw std::invalid_argument("image_features: patch_grid must be >= 1");
  if (img.width < patch_grid || img.height < patch_grid)
    throw std::invalid_argument("image_features: image smaller than patch grid");

  std::vector<double> features(static_cast<std::size_t>(patch_grid) * patch_grid);
  for (int j = 0; j < patch_grid; ++j) {
    const int y0 = static_cast<int>((static_cast<long long>(j) * img.height) / patch_grid);
    const int y1 = static_cast<int>((static_cast<long long>(j + 1) * img.height) / patch_grid);
    for (int i = 0; i < patch_grid; ++i) {
      const int x0 = static_cast<int>((static_cast<long long>(i) * img.width) / patch_grid);
      const int x1 = static_cast<int>((static_cast<long long>(i + 1) * img.width) / patch_grid);
      features[static_cast<std::size_t>(j) * patch_grid + i] = tile_mean(img, x0, y0, x1, y1);
    }
  }
  return features;
}

namespace {

struct ForwardTrace {
  std::vector<double> f_q;       // mean token embedding
  std::vector<double> f_i;       // patch features
  std::vector<double> hidden;    // tanh activations
  std::vector<double> log_probs;
};

ForwardTrace run_forward(const PolicyParams& params, std::span<const int> q,
                         const ImageGrid& img) {
  const PolicyDims& d = params.dims;
  const ParamLayout L = layout(d);
  if (params.flat.size() != L.total)
    throw std::invalid_argument("forward: flat length does not match dims");
  if (q.empty()) throw std::invalid_argument("forward: empty question");
  for (int t : q)
    if (t < 0 || t >= d.question_vocab)
      throw std::invalid_argument("forward: token id outside question vocab");

  const double* flat = params.flat.data();
  ForwardTrace tr;

  tr.f_q.assign(static_cast<std::size_t>(d.embed_dim), 0.0);
  for (int t : q) {
    const double* row = flat + L.question_embed + static_cast<std::size_t>(t) * d.embed_dim;
    for (int j = 0; j < d.embed_dim; ++j) tr.f_q[j] += row[j];
  }
  for (double& v : tr.f_q) v /= static_cast<double>(q.size());

  tr.f_i = image_features(img, d.patch_grid());

  // compensated accumulation: the training objectives built on this forward
  // are validated against central differences, which need the evaluation
  // noise at the ulp level
  tr.hidden.assign(static_cast<std::size_t>(d.hidden), 0.0);
  for (int i = 0; i < d.hidden; ++i) {
    NeumaierSum s;
    s.add(flat[L.b + i]);
    const double* wi = flat + L.w_img + static_cast<std::size_t>(i) * d.n_patches;
    for (int p = 0; p < d.n_patches; ++p) s.add(wi[p] * tr.f_i[p]);
    const double* wq = flat + L.w_q + static_cast<std::size_t>(i) * d.embed_dim;
    for (int j = 0; j < d.embed_dim; ++j) s.add(wq[j] * tr.f_q[j]);
    tr.hidden[i] = std::tanh(s.value());
  }

  std::vector<double> logits(static_cast<std::size_t>(d.answer_vocab));
  for (int k = 0; k < d.answer_vocab; ++k) {
    NeumaierSum s;
    s.add(flat[L.c + k]);
    const double* uk = flat + L.u + static_cast<std::size_t>(k) * d.hidden;
    for (int i = 0; i < d.hidden; ++i) s.add(uk[i] * tr.hidden[i]);
    logits[k] = s.value();
  }
  tr.log_probs = log_softmax(logits);
  return tr;
}

}  // namespace

std::vector<double> forward(const PolicyParams& params, std::span<const int> q,
                            const ImageGrid& img) {
  return run_forward(params, q, img).log_probs;
}

double log_prob(const PolicyParams& params, std::span<const int> q, const ImageGrid& img,
                int answer) {
  if (answer < 0 || answer >= params.dims.answer_vocab)
    throw std::invalid_argument("log_prob: answer id outside answer vocab");
  return run_forward(params, q, img).log_probs[static_cast<std::size_t>(answer)];
}

std::vector<double> grad_log_prob(const PolicyParams& params, std::span<const int> q,
                                  const ImageGrid& img, int answer) {
  const PolicyDims& d = params.dims;
  if (answer < 0 || answer >= d.answer_vocab)
    throw std::invalid_argument("grad_log_prob: answer id outside answer vocab");
  const ParamLayout L = layout(d);
  const ForwardTrace tr = run_forward(params, q, img);
  const double* flat = params.flat.data();

  std::vector<double> grad(L.total, 0.0);

  // d log p(a) / d logits = onehot(a) - softmax(logits)
  std::vector<double> dlogits(static_cast<std::size_t>(d.answer_vocab));
  for (int k = 0; k < d.answer_vocab; ++k)
    dlogits[k] = (k == answer ? 1.0 : 0.0) - std::exp(tr.log_probs[k]);

  for (int k = 0; k < d.answer_vocab; ++k) {
    grad[L.c + k] = dlogits[k];
    double* gu = grad.data() + L.u + static_cast<std::size_t>(k) * d.hidden;
    for (int i = 0; i < d.hidden; ++i) gu[i] = dlogits[k] * tr.hidden[i];
  }

  std::vector<double> dpre(static_cast<std::size_t>(d.hidden));
  for (int i = 0; i < d.hidden; ++i) {
    double dh = 0.0;
    for (int k = 0; k < d.answer_vocab; ++k)
      dh += flat[L.u + static_cast<std::size_t>(k) * d.hidden + i] * dlogits[k];
    dpre[i] = dh * (1.0 - tr.hidden[i] * tr.hidden[i]);
  }

  for (int i = 0; i < d.hidden; ++i) {
    grad[L.b + i] = dpre[i];
    double* gwi = grad.data() + L.w_img + static_cast<std::size_t>(i) * d.n_patches;
    for (int p = 0; p < d.n_patches; ++p) gwi[p] = dpre[i] * tr.f_i[p];
    double* gwq = grad.data() + L.w_q + static_cast<std::size_t>(i) * d.embed_dim;
    for (int j = 0; j < d.embed_dim; ++j) gwq[j] = dpre[i] * tr.f_q[j];
  }

  std::vector<double> dfq(static_cast<std::size_t>(d.embed_dim), 0.0);
  for (int j = 0; j < d.embed_dim; ++j) {
    double s = 0.0;
    for (int i = 0; i < d.hidden; ++i)
      s += flat[L.w_q + static_cast<std::size_t>(i) * d.embed_dim + j] * dpre[i];
    dfq[j] = s;
  }
  const double inv_len = 1.0 / static_cast<double>(q.size());
  for (int t : q) {
    double* ge = grad.data() + L.question_embed + static_cast<std::size_t>(t) * d.embed_dim;
    for (int j = 0; j < d.embed_dim; ++j) ge[j] += dfq[j] * inv_len;
  }
  return grad;
}

namespace {

void put_le64(std::ofstream& out, std::uint64_t bits) {
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xFF);
  out.write(reinterpret_cast<const char*>(buf), 8);
}

std::uint64_t get_le64(std::ifstream& in) {
  unsigned char buf[8];
  in.read(reinterpret_cast<char*>(buf), 8);
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return bits;
}

}  // namespace

void save_params(const PolicyParams& params, const std::filesystem::path& bin_path) {
  validate_params(params);
  std::ofstream out(bin_path, std::ios::binary);
  if (!out) throw std::runtime_error("save_params: cannot open " + bin_path.string());
  for (double v : params.flat) put_le64(out, std::bit_cast<std::uint64_t>(v));
  if (!out) throw std::runtime_error("save_params: write failed: " + bin_path.string());

  nlohmann::json sidecar;
  sidecar["dims"] = {{"embed_dim", params.dims.embed_dim},
                     {"hidden", params.dims.hidden},
                     {"n_patches", params.dims.n_patches},
                     {"question_vocab", params.dims.question_vocab},
                     {"answer_vocab", params.dims.answer_vocab}};
  sidecar["seed"] = params.seed;
  std::ofstream js(bin_path.string() + ".json");
  if (!js) throw std::runtime_error("save_params: cannot open sidecar for " + bin_path.string());
  js << sidecar.dump(2) << "\n";
}

PolicyParams load_params(const std::filesystem::path& bin_path) {
  std::ifstream js(bin_path.string() + ".json");
  if (!js) throw std::runtime_error("load_params: missing sidecar for " + bin_path.string());
  nlohmann::json sidecar = nlohmann::json::parse(js);
  PolicyDims dims;
  const auto& jd = sidecar.at("dims");
  dims.embed_dim = jd.at("embed_dim").get<int>();
  dims.hidden = jd.at("hidden").get<int>();
  dims.n_patches = jd.at("n_patches").get<int>();
  dims.question_vocab = jd.at("question_vocab").get<int>();
  dims.answer_vocab = jd.at("answer_vocab").get<int>();

  PolicyParams params(dims);
  params.seed = sidecar.value("seed", std::uint64_t{0});
  std::ifstream in(bin_path, std::ios::binary);
  if (!in) throw std::runtime_error("load_params: cannot open " + bin_path.string());
  for (double& v : params.flat) {
    v = std::bit_cast<double>(get_le64(in));
    if (!in) throw std::runtime_error("load_params: truncated file: " + bin_path.string());
  }
  validate_params(params);
  return params;
}

}  // namespace imagedpo
