#include "imagedpo/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "imagedpo/rng.hpp"
#include "imagedpo/vocab.hpp"

namespace imagedpo {

std::string to_string(ShapeKind kind) {
  switch (kind) {
    case ShapeKind::disc: return "disc";
    case ShapeKind::square: return "square";
    case ShapeKind::triangle: return "triangle";
    case ShapeKind::ring: return "ring";
  }
  throw std::invalid_argument("unknown shape kind");
}

ShapeKind shape_kind_from_string(const std::string& s) {
  if (s == "disc") return ShapeKind::disc;
  if (s == "square") return ShapeKind::square;
  if (s == "triangle") return ShapeKind::triangle;
  if (s == "ring") return ShapeKind::ring;
  throw std::invalid_argument("unknown shape kind '" + s + "'");
}

double shape_area(const ShapeSpec& shape) {
  const double s = shape.size;
  switch (shape.kind) {
    case ShapeKind::disc: return std::numbers::pi * s * s;
    case ShapeKind::square: return (2.0 * s + 1.0) * (2.0 * s + 1.0);
    case ShapeKind::triangle: return (2.0 * s + 1.0) * (2.0 * s + 1.0) / 2.0;
    case ShapeKind::ring: return 0.75 * std::numbers::pi * s * s;
  }
  throw std::invalid_argument("unknown shape kind");
}

namespace {

std::size_t largest_shape(const Scene& scene) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < scene.shapes.size(); ++i)
    if (shape_area(scene.shapes[i]) > shape_area(scene.shapes[best])) best = i;
  return best;
}

int shape_token(ShapeKind kind) { return static_cast<int>(kind); }

}  // namespace

int derive_answer(const Scene& scene) {
  if (scene.shapes.empty()) throw std::invalid_argument("derive_answer: scene has no shapes");
  switch (scene.template_id) {
    case 0:
      return shape_token(scene.shapes[largest_shape(scene)].kind);
    case 1: {
      std::size_t best = 0;
      for (std::size_t i = 1; i < scene.shapes.size(); ++i)
        if (scene.shapes[i].intensity > scene.shapes[best].intensity) best = i;
      return shape_token(scene.shapes[best].kind);
    }
    case 2: {
      std::size_t best = 0;
      for (std::size_t i = 1; i < scene.shapes.size(); ++i)
        if (scene.shapes[i].intensity < scene.shapes[best].intensity) best = i;
      return shape_token(scene.shapes[best].kind);
    }
    case 3:
      return answer_id(scene.shapes.size() == 1 ? "one" : scene.shapes.size() == 2 ? "two" : "three");
    case 4:
      return answer_id(scene.shapes[largest_shape(scene)].cx < scene.width / 2 ? "left" : "right");
    case 5:
      return answer_id(scene.shapes[largest_shape(scene)].cy < scene.height / 2 ? "top" : "bottom");
    case 6:
      return answer_id(scene.background >= 0.5 ? "bright" : "dark");
    case 7:
      return answer_id(scene.shapes[largest_shape(scene)].size >= 5 ? "large" : "small");
    default:
      throw std::invalid_argument("derive_answer: unknown template");
  }
}

ImageGrid render_scene(const Scene& scene) {
  ImageGrid img(scene.width, scene.height, scene.background);
  for (const ShapeSpec& shape : scene.shapes) {
    const int s = shape.size;
    for (int y = shape.cy - s; y <= shape.cy + s; ++y) {
      if (y < 0 || y >= scene.height) continue;
      for (int x = shape.cx - s; x <= shape.cx + s; ++x) {
        if (x < 0 || x >= scene.width) continue;
        const double dx = x - shape.cx;
        const double dy = y - shape.cy;
        bool inside = false;
        switch (shape.kind) {
          case ShapeKind::disc:
            inside = dx * dx + dy * dy <= static_cast<double>(s) * s;
            break;
          case ShapeKind::square:
            inside = true;  // the loop bounds are the square
            break;
          case ShapeKind::triangle: {
            const double row = y - (shape.cy - s);  // 0 at apex
            inside = std::fabs(dx) <= row * 0.5;
            break;
          }
          case ShapeKind::ring: {
            const double d2 = dx * dx + dy * dy;
            const double inner = s * 0.5;
            inside = d2 <= static_cast<double>(s) * s && d2 >= inner * inner;
            break;
          }
        }
        if (inside) img.at(x, y) = shape.intensity;
      }
    }
  }
  return img;
}

nlohmann::json scene_to_json(const Scene& scene) {
  nlohmann::json shapes = nlohmann::json::array();
  for (const ShapeSpec& s : scene.shapes)
    shapes.push_back({{"kind", to_string(s.kind)},
                      {"cx", s.cx},
                      {"cy", s.cy},
                      {"size", s.size},
                      {"intensity", s.intensity}});
  return {{"width", scene.width},
          {"height", scene.height},
          {"background", scene.background},
          {"template", scene.template_id},
          {"shapes", shapes}};
}

Scene scene_from_json(const nlohmann::json& j) {
  Scene scene;
  scene.width = j.at("width").get<int>();
  scene.height = j.at("height").get<int>();
  scene.background = j.at("background").get<double>();
  scene.template_id = j.at("template").get<int>();
  for (const auto& js : j.at("shapes")) {
    ShapeSpec s;
    s.kind = shape_kind_from_string(js.at("kind").get<std::string>());
    s.cx = js.at("cx").get<int>();
    s.cy = js.at("cy").get<int>();
    s.size = js.at("size").get<int>();
    s.intensity = js.at("intensity").get<double>();
    scene.shapes.push_back(s);
  }
  return scene;
}

namespace {

constexpr double kMinAreaGap = 2.0;

Scene random_scene(Rng& rng, int image_size, int forced_template) {
  if (image_size < 16) throw std::invalid_argument("random_scene: image_size must be >= 16");
  Scene scene;
  scene.width = image_size;
  scene.height = image_size;
  scene.template_id = forced_template >= 0 ? forced_template : rng.uniform_int(0, kNumTemplates - 1);

  static const double backgrounds[4] = {0.05, 0.15, 0.85, 0.95};
  scene.background = backgrounds[rng.uniform_int(0, 3)];

  const int n_shapes = rng.uniform_int(1, 3);
  const int max_size = std::min(7, image_size / 4 - 1);
  const int min_size = std::min(3, max_size);

  // quadrant per shape, so shapes never overlap
  std::vector<int> quadrants = {0, 1, 2, 3};
  deterministic_shuffle(quadrants, rng);
  quadrants.resize(static_cast<std::size_t>(n_shapes));

  static const double intensity_pool[6] = {0.25, 0.35, 0.45, 0.55, 0.65, 0.75};
  std::vector<int> intensity_idx = {0, 1, 2, 3, 4, 5};
  deterministic_shuffle(intensity_idx, rng);

  // resample kinds/sizes until the analytic areas are well separated
  for (int attempt = 0; attempt < 100; ++attempt) {
    std::vector<ShapeSpec> shapes;
    std::vector<int> size_pool;
    for (int s = min_size; s <= max_size; ++s) size_pool.push_back(s);
    deterministic_shuffle(size_pool, rng);

    for (int i = 0; i < n_shapes; ++i) {
      ShapeSpec shape;
      shape.kind = static_cast<ShapeKind>(rng.uniform_int(0, 3));
      shape.size = size_pool[static_cast<std::size_t>(i) % size_pool.size()];
      shape.intensity = intensity_pool[intensity_idx[static_cast<std::size_t>(i)]];
      const int q = quadrants[static_cast<std::size_t>(i)];
      const int half_w = scene.width / 2;
      const int half_h = scene.height / 2;
      const int x0 = (q % 2) * half_w;
      const int y0 = (q / 2) * half_h;
      shape.cx = x0 + rng.uniform_int(shape.size, half_w - 1 - shape.size);
      shape.cy = y0 + rng.uniform_int(shape.size, half_h - 1 - shape.size);
      shapes.push_back(shape);
    }

    bool separated = true;
    for (std::size_t i = 0; i < shapes.size() && separated; ++i)
      for (std::size_t j = i + 1; j < shapes.size(); ++j)
        if (std::fabs(shape_area(shapes[i]) - shape_area(shapes[j])) < kMinAreaGap) {
          separated = false;
          break;
        }
    if (separated) {
      scene.shapes = std::move(shapes);
      return scene;
    }
  }
  throw std::runtime_error("random_scene: could not separate shape areas");
}

std::string scene_image_name(const std::string& id) { return "images/" + id + ".pgm"; }

QIATriplet make_triplet(const Scene& scene, const std::string& id,
                        const std::filesystem::path& out_dir) {
  QIATriplet t;
  t.id = id;
  t.scene = scene;
  t.q = tokenize_question(question_text(scene.template_id));
  t.answer = derive_answer(scene);
  t.image_ref = scene_image_name(id);
  write_pgm(render_scene(scene), out_dir / t.image_ref);
  return t;
}

std::string zero_pad(std::size_t n, int width) {
  std::string s = std::to_string(n);
  while (static_cast<int>(s.size()) < width) s.insert(s.begin(), '0');
  return s;
}

}  // namespace

std::vector<QIATriplet> synth_world(const WorldConfig& config,
                                    const std::filesystem::path& out_dir) {
  if (config.n_scenes < 1) throw std::invalid_argument("synth_world: n_scenes must be >= 1");
  if (config.expand < 0) throw std::invalid_argument("synth_world: expand must be >= 0");
  std::filesystem::create_directories(out_dir / "images");

  Rng base(config.seed);
  std::vector<QIATriplet> triplets;
  triplets.reserve(static_cast<std::size_t>(config.n_scenes) * (1 + config.expand));
  for (int i = 0; i < config.n_scenes; ++i) {
    Rng scene_rng = base.fork(static_cast<std::uint64_t>(i));
    const Scene scene = random_scene(scene_rng, config.image_size, -1);
    const std::string id = "t" + zero_pad(static_cast<std::size_t>(i), 6);
    triplets.push_back(make_triplet(scene, id, out_dir));

    // expansions derive from the base scene of this index, not chained
    const std::size_t base_idx = triplets.size() - 1;
    for (int e = 0; e < config.expand; ++e) {
      const std::uint64_t tool_seed =
          mix64(config.seed ^ mix64(static_cast<std::uint64_t>(i) * 977 + e));
      const ToolChoice choice = propose_tool(triplets[base_idx], tool_seed);
      const std::string new_id = id + "x" + std::to_string(e);
      triplets.push_back(apply_tool(triplets[base_idx], choice, out_dir, new_id));
    }
  }
  return triplets;
}

ToolChoice propose_tool(const QIATriplet& triplet, std::uint64_t seed) {
  if (triplet.scene.shapes.empty())
    throw std::invalid_argument("propose_tool: triplet has no scene shapes");
  Rng rng(seed);
  const double u = rng.uniform();
  ToolChoice choice;
  if (u < 1.0 / 3.0) {
    choice.instruction = GenerateInstr{rng.next_u64()};
  } else if (u < 2.0 / 3.0) {
    choice.instruction = EditInstr{rng.uniform_int(0, 1) == 0 ? EditOp::invert : EditOp::flip};
  } else {
    SwapInstr swap;
    swap.target = rng.uniform_int(0, static_cast<int>(triplet.scene.shapes.size()) - 1);
    const int old_kind = static_cast<int>(triplet.scene.shapes[swap.target].kind);
    swap.new_kind = static_cast<ShapeKind>((old_kind + rng.uniform_int(1, 3)) % 4);
    choice.instruction = swap;
  }
  return choice;
}

QIATriplet apply_tool(const QIATriplet& triplet, const ToolChoice& choice,
                      const std::filesystem::path& out_dir, const std::string& new_id) {
  Scene scene = triplet.scene;
  switch (choice.kind()) {
    case ToolChoice::Kind::generate: {
      Rng rng(std::get<GenerateInstr>(choice.instruction).scene_seed);
      scene = random_scene(rng, triplet.scene.width, triplet.scene.template_id);
      break;
    }
    case ToolChoice::Kind::edit: {
      const EditOp op = std::get<EditInstr>(choice.instruction).op;
      if (op == EditOp::invert) {
        scene.background = 1.0 - scene.background;
        for (ShapeSpec& s : scene.shapes) s.intensity = 1.0 - s.intensity;
      } else if (op == EditOp::flip) {
        for (ShapeSpec& s : scene.shapes) s.cx = scene.width - 1 - s.cx;
      }
      break;
    }
    case ToolChoice::Kind::object_swap: {
      const SwapInstr& swap = std::get<SwapInstr>(choice.instruction);
      if (swap.target < 0 || swap.target >= static_cast<int>(scene.shapes.size()))
        throw std::invalid_argument("apply_tool: swap target out of range");
      if (swap.new_kind == scene.shapes[swap.target].kind)
        throw std::invalid_argument("apply_tool: swap must change the shape kind");
      scene.shapes[static_cast<std::size_t>(swap.target)].kind = swap.new_kind;
      break;
    }
  }
  return make_triplet(scene, new_id, out_dir);
}

std::vector<PreferencePairRecord> build_image_pairs(const std::vector<QIATriplet>& triplets,
                                                    const std::vector<CorruptionSpec>& specs,
                                                    std::uint64_t seed,
                                                    const std::filesystem::path& dataset_dir) {
  if (specs.empty()) throw std::invalid_argument("build_image_pairs: no corruption specs");
  for (const CorruptionSpec& spec : specs)
    if (spec.kind == CorruptionKind::resize)
      throw std::invalid_argument("build_image_pairs: resize is not a training corruption");
  std::filesystem::create_directories(dataset_dir / "images_bad");

  std::vector<PreferencePairRecord> records;
  std::size_t emitted = 0;
  for (std::size_t ti = 0; ti < triplets.size(); ++ti) {
    const QIATriplet& trip = triplets[ti];
    const ImageGrid good = read_pgm(dataset_dir / trip.image_ref);
    for (std::size_t si = 0; si < specs.size(); ++si) {
      CorruptionSpec spec = specs[si];
      spec.seed = mix64(seed ^ mix64(ti * specs.size() + si));

      ImageGrid bad;
      if (spec.kind == CorruptionKind::semantic) {
        // target a seeded shape's bounding box, the detect-and-replace mock
        Rng rng(spec.seed);
        const ShapeSpec& shape =
            trip.scene.shapes[static_cast<std::size_t>(rng.uniform_int(
                0, static_cast<int>(trip.scene.shapes.size()) - 1))];
        Rect region;
        region.x = std::max(0, shape.cx - shape.size);
        region.y = std::max(0, shape.cy - shape.size);
        region.w = std::min(trip.scene.width, shape.cx + shape.size + 1) - region.x;
        region.h = std::min(trip.scene.height, shape.cy + shape.size + 1) - region.y;
        spec.region = region;
        SemanticEditResult res = semantic_edit(good, region, spec.fill, spec.fill_value, spec.seed);
        spec.area_fraction = res.area_fraction;
        if (res.area_fraction <= 0.10) continue;  // keep only clearly altered images
        bad = std::move(res.image);
      } else {
        bad = apply_corruption(good, spec);
      }
      if (bad.same_pixels(good)) continue;  // degenerate spec, no usable contrast

      PreferencePairRecord rec;
      rec.pair_id = "p" + zero_pad(emitted, 6);
      rec.q = trip.q;
      rec.answer = trip.answer;
      rec.good_image_ref = trip.image_ref;
      rec.bad_image_ref = "images_bad/" + rec.pair_id + ".pgm";
      rec.corruption = spec;
      rec.source_triplet_id = trip.id;
      write_pgm(bad, dataset_dir / rec.bad_image_ref);
      records.push_back(std::move(rec));
      ++emitted;
    }
  }
  return records;
}

std::string to_string(NegativeMode mode) {
  return mode == NegativeMode::random ? "random" : "hard";
}

NegativeMode negative_mode_from_string(const std::string& s) {
  if (s == "random") return NegativeMode::random;
  if (s == "hard") return NegativeMode::hard;
  throw std::invalid_argument("unknown negative mode '" + s + "'");
}

namespace {

int pick_negative(const QIATriplet& trip, const ImageGrid& img, NegativeMode mode,
                  const PolicyParams* ref, Rng& rng) {
  if (mode == NegativeMode::random) {
    const int draw = rng.uniform_int(0, kAnswerVocab - 2);
    return draw >= trip.answer ? draw + 1 : draw;
  }
  if (ref == nullptr)
    throw std::invalid_argument("build_text_pairs: hard negatives need a reference policy");
  const std::vector<double> lp = forward(*ref, trip.q, img);
  int best = -1;
  for (int a = 0; a < static_cast<int>(lp.size()); ++a) {
    if (a == trip.answer) continue;
    if (best < 0 || lp[a] > lp[best]) best = a;
  }
  return best;
}

}  // namespace

std::vector<TextPairRecord> build_text_pairs(const std::vector<QIATriplet>& triplets,
                                             std::uint64_t seed, NegativeMode mode,
                                             const PolicyParams* ref,
                                             const std::filesystem::path& dataset_dir) {
  if (kAnswerVocab < 2) throw std::invalid_argument("build_text_pairs: answer vocab too small");
  std::vector<TextPairRecord> records;
  for (std::size_t ti = 0; ti < triplets.size(); ++ti) {
    const QIATriplet& trip = triplets[ti];
    const ImageGrid img = read_pgm(dataset_dir / trip.image_ref);
    Rng rng(mix64(seed ^ mix64(ti)));
    TextPairRecord rec;
    rec.pair_id = "x" + zero_pad(records.size(), 6);
    rec.q = trip.q;
    rec.image_ref = trip.image_ref;
    rec.a_good = trip.answer;
    rec.a_bad = pick_negative(trip, img, mode, ref, rng);
    rec.mode = mode;
    rec.source_triplet_id = trip.id;
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<TextPairRecord> build_text_pairs_on_corrupted(
    const std::vector<QIATriplet>& triplets, const std::vector<CorruptionSpec>& specs,
    std::uint64_t seed, NegativeMode mode, const PolicyParams* ref,
    const std::filesystem::path& dataset_dir) {
  if (specs.empty())
    throw std::invalid_argument("build_text_pairs_on_corrupted: no corruption specs");
  for (const CorruptionSpec& spec : specs)
    if (spec.kind == CorruptionKind::resize)
      throw std::invalid_argument("build_text_pairs_on_corrupted: resize is not a training corruption");
  std::filesystem::create_directories(dataset_dir / "images_corrupted");

  std::vector<TextPairRecord> records;
  for (std::size_t ti = 0; ti < triplets.size(); ++ti) {
    const QIATriplet& trip = triplets[ti];
    const ImageGrid good = read_pgm(dataset_dir / trip.image_ref);
    for (std::size_t si = 0; si < specs.size(); ++si) {
      CorruptionSpec spec = specs[si];
      spec.seed = mix64(seed ^ mix64(ti * specs.size() + si));

      ImageGrid corrupted;
      if (spec.kind == CorruptionKind::semantic) {
        Rng rng(spec.seed);
        const ShapeSpec& shape =
            trip.scene.shapes[static_cast<std::size_t>(rng.uniform_int(
                0, static_cast<int>(trip.scene.shapes.size()) - 1))];
        Rect region;
        region.x = std::max(0, shape.cx - shape.size);
        region.y = std::max(0, shape.cy - shape.size);
        region.w = std::min(trip.scene.width, shape.cx + shape.size + 1) - region.x;
        region.h = std::min(trip.scene.height, shape.cy + shape.size + 1) - region.y;
        spec.region = region;
        SemanticEditResult res = semantic_edit(good, region, spec.fill, spec.fill_value, spec.seed);
        spec.area_fraction = res.area_fraction;
        if (res.area_fraction <= 0.10) continue;
        corrupted = std::move(res.image);
      } else {
        corrupted = apply_corruption(good, spec);
      }
      if (corrupted.same_pixels(good)) continue;

      TextPairRecord rec;
      rec.pair_id = "c" + zero_pad(records.size(), 6);
      rec.q = trip.q;
      rec.image_ref = "images_corrupted/" + rec.pair_id + ".pgm";
      rec.a_good = trip.answer;
      Rng neg_rng(mix64(spec.seed ^ 0xA5A5A5A5ULL));
      rec.a_bad = pick_negative(trip, corrupted, mode, ref, neg_rng);
      rec.mode = mode;
      rec.corrupted = true;
      rec.corruption = spec;
      rec.source_triplet_id = trip.id;
      write_pgm(corrupted, dataset_dir / rec.image_ref);
      records.push_back(std::move(rec));
    }
  }
  return records;
}

// --- JSONL -------------------------------------------------------------------

namespace {

std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open " + file.string());
  std::vector<nlohmann::json> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(nlohmann::json::parse(line));
  }
  return out;
}

void write_jsonl(const std::vector<nlohmann::json>& rows, const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot open for writing " + file.string());
  for (const auto& row : rows) out << row.dump() << "\n";
}

}  // namespace

void write_triplets_jsonl(const std::vector<QIATriplet>& triplets,
                          const std::filesystem::path& file) {
  std::vector<nlohmann::json> rows;
  rows.reserve(triplets.size());
  for (const QIATriplet& t : triplets)
    rows.push_back({{"id", t.id},
                    {"q_tokens", t.q},
                    {"answer", t.answer},
                    {"image", t.image_ref},
                    {"scene_params", scene_to_json(t.scene)}});
  write_jsonl(rows, file);
}

std::vector<QIATriplet> read_triplets_jsonl(const std::filesystem::path& file) {
  std::vector<QIATriplet> out;
  for (const auto& j : read_jsonl(file)) {
    QIATriplet t;
    t.id = j.at("id").get<std::string>();
    t.q = j.at("q_tokens").get<std::vector<int>>();
    t.answer = j.at("answer").get<int>();
    t.image_ref = j.at("image").get<std::string>();
    t.scene = scene_from_json(j.at("scene_params"));
    out.push_back(std::move(t));
  }
  return out;
}

void write_image_pairs_jsonl(const std::vector<PreferencePairRecord>& records,
                             const std::filesystem::path& file) {
  std::vector<nlohmann::json> rows;
  rows.reserve(records.size());
  for (const PreferencePairRecord& r : records)
    rows.push_back({{"pair_id", r.pair_id},
                    {"q_tokens", r.q},
                    {"answer", r.answer},
                    {"good", r.good_image_ref},
                    {"bad", r.bad_image_ref},
                    {"corruption", corruption_to_json(r.corruption)},
                    {"source_id", r.source_triplet_id}});
  write_jsonl(rows, file);
}

std::vector<PreferencePairRecord> read_image_pairs_jsonl(const std::filesystem::path& file) {
  std::vector<PreferencePairRecord> out;
  for (const auto& j : read_jsonl(file)) {
    PreferencePairRecord r;
    r.pair_id = j.at("pair_id").get<std::string>();
    r.q = j.at("q_tokens").get<std::vector<int>>();
    r.answer = j.at("answer").get<int>();
    r.good_image_ref = j.at("good").get<std::string>();
    r.bad_image_ref = j.at("bad").get<std::string>();
    r.corruption = corruption_from_json(j.at("corruption"));
    r.source_triplet_id = j.at("source_id").get<std::string>();
    out.push_back(std::move(r));
  }
  return out;
}

void write_text_pairs_jsonl(const std::vector<TextPairRecord>& records,
                            const std::filesystem::path& file) {
  std::vector<nlohmann::json> rows;
  rows.reserve(records.size());
  for (const TextPairRecord& r : records) {
    nlohmann::json j = {{"pair_id", r.pair_id},       {"q_tokens", r.q},
                        {"image", r.image_ref},       {"a_good", r.a_good},
                        {"a_bad", r.a_bad},           {"negative_mode", to_string(r.mode)},
                        {"source_id", r.source_triplet_id}};
    if (r.corrupted) j["corruption"] = corruption_to_json(r.corruption);
    rows.push_back(std::move(j));
  }
  write_jsonl(rows, file);
}

std::vector<TextPairRecord> read_text_pairs_jsonl(const std::filesystem::path& file) {
  std::vector<TextPairRecord> out;
  for (const auto& j : read_jsonl(file)) {
    TextPairRecord r;
    r.pair_id = j.at("pair_id").get<std::string>();
    r.q = j.at("q_tokens").get<std::vector<int>>();
    r.image_ref = j.at("image").get<std::string>();
    r.a_good = j.at("a_good").get<int>();
    r.a_bad = j.at("a_bad").get<int>();
    r.mode = negative_mode_from_string(j.at("negative_mode").get<std::string>());
    r.source_triplet_id = j.value("source_id", std::string{});
    if (j.contains("corruption")) {
      r.corrupted = true;
      r.corruption = corruption_from_json(j.at("corruption"));
    }
    out.push_back(std::move(r));
  }
  return out;
}

ImagePrefBatch load_image_batch(const std::vector<PreferencePairRecord>& records,
                                const std::filesystem::path& dataset_dir) {
  ImagePrefBatch batch;
  batch.items.reserve(records.size());
  for (const PreferencePairRecord& r : records) {
    ImagePrefItem item;
    item.q = r.q;
    item.answer = r.answer;
    item.img_good = read_pgm(dataset_dir / r.good_image_ref);
    item.img_bad = read_pgm(dataset_dir / r.bad_image_ref);
    batch.items.push_back(std::move(item));
  }
  return batch;
}

TextPrefBatch load_text_batch(const std::vector<TextPairRecord>& records,
                              const std::filesystem::path& dataset_dir) {
  TextPrefBatch batch;
  batch.items.reserve(records.size());
  for (const TextPairRecord& r : records) {
    TextPrefItem item;
    item.q = r.q;
    item.img = read_pgm(dataset_dir / r.image_ref);
    item.a_good = r.a_good;
    item.a_bad = r.a_bad;
    batch.items.push_back(std::move(item));
  }
  return batch;
}

LabeledBatch load_labeled_batch(const std::vector<QIATriplet>& triplets,
                                const std::filesystem::path& dataset_dir) {
  LabeledBatch batch;
  batch.reserve(triplets.size());
  for (const QIATriplet& t : triplets)
    batch.push_back({t.q, read_pgm(dataset_dir / t.image_ref), t.answer});
  return batch;
}

}  // namespace imagedpo
