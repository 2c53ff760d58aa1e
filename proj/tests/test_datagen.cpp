#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "imagedpo/datagen.hpp"
#include "imagedpo/rng.hpp"
#include "imagedpo/vocab.hpp"

using namespace imagedpo;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("imagedpo_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

// Independent ground-truth checker: re-derives the answer from the JSON
// scene parameters with its own area/threshold table.
int oracle_answer(const nlohmann::json& scene_params) {
  struct OShape {
    std::string kind;
    int cx, cy, size;
    double intensity;
  };
  std::vector<OShape> shapes;
  for (const auto& js : scene_params.at("shapes"))
    shapes.push_back({js.at("kind").get<std::string>(), js.at("cx").get<int>(),
                      js.at("cy").get<int>(), js.at("size").get<int>(),
                      js.at("intensity").get<double>()});
  const int width = scene_params.at("width").get<int>();
  const int height = scene_params.at("height").get<int>();
  const double background = scene_params.at("background").get<double>();
  const int tmpl = scene_params.at("template").get<int>();

  auto area = [](const OShape& s) {
    const double pi = 3.14159265358979323846;
    if (s.kind == "disc") return pi * s.size * s.size;
    if (s.kind == "square") return (2.0 * s.size + 1.0) * (2.0 * s.size + 1.0);
    if (s.kind == "triangle") return (2.0 * s.size + 1.0) * (2.0 * s.size + 1.0) / 2.0;
    return 0.75 * pi * s.size * s.size;  // ring
  };
  auto largest = [&] {
    std::size_t best = 0;
    for (std::size_t i = 1; i < shapes.size(); ++i)
      if (area(shapes[i]) > area(shapes[best])) best = i;
    return shapes[best];
  };
  auto id_of = [](const std::string& name) { return answer_id(name); };

  switch (tmpl) {
    case 0: return id_of(largest().kind);
    case 1: {
      std::size_t best = 0;
      for (std::size_t i = 1; i < shapes.size(); ++i)
        if (shapes[i].intensity > shapes[best].intensity) best = i;
      return id_of(shapes[best].kind);
    }
    case 2: {
      std::size_t best = 0;
      for (std::size_t i = 1; i < shapes.size(); ++i)
        if (shapes[i].intensity < shapes[best].intensity) best = i;
      return id_of(shapes[best].kind);
    }
    case 3: return id_of(shapes.size() == 1 ? "one" : shapes.size() == 2 ? "two" : "three");
    case 4: return id_of(largest().cx < width / 2 ? "left" : "right");
    case 5: return id_of(largest().cy < height / 2 ? "top" : "bottom");
    case 6: return id_of(background >= 0.5 ? "bright" : "dark");
    case 7: return id_of(largest().size >= 5 ? "large" : "small");
  }
  return -1;
}

}  // namespace

TEST_CASE("single-disc scene answers its shape class by construction") {
  Scene scene;
  scene.template_id = 0;  // which shape is largest
  scene.background = 0.1;
  scene.shapes = {{ShapeKind::disc, 10, 10, 6, 0.75}};
  CHECK(derive_answer(scene) == answer_id("disc"));
  scene.template_id = 1;  // brightest
  CHECK(derive_answer(scene) == answer_id("disc"));
  scene.template_id = 3;
  CHECK(derive_answer(scene) == answer_id("one"));
  scene.template_id = 7;
  CHECK(derive_answer(scene) == answer_id("large"));
}

TEST_CASE("synth_world is byte-deterministic") {
  const fs::path a = temp_dir("world_a");
  const fs::path b = temp_dir("world_b");
  WorldConfig config;
  config.seed = 1;
  config.n_scenes = 25;
  const auto ta = synth_world(config, a);
  const auto tb = synth_world(config, b);
  REQUIRE(ta.size() == tb.size());

  write_triplets_jsonl(ta, a / "triplets.jsonl");
  write_triplets_jsonl(tb, b / "triplets.jsonl");
  CHECK(slurp(a / "triplets.jsonl") == slurp(b / "triplets.jsonl"));
  for (const auto& t : ta) CHECK(slurp(a / t.image_ref) == slurp(b / t.image_ref));

  WorldConfig other = config;
  other.seed = 2;
  const fs::path c = temp_dir("world_c");
  const auto tc = synth_world(other, c);
  CHECK(slurp(a / ta[0].image_ref) != slurp(c / tc[0].image_ref));
}

TEST_CASE("500 scenes cover most of the answer vocabulary") {
  const fs::path dir = temp_dir("world_coverage");
  WorldConfig config;
  config.seed = 7;
  config.n_scenes = 500;
  const auto triplets = synth_world(config, dir);
  std::set<int> seen;
  for (const auto& t : triplets) seen.insert(t.answer);
  CHECK(seen.size() >= static_cast<std::size_t>(kAnswerVocab * 8 / 10));
}

TEST_CASE("every generated answer matches the scene-parameter oracle") {
  const fs::path dir = temp_dir("world_oracle");
  WorldConfig config;
  config.seed = 3;
  config.n_scenes = 120;
  config.expand = 1;  // include tool-derived triplets
  const auto triplets = synth_world(config, dir);
  for (const auto& t : triplets) {
    CHECK(t.answer == oracle_answer(scene_to_json(t.scene)));
    CHECK(fs::exists(dir / t.image_ref));
    CHECK(!t.q.empty());
    for (int tok : t.q) CHECK(tok < kQuestionVocab);
  }
}

TEST_CASE("propose_tool is seeded and balanced") {
  const fs::path dir = temp_dir("tool_freq");
  WorldConfig config;
  config.seed = 5;
  config.n_scenes = 1;
  const auto triplets = synth_world(config, dir);

  CHECK(propose_tool(triplets[0], 42).kind() == propose_tool(triplets[0], 42).kind());

  std::map<ToolChoice::Kind, int> counts;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) ++counts[propose_tool(triplets[0], seed).kind()];
  for (const auto& [kind, count] : counts) {
    CHECK(count >= 200);
    CHECK(count <= 450);
  }
}

TEST_CASE("object_swap on a one-shape scene targets that shape") {
  QIATriplet trip;
  trip.scene.template_id = 0;
  trip.scene.background = 0.1;
  trip.scene.shapes = {{ShapeKind::disc, 10, 10, 6, 0.75}};
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const ToolChoice choice = propose_tool(trip, seed);
    if (choice.kind() != ToolChoice::Kind::object_swap) continue;
    const auto& swap = std::get<SwapInstr>(choice.instruction);
    CHECK(swap.target == 0);
    CHECK(swap.new_kind != ShapeKind::disc);
  }
}

TEST_CASE("apply_tool identity edit leaves image and QA unchanged") {
  const fs::path dir = temp_dir("tool_identity");
  WorldConfig config;
  config.seed = 9;
  config.n_scenes = 1;
  const auto triplets = synth_world(config, dir);

  ToolChoice identity;
  identity.instruction = EditInstr{EditOp::identity};
  const QIATriplet out = apply_tool(triplets[0], identity, dir, "copy");
  CHECK(out.answer == triplets[0].answer);
  CHECK(out.q == triplets[0].q);
  CHECK(slurp(dir / out.image_ref) == slurp(dir / triplets[0].image_ref));
}

TEST_CASE("object_swap regenerates a truthful answer") {
  const fs::path dir = temp_dir("tool_swap");
  fs::create_directories(dir / "images");
  QIATriplet trip;
  trip.id = "t0";
  trip.scene.template_id = 0;
  trip.scene.background = 0.05;
  trip.scene.shapes = {{ShapeKind::disc, 10, 10, 6, 0.75}};
  trip.scene.width = trip.scene.height = 32;
  trip.q = tokenize_question(question_text(0));
  trip.answer = derive_answer(trip.scene);
  trip.image_ref = "images/t0.pgm";
  write_pgm(render_scene(trip.scene), dir / trip.image_ref);
  REQUIRE(trip.answer == answer_id("disc"));

  ToolChoice swap;
  swap.instruction = SwapInstr{0, ShapeKind::square};
  const QIATriplet out = apply_tool(trip, swap, dir, "t0s");
  CHECK(out.answer == answer_id("square"));
  CHECK(out.answer == oracle_answer(scene_to_json(out.scene)));
  CHECK(out.q == trip.q);
}

TEST_CASE("apply_tool flip and invert keep answers truthful") {
  const fs::path dir = temp_dir("tool_edit");
  WorldConfig config;
  config.seed = 13;
  config.n_scenes = 30;
  const auto triplets = synth_world(config, dir);
  for (std::size_t i = 0; i < triplets.size(); ++i) {
    for (EditOp op : {EditOp::invert, EditOp::flip}) {
      ToolChoice choice;
      choice.instruction = EditInstr{op};
      const QIATriplet out =
          apply_tool(triplets[i], choice, dir, triplets[i].id + (op == EditOp::flip ? "f" : "v"));
      CHECK(out.answer == oracle_answer(scene_to_json(out.scene)));
    }
  }
}

TEST_CASE("build_image_pairs emits the cartesian count without semantic drops") {
  const fs::path dir = temp_dir("pairs_count");
  fs::create_directories(dir / "images");
  // ten hand-built scenes with size-7 shapes: semantic bbox 15x15/1024 > 10%
  std::vector<QIATriplet> triplets;
  for (int i = 0; i < 10; ++i) {
    QIATriplet t;
    t.id = "t" + std::to_string(i);
    t.scene.template_id = 0;
    t.scene.background = 0.1;
    t.scene.shapes = {{ShapeKind::disc, 12 + (i % 3), 12, 7, 0.65}};
    t.q = tokenize_question(question_text(0));
    t.answer = derive_answer(t.scene);
    t.image_ref = "images/" + t.id + ".pgm";
    write_pgm(render_scene(t.scene), dir / t.image_ref);
    triplets.push_back(std::move(t));
  }

  std::vector<CorruptionSpec> specs(3);
  specs[0].kind = CorruptionKind::blur;
  specs[0].kernel_size = 9;
  specs[1].kind = CorruptionKind::pixelate;
  specs[1].block_size = 4;
  specs[2].kind = CorruptionKind::semantic;
  specs[2].fill = SemanticFill::noise;

  const auto records = build_image_pairs(triplets, specs, 21, dir);
  CHECK(records.size() == 30);

  for (const auto& r : records) {
    const ImageGrid good = read_pgm(dir / r.good_image_ref);
    const ImageGrid bad = read_pgm(dir / r.bad_image_ref);
    CHECK(!good.same_pixels(bad));  // differ in at least one pixel
    CHECK(r.q == triplets[0].q);
    if (r.corruption.kind == CorruptionKind::semantic)
      CHECK(r.corruption.area_fraction > 0.10);
  }
}

TEST_CASE("semantic records below the area threshold are dropped") {
  const fs::path dir = temp_dir("pairs_drop");
  fs::create_directories(dir / "images");
  QIATriplet t;
  t.id = "small";
  t.scene.template_id = 0;
  t.scene.background = 0.9;
  t.scene.shapes = {{ShapeKind::square, 16, 16, 3, 0.25}};  // bbox 7x7 = 49/1024 < 10%
  t.q = tokenize_question(question_text(0));
  t.answer = derive_answer(t.scene);
  t.image_ref = "images/small.pgm";
  write_pgm(render_scene(t.scene), dir / t.image_ref);

  std::vector<CorruptionSpec> specs(1);
  specs[0].kind = CorruptionKind::semantic;
  specs[0].fill = SemanticFill::noise;
  CHECK(build_image_pairs({t}, specs, 3, dir).empty());

  specs[0].kind = CorruptionKind::resize;
  specs[0].factor = 2.0;
  CHECK_THROWS_AS(build_image_pairs({t}, specs, 3, dir), std::invalid_argument);
}

TEST_CASE("image pair records survive a JSONL round trip") {
  const fs::path dir = temp_dir("pairs_jsonl");
  WorldConfig config;
  config.seed = 17;
  config.n_scenes = 6;
  const auto triplets = synth_world(config, dir);
  std::vector<CorruptionSpec> specs(2);
  specs[0].kind = CorruptionKind::blur;
  specs[0].kernel_size = 7;
  specs[1].kind = CorruptionKind::semantic;
  specs[1].fill = SemanticFill::donor_patch;

  const auto records = build_image_pairs(triplets, specs, 31, dir);
  write_image_pairs_jsonl(records, dir / "pairs_image.jsonl");
  const auto back = read_image_pairs_jsonl(dir / "pairs_image.jsonl");
  REQUIRE(back.size() == records.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].pair_id == records[i].pair_id);
    CHECK(back[i].q == records[i].q);
    CHECK(back[i].answer == records[i].answer);
    CHECK(back[i].corruption.kind == records[i].corruption.kind);
    CHECK(back[i].corruption.seed == records[i].corruption.seed);
  }

  // replay: re-applying the logged corruption to the source reproduces the
  // bad image bit-exactly at the PGM byte level
  std::map<std::string, const QIATriplet*> by_id;
  for (const auto& t : triplets) by_id[t.id] = &t;
  for (const auto& r : back) {
    const ImageGrid good = read_pgm(dir / by_id.at(r.source_triplet_id)->image_ref);
    const ImageGrid replay = apply_corruption(good, r.corruption);
    write_pgm(replay, dir / "replay.pgm");
    CHECK(slurp(dir / "replay.pgm") == slurp(dir / r.bad_image_ref));
  }
}

TEST_CASE("text pairs never repeat the gold answer and are seed-stable") {
  const fs::path dir = temp_dir("text_pairs");
  WorldConfig config;
  config.seed = 19;
  config.n_scenes = 40;
  const auto triplets = synth_world(config, dir);

  const auto a = build_text_pairs(triplets, 5, NegativeMode::random, nullptr, dir);
  const auto b = build_text_pairs(triplets, 5, NegativeMode::random, nullptr, dir);
  REQUIRE(a.size() == triplets.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].a_bad != a[i].a_good);
    CHECK(a[i].a_bad == b[i].a_bad);
    CHECK(a[i].a_good == triplets[i].answer);
  }

  // hard negatives match an enumeration over the reference policy
  const PolicyParams ref = init_params(77);
  const auto hard = build_text_pairs(triplets, 5, NegativeMode::hard, &ref, dir);
  for (std::size_t i = 0; i < hard.size(); ++i) {
    const ImageGrid img = read_pgm(dir / triplets[i].image_ref);
    const auto lp = forward(ref, triplets[i].q, img);
    int best = -1;
    for (int k = 0; k < static_cast<int>(lp.size()); ++k) {
      if (k == triplets[i].answer) continue;
      if (best < 0 || lp[k] > lp[best]) best = k;
    }
    CHECK(hard[i].a_bad == best);
  }
  CHECK_THROWS_AS(build_text_pairs(triplets, 5, NegativeMode::hard, nullptr, dir),
                  std::invalid_argument);
}

TEST_CASE("corrupted text pairs log a replayable corruption") {
  const fs::path dir = temp_dir("text_corrupted");
  WorldConfig config;
  config.seed = 23;
  config.n_scenes = 12;
  const auto triplets = synth_world(config, dir);
  std::vector<CorruptionSpec> specs(2);
  specs[0].kind = CorruptionKind::blur;
  specs[0].kernel_size = 5;
  specs[1].kind = CorruptionKind::pixelate;
  specs[1].block_size = 3;

  const auto records =
      build_text_pairs_on_corrupted(triplets, specs, 29, NegativeMode::random, nullptr, dir);
  CHECK(records.size() == triplets.size() * specs.size());

  write_text_pairs_jsonl(records, dir / "pairs_text.jsonl");
  const auto back = read_text_pairs_jsonl(dir / "pairs_text.jsonl");
  REQUIRE(back.size() == records.size());

  std::map<std::string, const QIATriplet*> by_id;
  for (const auto& t : triplets) by_id[t.id] = &t;
  for (const auto& r : back) {
    REQUIRE(r.corrupted);
    const ImageGrid source = read_pgm(dir / by_id.at(r.source_triplet_id)->image_ref);
    const ImageGrid stored = read_pgm(dir / r.image_ref);
    CHECK(!stored.same_pixels(source));
    const ImageGrid replay = apply_corruption(source, r.corruption);
    write_pgm(replay, dir / "replay.pgm");
    CHECK(slurp(dir / "replay.pgm") == slurp(dir / r.image_ref));
  }
}

TEST_CASE("tokenizer round trips the question templates") {
  for (int t = 0; t < kNumTemplates; ++t) {
    const auto tokens = tokenize_question(question_text(t));
    CHECK(!tokens.empty());
    for (int tok : tokens) {
      CHECK(tok >= 0);
      CHECK(tok < kQuestionVocab);
    }
  }
  CHECK_THROWS_AS(tokenize_question("what is a zebra"), std::invalid_argument);
  CHECK(question_words().size() == static_cast<std::size_t>(kQuestionVocab));
  CHECK(answer_names().size() == static_cast<std::size_t>(kAnswerVocab));
}
